"""Attitude and reference error functions on a logarithmic axis."""

from __future__ import annotations

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from ._io import load_log

_FLOOR = 1e-16  # keeps exact zeros plottable on the log axis


def render(frame, out_path) -> None:
    t = frame["t"].to_numpy()
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.semilogy(
        t, np.maximum(frame["phi_R_Rd"].to_numpy(), _FLOOR),
        color="tab:blue", label=r"attitude error $\phi(R^\top R_d)$",
    )
    ax.semilogy(
        t, np.maximum(frame["phi_Rg_Rd"].to_numpy(), _FLOOR),
        color="tab:orange", label=r"reference error $\phi(R_g^\top R_d)$",
    )
    ax.set_xlabel("t [s]")
    ax.set_ylabel("error function")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    ax.set_title("convergence of attitude and reference errors")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def build_parser():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--csv", required=True, help="trajectory CSV")
    parser.add_argument("--out", required=True, help="output PNG path")
    parser.add_argument("--meta", default=None, help="unused; kept for symmetry")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        frame = load_log(args.csv)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    render(frame, args.out)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
