"""Control torque components and norm against the saturation limit."""

from __future__ import annotations

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from ._io import load_log, load_meta


def render(frame, meta, out_path) -> None:
    t = frame["t"].to_numpy()
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for name, color in (("tau_x", "tab:blue"), ("tau_y", "tab:orange"),
                        ("tau_z", "tab:green")):
        ax.plot(t, frame[name], color=color, lw=1.0, label=name)
    ax.plot(t, frame["tau_norm"], color="black", lw=1.4, label=r"$\|\tau\|$")
    ax.axhline(meta.tau_max, color="tab:red", ls="--", lw=1.2,
               label=r"$\tau_{max}$")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("torque [N m]")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="upper right", ncols=2)
    ax.set_title("control torque under the saturation limit")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def build_parser():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--csv", required=True, help="trajectory CSV")
    parser.add_argument("--out", required=True, help="output PNG path")
    parser.add_argument("--meta", default=None, help="metadata sidecar JSON")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        frame = load_log(args.csv)
        meta = load_meta(args.csv, args.meta)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    render(frame, meta, args.out)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
