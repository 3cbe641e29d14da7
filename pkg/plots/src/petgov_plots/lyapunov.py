"""Energy against the safety thresholds, with trigger intervals shaded.

Blue backgrounds mark sampling intervals where the safety condition held
(reference updating), red ones where it failed (reference held).  Because
the event flag is sampled and held, shading boundaries can only sit on the
sampling grid.
"""

from __future__ import annotations

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from ._io import load_log, load_meta


def compute_shading_spans(t, flags):
    """Merge consecutive rows with equal event flag into spans.

    Returns a list of ``(t_start, t_end, flag)``.  On a valid log the flag
    only flips at sampling instants, so interior span boundaries land on
    multiples of the sampling period.
    """
    t = np.asarray(t, dtype=float)
    flags = np.asarray(flags, dtype=float)
    if len(t) == 0:
        return []
    changes = np.flatnonzero(np.diff(flags) != 0) + 1
    starts = np.concatenate(([0], changes))
    ends = np.concatenate((changes, [len(t) - 1]))
    return [
        (float(t[i]), float(t[j]), float(flags[i]))
        for i, j in zip(starts, ends)
        if j > i or len(t) == 1
    ]


def render(frame, meta, out_path) -> None:
    t = frame["t"].to_numpy()
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for t0, t1, flag in compute_shading_spans(t, frame["event_flag"].to_numpy()):
        color = "tab:blue" if flag == 1.0 else "tab:red"
        ax.axvspan(t0, t1, color=color, alpha=0.12, linewidth=0)
    ax.plot(t, frame["V"], color="black", lw=1.4, label="V")
    ax.plot(t, frame["Gamma"], color="tab:green", lw=1.2, label=r"$\Gamma$")
    ax.plot(t, frame["Gamma_d"], color="tab:purple", ls="--", lw=1.0,
            label=r"$\Gamma_d$")
    ax.plot(t, frame["Gamma_g"], color="tab:orange", ls=":", lw=1.2,
            label=r"$\Gamma_g$")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("energy / thresholds")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="upper right")
    ax.set_title(
        f"energy vs safety thresholds (sampling period {meta.T_s} s; "
        "blue = updating, red = held)"
    )
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
