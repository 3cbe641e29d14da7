"""Body-axis path on the unit sphere, with the forbidden cone and the goal.

The constrained axis traces a curve on the sphere; the forbidden region is
the spherical cap of directions closer than the cone angle allows to the
critical inertial axis (equivalently, a cap around its antipode).
"""

from __future__ import annotations

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from ._io import load_log, load_meta, rotation_stack


def _orthonormal_basis(n):
    helper = np.array([1.0, 0.0, 0.0])
    if abs(n @ helper) > 0.9:
        helper = np.array([0.0, 1.0, 0.0])
    e1 = np.cross(n, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    return e1, e2


def render(frame, meta, out_path) -> None:
    path = rotation_stack(frame, "R") @ meta.a_b
    goal = meta.r_d @ meta.a_b

    fig = plt.figure(figsize=(7, 7))
    ax = fig.add_subplot(projection="3d")

    # translucent unit sphere
    u = np.linspace(0.0, 2.0 * np.pi, 60)
    v = np.linspace(0.0, np.pi, 30)
    ax.plot_surface(
        np.outer(np.cos(u), np.sin(v)),
        np.outer(np.sin(u), np.sin(v)),
        np.outer(np.ones_like(u), np.cos(v)),
        color="lightgray",
        alpha=0.15,
        linewidth=0,
    )

    # forbidden cap: directions u with a_c . u < cos(theta_c), i.e. within
    # pi - theta_c of the antipode of the critical axis
    center = -meta.a_c
    half_angle = np.pi - meta.theta_c
    e1, e2 = _orthonormal_basis(center)
    psi = np.linspace(0.0, 2.0 * np.pi, 80)
    r = np.linspace(0.0, half_angle, 12)
    PSI, RAD = np.meshgrid(psi, r)
    cap = (
        np.cos(RAD)[..., None] * center
        + (np.sin(RAD) * np.cos(PSI))[..., None] * e1
        + (np.sin(RAD) * np.sin(PSI))[..., None] * e2
    )
    ax.plot_surface(
        cap[..., 0], cap[..., 1], cap[..., 2], color="cyan", alpha=0.5, linewidth=0
    )

    ax.plot(path[:, 0], path[:, 1], path[:, 2], color="tab:blue", lw=1.5,
            label="body axis")
    ax.scatter(*path[0], color="tab:green", s=40, label="start")
    ax.scatter(*goal, color="magenta", s=60, marker="*", label="goal")

    ax.set_box_aspect((1, 1, 1))
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_zlabel("z")
    ax.legend(loc="upper left")
    ax.set_title("constrained body-axis trajectory")
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
