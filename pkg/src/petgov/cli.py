"""Command-line front door: run scenarios, precompute the torque threshold,
check geodesic feasibility, run sweeps.

Exit codes are a stable contract:

    0  success (and, for simulate/sweep, no constraint violations)
    1  simulate completed but a constraint monitor flagged a violation
    2  bad configuration or arguments
    3  runtime abort (reference escaped its admissible set)
    4  torque-threshold oracle found a violating sublevel sample
    5  sweep finished with violating runs

All randomness flows from ``--seed``; nothing reads the clock or OS
entropy.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .governor import (
    BoundaryEscapeError,
    gamma_d_cached,
    gamma_d_oracle,
    gamma_d_offline,
)
from .harness import (
    PRNG_NAME,
    PerturbationSpec,
    ScenarioConfig,
    geodesic_feasibility_check,
    simulate,
    sweep,
)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_ORACLE = 4
EXIT_SWEEP = 5


def _build_metadata() -> str:
    import numba
    import pandas

    return (
        f"petgov {__version__} "
        f"(numpy {np.__version__}, numba {numba.__version__}, "
        f"pandas {pandas.__version__}; sweep PRNG: {PRNG_NAME})"
    )


def _load_config(args) -> ScenarioConfig:
    raw_path = Path(args.config)
    if not raw_path.exists():
        raise ValueError(f"config file not found: {raw_path}")
    cfg = ScenarioConfig.from_file(raw_path)
    overrides = {}
    if getattr(args, "t_final", None) is not None:
        overrides["t_final"] = args.t_final
    if getattr(args, "dt", None) is not None:
        overrides["h"] = args.dt
    if overrides:
        cfg = cfg.replaced(**overrides)
    return cfg


def _write_meta(path: Path, cfg: ScenarioConfig, extra: dict | None = None) -> None:
    meta = {
        "tool": _build_metadata(),
        "effective_config": cfg.source,
    }
    if extra:
        meta.update(extra)
    path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _write_report(path: Path, cfg: ScenarioConfig, report, gamma_d: float) -> None:
    lines = [
        "closed-loop simulation report",
        "=============================",
        "",
        f"horizon {cfg.t_final} s at step {cfg.h} s, sampling period {cfg.T_s} s",
        f"torque threshold gamma_d = {gamma_d:.9f}",
        "",
        "[report]",
    ]
    for key, value in report.as_key_values().items():
        lines.append(f"{key} = {value}")
    lines.append(f"gamma_d = {gamma_d:.17g}")
    lines.append("")
    lines.append("[effective_config]")
    lines.append(json.dumps(cfg.source, sort_keys=True))
    lines.append("")
    path.write_text("\n".join(lines))


def cmd_simulate(args) -> int:
    try:
        cfg = _load_config(args)
    except (ValueError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_csv = Path(args.out or "trajectory.csv")
    try:
        gamma_d = gamma_d_offline(cfg.inertia, cfg.gains, cfg.spec.tau_max)
        log, report = simulate(cfg, gamma_d=gamma_d)
    except BoundaryEscapeError as exc:
        print(f"runtime abort: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    out_csv.parent.mkdir(parents=True, exist_ok=True)
    log.to_csv(out_csv)
    _write_meta(out_csv.with_suffix(out_csv.suffix + ".meta.json"), cfg,
                {"gamma_d": gamma_d})
    report_path = out_csv.with_suffix(".report.txt")
    _write_report(report_path, cfg, report, gamma_d)
    status = "VIOLATION" if report.any_violation else "ok"
    print(
        f"simulate: {log.n_rows} rows -> {out_csv} ({status}; "
        f"max |tau| = {report.max_tau_norm:.6f}, "
        f"min pointing margin = {report.min_pointing_margin:.6f}, "
        f"max V - Gamma = {report.max_v_minus_gamma:.3e})"
    )
    return EXIT_VIOLATION if report.any_violation else EXIT_OK


def cmd_gamma_d(args) -> int:
    try:
        cfg = _load_config(args)
    except (ValueError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    cache_path = Path(args.out or "gamma_d_cache.txt")
    value, oracle, from_cache = gamma_d_cached(
        cfg.inertia, cfg.gains, cfg.spec.tau_max, cache_path,
        oracle_seed=args.seed if args.seed is not None else 0,
    )
    if oracle is None:
        oracle = gamma_d_oracle(
            value, cfg.inertia, cfg.gains, cfg.spec.tau_max,
            seed=args.seed if args.seed is not None else 0,
        )
    origin = "cache" if from_cache else "bisection"
    print(f"gamma_d = {value:.9f} ({origin}; artifact: {cache_path})")
    print(
        f"oracle: {oracle.n_samples} sublevel samples, "
        f"max |tau| = {oracle.max_torque_norm:.9f} "
        f"(tau_max = {oracle.tau_max})"
    )
    if not oracle.sound:
        print(
            "oracle found a sublevel sample exceeding tau_max: "
            "threshold solver is unsound",
            file=sys.stderr,
        )
        return EXIT_ORACLE
    return EXIT_OK


def cmd_check_geodesic(args) -> int:
    try:
        cfg = _load_config(args)
        if args.samples < 2:
            raise ValueError("--samples must be at least 2")
    except (ValueError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    feasible, min_margin = geodesic_feasibility_check(
        cfg.r0, cfg.r_d, cfg.spec, n_samples=args.samples
    )
    verdict = "feasible" if feasible else "infeasible"
    print(
        f"geodesic interpolation is {verdict}: "
        f"min pointing margin = {min_margin:.9f} over {args.samples} samples"
    )
    return EXIT_OK


def cmd_sweep(args) -> int:
    try:
        cfg = _load_config(args)
        if args.n < 1:
            raise ValueError("--n must be at least 1")
        if args.seed is None:
            raise ValueError("--seed is required for sweep")
    except (ValueError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    perturbation = PerturbationSpec(
        rot_sigma=args.rot_sigma, omega_sigma=args.omega_sigma
    )
    try:
        result = sweep(cfg, n=args.n, seed=args.seed, perturbation=perturbation)
    except BoundaryEscapeError as exc:
        print(f"runtime abort: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    out_csv = Path(args.out or "sweep_summary.csv")
    out_csv.parent.mkdir(parents=True, exist_ok=True)
    result.to_csv(out_csv)
    _write_meta(
        out_csv.with_suffix(out_csv.suffix + ".meta.json"),
        cfg,
        {
            "seed": args.seed,
            "n": args.n,
            "rot_sigma": args.rot_sigma,
            "omega_sigma": args.omega_sigma,
            "prng": PRNG_NAME,
        },
    )
    print(
        f"sweep: {args.n} runs (seed {args.seed}) -> {out_csv}; "
        f"pass rate {100.0 * result.pass_rate:.1f}%"
    )
    if not result.all_passed:
        print(f"violating run indices: {result.failed_indices}", file=sys.stderr)
        return EXIT_SWEEP
    return EXIT_OK


def _add_common(parser, need_seed=False):
    parser.add_argument("--config", required=True, help="scenario JSON file")
    parser.add_argument("--out", default=None, help="output artifact path")
    parser.add_argument("--t-final", dest="t_final", type=float, default=None,
                        help="override horizon (s)")
    parser.add_argument("--dt", type=float, default=None, help="override step (s)")
    parser.add_argument("--seed", type=int, default=None, help="PRNG seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="petgov",
        description="constrained attitude-control simulations on SO(3) with an "
                    "event-triggered reference governor",
    )
    parser.add_argument("--version", action="version", version=_build_metadata())
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a closed-loop scenario")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gamma-d", help="precompute the torque-saturation threshold")
    _add_common(p)
    p.set_defaults(func=cmd_gamma_d)

    p = sub.add_parser("check-geodesic",
                       help="test whether the direct interpolation crosses the cone")
    _add_common(p)
    p.add_argument("--samples", type=int, default=1001,
                   help="geodesic resolution (default 1001)")
    p.set_defaults(func=cmd_check_geodesic)

    p = sub.add_parser("sweep", help="run seeded perturbed simulations")
    _add_common(p)
    p.add_argument("--n", type=int, default=1, help="number of runs")
    p.add_argument("--rot-sigma", type=float, default=0.1,
                   help="initial attitude perturbation scale (rad)")
    p.add_argument("--omega-sigma", type=float, default=0.05,
                   help="initial rate perturbation scale (rad/s)")
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
