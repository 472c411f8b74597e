"""Command-line entry point.

Subcommands:

* ``run``       one trajectory from a config file; writes run.ndjson,
                snapshots, and a summary; exit 0 on clean completion,
                1 on config errors, 2 on a singularity abort.
* ``ensemble``  N seeded trajectories plus an aggregate report.
* ``verify``    one of the named suites (trace, strato, galerkin,
                inequalities, all); NDJSON report plus a PASS/FAIL line
                per check; exit nonzero iff any check fails.
* ``picard``    contraction measurement of the truncated mild-solution map.
* ``galerkin``  shorthand for ``verify galerkin``.

SEL_THREADS caps ensemble worker processes and never affects results.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, SimConfig, parse_config
from .runner import json_line, run_ensemble, run_simulation


def _load_config(args) -> SimConfig:
    cfg = parse_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out_dir = args.out
    return cfg.validate()


def _cmd_run(args) -> int:
    try:
        cfg = _load_config(args)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    summary = run_simulation(cfg)
    print(f"run finished: t={summary['final_t']:.6g} "
          f"events={summary['bubbling_count']} status={summary['status']}")
    return summary["status"]


def _cmd_ensemble(args) -> int:
    try:
        cfg = _load_config(args)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    if args.paths < 2:
        print("ensemble needs --paths >= 2", file=sys.stderr)
        return 1
    agg = run_ensemble(cfg, args.paths)
    print(f"ensemble finished: paths={agg['paths']} rows={agg['rows']} "
          f"max_status={agg['max_status']}")
    return agg["max_status"]


def _emit_rows(rows, out_dir: str | None, report_name: str) -> int:
    failures = 0
    for row in rows:
        status = "PASS" if row["passed"] else "FAIL"
        label = row.get("suite", "")
        label = f"{label}/{row['check']}" if label else row["check"]
        detail = ", ".join(f"{k}={v}" for k, v in row.items()
                           if k not in ("check", "passed", "suite"))
        print(f"{status}: {label}" + (f" ({detail})" if detail else ""))
        failures += 0 if row["passed"] else 1
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / report_name, "w") as fh:
            for row in rows:
                fh.write(json_line(row) + "\n")
    print(f"{len(rows) - failures}/{len(rows)} checks passed")
    return 0 if failures == 0 else 1


def _cmd_verify(args) -> int:
    from .suites import run_suite
    try:
        kwargs = {} if args.seed is None else {"seed": args.seed}
        rows = run_suite(args.suite, **kwargs)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return _emit_rows(rows, args.out, f"verify-{args.suite}.ndjson")


def _cmd_picard(args) -> int:
    from .dynamics import picard_contraction
    from .noise import build_noise_model
    from .spectral import SpectralGrid

    grid = SpectralGrid(args.grid_n)
    seed = args.seed if args.seed is not None else 0
    model = build_noise_model(args.modes, 3.0, 0.5, grid, seed)
    report = picard_contraction(grid, model, R=args.radius,
                                t_short=args.horizon, pairs=args.pairs,
                                seed=seed)
    lip = max(report["lipschitz_ratios"])
    fp = max(report["fixed_point_ratios"]) if report["fixed_point_ratios"] else 0.0
    rows = [
        {"check": "lipschitz_ratio_below_one", "passed": lip < 1.0,
         "max_ratio": lip, "pairs": args.pairs},
        {"check": "fixed_point_geometric", "passed": fp < 0.9,
         "max_consecutive_ratio": fp,
         "diffs": report["fixed_point_diffs"]},
    ]
    return _emit_rows(rows, args.out, "picard.ndjson")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="seltorus",
        description="pseudo-spectral stochastic liquid-crystal flow on the torus")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config_required):
        p.add_argument("--config", required=config_required,
                       help="path to the run configuration file")
        p.add_argument("--seed", type=lambda s: int(s, 0), default=None,
                       help="override the master seed")
        p.add_argument("--out", default=None, help="output directory")

    p_run = sub.add_parser("run", help="integrate one trajectory")
    add_common(p_run, True)
    p_run.set_defaults(func=_cmd_run)

    p_ens = sub.add_parser("ensemble", help="integrate an ensemble of paths")
    add_common(p_ens, True)
    p_ens.add_argument("--paths", type=int, required=True)
    p_ens.set_defaults(func=_cmd_ensemble)

    p_ver = sub.add_parser("verify", help="run a verification suite")
    p_ver.add_argument("suite",
                       choices=("trace", "strato", "galerkin", "inequalities", "all"))
    add_common(p_ver, False)
    p_ver.set_defaults(func=_cmd_verify)

    p_pic = sub.add_parser("picard", help="mild-map contraction measurement")
    add_common(p_pic, False)
    p_pic.add_argument("--grid-n", type=int, default=32)
    p_pic.add_argument("--modes", type=int, default=5)
    p_pic.add_argument("--radius", type=float, default=10.0)
    p_pic.add_argument("--horizon", type=float, default=1e-3)
    p_pic.add_argument("--pairs", type=int, default=10)
    p_pic.set_defaults(func=_cmd_picard)

    p_gal = sub.add_parser("galerkin", help="nested-truncation convergence suite")
    add_common(p_gal, False)
    p_gal.set_defaults(func=lambda a: _cmd_verify(
        argparse.Namespace(suite="galerkin", seed=a.seed, out=a.out)))

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
