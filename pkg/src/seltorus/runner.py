"""Run orchestration: trajectory and ensemble drivers with file outputs.

Every numeric value written to disk uses 17-significant-digit decimal, so
files are bit-stable across re-runs with the same master seed.  Ensemble
paths are fully determined by (master seed, path index); the worker count
(env var SEL_THREADS) never affects results, only wall time.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .config import SimConfig
from .diagnostics import ConcentrationMonitor, measure_mu1
from .dynamics import SchemeConfig, SimState, run_with_continuation
from .errors import BlowUpError
from .noise import NoiseRng, build_noise_model
from .presets import build_preset
from .snapshots import read_state_snapshot, write_state_snapshot
from .spectral import SpectralGrid

RUN_SCHEMA = "seltorus.run/1"
RECORD_KEYS = ("t", "E", "dissipation", "martingale_x", "trace_drift",
               "residual", "local_sup", "constraint_err", "divergence_err",
               "zeta", "bubbling_count")


def fmt_number(x) -> str:
    if x is None:
        return "null"
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def json_line(obj: dict) -> str:
    """Deterministic one-line JSON with 17-significant-digit floats."""
    parts = []
    for key, val in obj.items():
        if isinstance(val, str):
            parts.append(f'"{key}": {json.dumps(val)}')
        elif isinstance(val, (list, tuple, np.ndarray)):
            inner = ", ".join(fmt_number(v) for v in val)
            parts.append(f'"{key}": [{inner}]')
        else:
            parts.append(f'"{key}": {fmt_number(val)}')
    return "{" + ", ".join(parts) + "}"


def resolve_epsilon1(cfg: SimConfig, grid: SpectralGrid) -> tuple[float, float | None]:
    """Numeric threshold and (when auto-selected) the measured constant."""
    if cfg.epsilon1 == "auto":
        mu1 = measure_mu1(grid, cfg.rho, seed=cfg.seed)
        return 0.5 / mu1, mu1
    return float(cfg.epsilon1), None


def initial_state(cfg: SimConfig, grid: SpectralGrid) -> SimState:
    if cfg.snapshot is not None:
        t, v, u = read_state_snapshot(cfg.snapshot)
        return SimState(t=t, v=v, u=u, step_index=0)
    v, u = build_preset(cfg.preset, grid)
    return SimState(t=0.0, v=v, u=u, step_index=0)


def run_simulation(cfg: SimConfig, out_dir: str | Path | None = None,
                   path_index: int = 0, write_files: bool = True) -> dict:
    """One trajectory; returns the summary dict (artifacts under out_dir).

    ``status`` is 0 for a clean run and 2 for a singularity/blow-up abort
    (partial artifacts are still written).
    """
    grid = SpectralGrid(cfg.grid_n)
    model = build_noise_model(cfg.noise_n, cfg.noise_s, cfg.noise_amplitude,
                              grid, cfg.seed)
    eps, mu1 = resolve_epsilon1(cfg, grid)
    monitor = ConcentrationMonitor(grid, cfg.rho, eps, mu1=mu1)
    rng = NoiseRng(cfg.seed, model.truncation_n, path=path_index)
    state = initial_state(cfg, grid)
    scheme = SchemeConfig(dt=cfg.dt, n_steps=cfg.n_steps)

    out = Path(out_dir) if out_dir is not None else Path(cfg.out_dir)
    if write_files:
        out.mkdir(parents=True, exist_ok=True)

    status = 0
    blow_up = False
    sample_counter = [0]

    def on_sample(st, row):
        if write_files and cfg.snapshot_stride > 0:
            if sample_counter[0] % cfg.snapshot_stride == 0:
                write_state_snapshot(
                    out / f"state-{path_index:04d}-{st.step_index:08d}.snap", st)
        sample_counter[0] += 1

    try:
        records, cont, final = run_with_continuation(
            state, model, scheme, monitor, grid, rng,
            sample_stride=cfg.sample_stride, on_sample=on_sample)
    except BlowUpError:
        records, cont, final = [], None, state
        blow_up = True
        status = 2
    if cont is not None and cont.unresolved:
        status = 2

    suffix = f"-{path_index:04d}" if path_index else ""
    if write_files:
        with open(out / f"run{suffix}.ndjson", "w") as fh:
            for row in records:
                line = {"schema": RUN_SCHEMA}
                line.update({k: row[k] for k in RECORD_KEYS})
                fh.write(json_line(line) + "\n")
        write_state_snapshot(out / f"final{suffix}.snap", final)

    summary = {
        "schema": "seltorus.summary/1",
        "status": status,
        "blow_up": blow_up,
        "epsilon1": eps,
        "mu1_empirical": mu1,
        "j_count": cont.j_count if cont else None,
        "bubbling_count": cont.restart_count if cont else None,
        "bubbling_times": list(cont.bubbling_times) if cont else [],
        "unresolved": cont.unresolved if cont else True,
        "zeta": records[-1]["zeta"] if records else None,
        "max_abs_residual": max((abs(r["residual"]) for r in records),
                                default=None),
        "final_t": final.t,
        "records": len(records),
    }
    if write_files:
        with open(out / f"summary{suffix}.json", "w") as fh:
            fh.write(json_line(summary) + "\n")
    summary["_records"] = records
    return summary


def _ensemble_worker(payload) -> dict:
    cfg_dict, path_index, out_dir = payload
    cfg = SimConfig(**cfg_dict).validate()
    return run_simulation(cfg, out_dir=out_dir, path_index=path_index)


def worker_count() -> int:
    raw = os.environ.get("SEL_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_ensemble(cfg: SimConfig, paths: int, out_dir: str | Path | None = None,
                 write_files: bool = True) -> dict:
    """Run ``paths`` independent trajectories and aggregate their ledgers.

    Path p draws its increments from streams keyed by (seed, p, mode), so
    the ensemble is reproducible from the master seed alone and identical
    for any worker count.
    """
    if paths < 1:
        raise ValueError(f"need at least one path, got {paths}")
    out = Path(out_dir) if out_dir is not None else Path(cfg.out_dir)
    if write_files:
        out.mkdir(parents=True, exist_ok=True)

    # freeze the auto threshold once so every path shares it
    grid = SpectralGrid(cfg.grid_n)
    eps, _ = resolve_epsilon1(cfg, grid)
    cfg_dict = {**asdict(cfg), "epsilon1": eps}

    payloads = [(cfg_dict, p, str(out) if write_files else None) for p in range(paths)]
    workers = worker_count()
    if workers > 1 and paths > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_ensemble_worker, payloads))
    else:
        results = [_ensemble_worker(p) for p in payloads]

    # aggregate per sample time, deterministic path order
    per_path = [r.pop("_records") for r in results]
    n_samples = min(len(r) for r in per_path)
    times = [per_path[0][i]["t"] for i in range(n_samples)]

    def column(key, i):
        return np.array([rec[i][key] for rec in per_path])

    agg_rows = []
    for i in range(n_samples):
        e = column("E", i)
        res = column("residual", i)
        balance = e - column("E", 0) + column("dissipation", i)
        agg_rows.append({
            "t": times[i],
            "mean_E": float(np.mean(e)),
            "se_E": float(np.std(e, ddof=1) / np.sqrt(paths)) if paths > 1 else 0.0,
            "mean_residual": float(np.mean(res)),
            "se_residual": (float(np.std(res, ddof=1) / np.sqrt(paths))
                            if paths > 1 else 0.0),
            "mean_balance": float(np.mean(balance)),
            "se_balance": (float(np.std(balance, ddof=1) / np.sqrt(paths))
                           if paths > 1 else 0.0),
            "trace_drift": per_path[0][i]["trace_drift"],
            "median_abs_residual": float(np.median(np.abs(res))),
        })

    aggregate = {
        "schema": "seltorus.ensemble/1",
        "paths": paths,
        "epsilon1": eps,
        "max_status": max(r["status"] for r in results),
        "rows": len(agg_rows),
    }
    if write_files:
        with open(out / "aggregate.ndjson", "w") as fh:
            fh.write(json_line(aggregate) + "\n")
            for row in agg_rows:
                fh.write(json_line(row) + "\n")
    aggregate["_rows"] = agg_rows
    aggregate["_summaries"] = results
    return aggregate
