"""Named verification suites with documented default corpora.

Each suite returns a list of check rows ``{"check": name, "passed": bool,
...detail fields...}``; a suite passes when every row does.  The corpora
are fixed and seeded so suite outputs are reproducible byte-for-byte.

Note on the midpoint/left-endpoint comparison: the strong gap between the
two integrators on the rotation problem is dominated by the symmetric
second-order noise fluctuation (u x dW) x dW / 2, a mean-zero term whose
accumulated size scales like sqrt(dt).  The suite therefore checks a
measured decay rate >= 0.4 (the asymptotic rate is 1/2) together with
strict error decrease and modulus preservation.
"""

from __future__ import annotations

import numpy as np

from . import diagnostics as dg
from . import fields as fd
from . import presets
from . import spectral as sp
from .dynamics import SchemeConfig, SimState
from .noise import build_noise_model
from .spectral import SpectralGrid
from .verify import (check_geometric_fact, galerkin_cauchy,
                     strato_ito_equivalence, trace_terms)

SUITE_NAMES = ("trace", "strato", "galerkin", "inequalities")


def _row(check: str, passed: bool, **info) -> dict:
    row = {"check": check, "passed": bool(passed)}
    row.update(info)
    return row


def random_unit_field(grid: SpectralGrid, rng: np.random.Generator,
                      kmax: int = 4, amplitude: float = 0.7) -> np.ndarray:
    base = np.zeros((3, grid.n, grid.n))
    base[2] = 1.0
    pert = presets.random_band_limited(grid, 3, kmax=kmax, rng=rng)
    return fd.normalize_sphere(base + amplitude * pert)


def trace_suite(grid_n: int = 32, n_modes: int = 9, s: float = 3.0,
                amplitude: float = 1.0, seed: int = 0, fields: int = 10,
                model=None) -> list[dict]:
    grid = SpectralGrid(grid_n)
    if model is None:
        model = build_noise_model(n_modes, s, amplitude, grid, seed)
    rng = np.random.default_rng(seed)
    rows = []

    rows.append(_row("f_psi_nonpositive", float(np.max(model.f_psi)) <= 0.0,
                     max_f_psi=float(np.max(model.f_psi))))
    c_re = sum(sp.l2_norm_sq(model.basis_partials[l])
               for l in range(model.truncation_n))
    rows.append(_row("c_psi_recomputed",
                     abs(c_re - model.c_psi) <= 1e-12 * (1.0 + model.c_psi),
                     stored=model.c_psi, recomputed=c_re))

    vec_rng = np.random.default_rng(seed + 1)
    zetas = vec_rng.standard_normal((1000, 3))
    geo = max(check_geometric_fact(z) / max(np.linalg.norm(z), 1e-300)
              for z in zetas)
    rows.append(_row("geometric_identity", geo <= 1e-14, max_residual=geo))

    a2_values = []
    a1_worst = 0.0
    for _ in range(fields):
        u = random_unit_field(grid, rng)
        rep = trace_terms(u, model, grid)
        a2_values.append(rep.a2_value)
        a1_worst = max(a1_worst, rep.a1_max_abs)
    a2_expected = 2.0 * model.c_psi
    a2_err = max(abs(a - a2_expected) for a in a2_values)
    spread = max(a2_values) - min(a2_values)
    rows.append(_row("a1_vanishes", a1_worst <= 1e-8, max_abs=a1_worst))
    rows.append(_row("a2_matches_2c_psi",
                     a2_err <= 1e-8 * (1.0 + model.c_psi),
                     max_error=a2_err, expected=a2_expected))
    rows.append(_row("a2_independent_of_field",
                     spread <= 1e-10 * (1.0 + model.c_psi), spread=spread))

    const_model = build_noise_model(1, s, amplitude, grid, seed)
    rep0 = trace_terms(random_unit_field(grid, rng), const_model, grid)
    rows.append(_row("constant_mode_zero_report",
                     rep0.a1_max_abs <= 1e-14 and abs(rep0.a2_value) <= 1e-14,
                     a1=rep0.a1_max_abs, a2=rep0.a2_value))
    return rows


def strato_suite(grid_n: int = 16, n_modes: int = 5, s: float = 3.0,
                 amplitude: float = 0.25, seed: int = 0,
                 dts=(1e-3, 5e-4), horizon: float = 0.1,
                 paths: int = 200) -> list[dict]:
    grid = SpectralGrid(grid_n)
    model = build_noise_model(n_modes, s, amplitude, grid, seed)
    u0 = random_unit_field(grid, np.random.default_rng(seed), amplitude=0.4)
    reports = [strato_ito_equivalence(u0, model, dt, horizon, paths, seed=seed)
               for dt in dts]
    errs = [r.strong_error for r in reports]
    rows = [_row("errors_decrease", all(b < a for a, b in zip(errs, errs[1:])),
                 errors=errs, dts=list(dts))]
    slope = float(np.polyfit(np.log(dts), np.log(errs), 1)[0])
    rows.append(_row("observed_rate_at_least_0.4", slope >= 0.4,
                     observed_order=slope))
    drift = max(r.heun_norm_drift for r in reports)
    rows.append(_row("heun_modulus_preserved", drift <= 1e-6,
                     max_modulus_drift=drift))
    rep_a = strato_ito_equivalence(u0, model, dts[0], horizon, 1, seed=seed)
    rep_b = strato_ito_equivalence(u0, model, dts[0], horizon, 1, seed=seed)
    rows.append(_row("single_path_deterministic",
                     rep_a.strong_error == rep_b.strong_error,
                     value=rep_a.strong_error))
    return rows


def galerkin_suite(grid_n: int = 32, s: float = 3.0, amplitude: float = 1.0,
                   seed: int = 0, truncations=(4, 9, 16, 25),
                   paths: int = 12, dt: float = 1e-3,
                   horizon: float = 0.05) -> list[dict]:
    grid = SpectralGrid(grid_n)
    v0, u0 = presets.smooth_small(grid)
    cfg = SchemeConfig(dt=dt, n_steps=int(round(horizon / dt)))
    decreasing = 0
    all_dists = []
    for p in range(paths):
        init = SimState(t=0.0, v=v0.copy(), u=u0.copy())
        dists = galerkin_cauchy(init, cfg, list(truncations), s, amplitude,
                                grid, seed + p)
        all_dists.append(dists)
        if all(b < a for a, b in zip(dists, dists[1:])):
            decreasing += 1
    frac = decreasing / paths
    med = [float(np.median([d[i] for d in all_dists]))
           for i in range(len(truncations) - 1)]
    return [_row("nested_distances_decrease", frac >= 0.8,
                 fraction_decreasing=frac, paths=paths,
                 median_distances=med, truncations=list(truncations))]


def inequalities_suite(grid_n: int = 32, seed: int = 0, fields: int = 100,
                       paths: int = 20, rho: float = 0.125) -> list[dict]:
    grid = SpectralGrid(grid_n)
    rows = []
    const_ratio = dg.ladyzhenskaya_check(np.ones((grid.n, grid.n)), grid)
    rows.append(_row("constant_field_ratio_is_one",
                     abs(const_ratio - 1.0) <= 1e-12, ratio=const_ratio))
    mu0 = dg.measure_mu0(grid, count=fields, seed=seed)
    rows.append(_row("quartic_ratio_bounded", np.isfinite(mu0) and mu0 >= 1.0,
                     mu0_empirical=mu0, corpus=fields))
    mu1 = dg.measure_mu1(grid, rho, n_paths=paths, seed=seed)
    rows.append(_row("localized_ratio_bounded", np.isfinite(mu1) and mu1 > 0,
                     mu1_empirical=mu1, corpus=paths))
    eps = 0.5 / mu1
    rows.append(_row("auto_threshold_admissible", eps < 1.0 / mu1,
                     epsilon1=eps, inverse_mu1=1.0 / mu1))
    return rows


def run_suite(name: str, **kwargs) -> list[dict]:
    if name == "trace":
        return trace_suite(**kwargs)
    if name == "strato":
        return strato_suite(**kwargs)
    if name == "galerkin":
        return galerkin_suite(**kwargs)
    if name == "inequalities":
        return inequalities_suite(**kwargs)
    if name == "all":
        rows = []
        for suite in SUITE_NAMES:
            for row in run_suite(suite):
                row = {"suite": suite, **row}
                rows.append(row)
        return rows
    raise ValueError(f"unknown suite {name!r}; choose from {SUITE_NAMES + ('all',)}")
