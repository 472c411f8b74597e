"""Runtime verification of the structural identities of the flow.

The central object is the energy ledger, which tracks the pathwise balance

    E(t) - E(0) + int_0^t (|grad v|^2 + |tau|^2) ds
        = t * C_psi + X(t),        X(t) = int <u x d(grad W), grad u>,

accumulated with left-endpoint quadrature matched to the stepper.  Its
``residual`` is the discrete defect of that identity and must vanish as
dt -> 0.  The remaining monitors are:

* local-energy supremum over balls (threshold detector for concentration),
* the first-crossing time with the empty-set convention (= horizon),
* the quartic/quadratic interpolation ratio and its ball-localized
  variant, whose empirical maxima calibrate the detector threshold,
* the absorbed second-derivative budget along a stopped trajectory,
* the twin-run separation functional Psi and its quartic driver integral.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fields as fd
from . import spectral as sp
from .dynamics import SimState, SchemeConfig, StepDiagnostics, step
from .noise import NoiseModel, NoiseIncrement, NoiseRng
from .spectral import SpectralGrid

__all__ = [
    "EnergyLedger", "ledger_update", "ConcentrationMonitor",
    "local_energy_sup", "concentration_time", "ladyzhenskaya_check",
    "struwe_check", "l2h2_monitor", "gronwall_psi", "gronwall_twin_run",
    "measure_mu0", "measure_mu1", "random_director_path",
]


@dataclass
class EnergyLedger:
    """Running terms of the pathwise energy balance (one trajectory)."""

    e0: float
    e_t: float
    dissipation: float = 0.0
    martingale_x: float = 0.0
    trace_drift: float = 0.0
    residual: float = 0.0
    c_psi: float = 0.0
    t: float = 0.0
    # side accumulators used by the absorption monitor
    cum_grad_v_sq: float = 0.0
    cum_delta_u_sq: float = 0.0
    cum_grad_u_sq: float = 0.0

    @classmethod
    def start(cls, v: np.ndarray, u: np.ndarray, grid: SpectralGrid,
              c_psi: float) -> "EnergyLedger":
        e = fd.energy(v, u, grid)
        return cls(e0=e, e_t=e, c_psi=c_psi)


def ledger_update(ledger: EnergyLedger, state_before: SimState,
                  state_after: SimState, increment: NoiseIncrement, dt: float,
                  grid: SpectralGrid,
                  diag: StepDiagnostics | None = None) -> EnergyLedger:
    """Fold one step into the ledger (pre-step quantities, left endpoint).

    ``diag`` may pass the stepper's own diagnostics; otherwise everything
    is recomputed from the pre-step state and the increment field (its
    spatial partials are taken spectrally).
    """
    if diag is None:
        u, v = state_before.u, state_before.v
        du = sp.partials(u, grid)
        dv = sp.partials(v, grid)
        tau = fd.tension(u, grid)
        dw = sp.partials(increment.field, grid)
        mart = sp.l2_inner(du[:, 0], fd.cross(u, dw[:, 0])) + \
               sp.l2_inner(du[:, 1], fd.cross(u, dw[:, 1]))
        grad_v_sq = sp.l2_norm_sq(dv)
        tension_sq = sp.l2_norm_sq(tau)
        grad_u_sq = sp.l2_norm_sq(du)
        delta_u_sq = sp.l2_norm_sq(sp.laplacian(u, grid))
    else:
        mart = diag.martingale_increment
        grad_v_sq = diag.grad_v_sq
        tension_sq = diag.tension_sq
        grad_u_sq = diag.grad_u_sq
        delta_u_sq = diag.delta_u_sq

    ledger.dissipation += dt * (grad_v_sq + tension_sq)
    ledger.martingale_x += mart
    ledger.trace_drift += dt * ledger.c_psi
    ledger.cum_grad_v_sq += dt * grad_v_sq
    ledger.cum_delta_u_sq += dt * delta_u_sq
    ledger.cum_grad_u_sq += dt * grad_u_sq
    ledger.t = state_after.t
    ledger.e_t = fd.energy(state_after.v, state_after.u, grid)
    ledger.residual = (ledger.e_t - ledger.e0 + ledger.dissipation
                       - ledger.trace_drift - ledger.martingale_x)
    if not np.isfinite(ledger.residual):
        raise FloatingPointError("energy ledger residual is not finite")
    return ledger


# ----------------------------------------------------------------------
# local energy over balls

class ConcentrationMonitor:
    """Ball quadrature masks plus the crossing threshold.

    The disc indicator (periodic distance <= rho) is cross-correlated with
    the energy density by FFT, which evaluates the mask quadrature at every
    grid center at once; the supremum is then a plain max with row-major
    argmax tie-break.
    """

    def __init__(self, grid: SpectralGrid, rho: float, epsilon1: float,
                 mu1: float | None = None):
        if rho < 1.0 / grid.n:
            raise ValueError(
                f"ball radius {rho} is below one grid cell (1/{grid.n})")
        if epsilon1 <= 0:
            raise ValueError(f"threshold must be positive, got {epsilon1}")
        if mu1 is not None and epsilon1 >= 1.0 / mu1:
            raise ValueError(
                f"threshold {epsilon1} is not admissible: must be < 1/mu1 = {1.0 / mu1:.6g}")
        self.rho = float(rho)
        self.epsilon1 = float(epsilon1)
        self.mu1 = mu1
        n = grid.n
        d = np.minimum(np.arange(n), n - np.arange(n)) / n
        d1, d2 = np.meshgrid(d, d, indexing="ij")
        mask = (d1 ** 2 + d2 ** 2) <= rho ** 2
        self.ball_points = int(np.count_nonzero(mask))
        self.ball_area = self.ball_points / n ** 2
        self._mask_hat = np.fft.rfft2(mask.astype(float))
        self.current_sup = 0.0
        self.zeta_estimate: float | None = None

    def ball_integrals(self, density: np.ndarray, grid: SpectralGrid) -> np.ndarray:
        """Integral of ``density`` over B(x, rho) for every center x."""
        dh = np.fft.rfft2(density)
        return np.fft.irfft2(dh * self._mask_hat, s=density.shape) / grid.n ** 2


def local_energy_sup(state: SimState, monitor: ConcentrationMonitor,
                     grid: SpectralGrid) -> tuple[float, tuple[int, int]]:
    """Largest half-integral of |v|^2 + |grad u|^2 over any ball.

    Returns the supremum and the row-major-first argmax center.
    """
    du = sp.partials(state.u, grid)
    density = 0.5 * (sp.magnitude_sq(state.v) + np.sum(du * du, axis=(0, 1)))
    vals = monitor.ball_integrals(density, grid)
    flat = int(np.argmax(vals))
    idx = (flat // grid.n, flat % grid.n)
    sup = float(vals[idx])
    monitor.current_sup = sup
    return sup, idx


def concentration_time(times: np.ndarray, sups: np.ndarray, epsilon1: float,
                       horizon: float) -> float:
    """First sample time with sup >= threshold; horizon if never reached."""
    times = np.asarray(times, dtype=float)
    sups = np.asarray(sups, dtype=float)
    hit = np.nonzero(sups >= epsilon1)[0]
    return float(times[hit[0]]) if hit.size else float(horizon)


# ----------------------------------------------------------------------
# interpolation inequality ratios

def ladyzhenskaya_check(phi: np.ndarray, grid: SpectralGrid) -> float:
    """Quartic-to-quadratic interpolation ratio; 0 for the zero field.

    ratio = int |phi|^4 / [ int |phi|^2 * int (|phi|^2 + |grad phi|^2) ]
    """
    l2 = sp.l2_norm_sq(phi)
    if l2 == 0.0:
        return 0.0
    dphi = sp.partials(phi, grid)
    l4 = sp.l4_norm4(phi)
    return l4 / (l2 * (l2 + sp.l2_norm_sq(dphi)))


def struwe_check(u_path: np.ndarray, rho: float, grid: SpectralGrid) -> float:
    """Ball-localized interpolation ratio for the gradient of a director path.

    With G = grad u, returns

        intt |G|^4  /  [ sup_{t,x} int_{B(x,rho)} |G|^2
                         * intt (|grad G|^2 + |G|^2 / rho^2) ],

    where intt is the time integral over the sampled path (uniform grid, at
    least 100 samples; the common quadrature weight cancels in the ratio).
    The running maximum of this ratio over a corpus is the empirical
    constant whose inverse bounds admissible detector thresholds.
    """
    if u_path.shape[0] < 100:
        raise ValueError(f"need >= 100 time samples, got {u_path.shape[0]}")
    monitor = ConcentrationMonitor(grid, rho, epsilon1=1.0)
    num = 0.0
    den_t = 0.0
    sup_local = 0.0
    for m in range(u_path.shape[0]):
        du = sp.partials(u_path[m], grid)
        gsq = np.sum(du * du, axis=(0, 1))
        num += sp.l4_norm4(du)
        lap_u = sp.laplacian(u_path[m], grid)
        den_t += sp.l2_norm_sq(lap_u) + sp.integral(gsq) / rho ** 2
        sup_local = max(sup_local, float(np.max(monitor.ball_integrals(gsq, grid))))
    if num == 0.0:
        return 0.0
    return num / (sup_local * den_t)


def l2h2_monitor(records: list[dict], mu1: float, epsilon1: float, rho: float,
                 c_psi: float) -> float:
    """Slack of the absorbed second-derivative budget up to the stop time.

    Uses the final record of a stopped trajectory (fields ``E``,
    ``cum_grad_v_sq``, ``cum_delta_u_sq``, ``cum_grad_u_sq``,
    ``martingale_x``, ``t``) plus the initial energy from the first record.
    Nonnegative return means the monitored inequality held on this path.
    """
    if mu1 * epsilon1 >= 1.0:
        raise ValueError("absorption requires mu1 * epsilon1 < 1")
    first, last = records[0], records[-1]
    lhs = last["cum_delta_u_sq"]
    bound = (first["E"] - last["E"] - last["cum_grad_v_sq"]
             + last["martingale_x"] + last["t"] * c_psi
             + mu1 * epsilon1 / rho ** 2 * last["cum_grad_u_sq"])
    rhs = bound / (1.0 - mu1 * epsilon1)
    return rhs - lhs


# ----------------------------------------------------------------------
# twin-run separation (discrete uniqueness monitor)

def gronwall_psi(v1: np.ndarray, u1: np.ndarray, v2: np.ndarray, u2: np.ndarray,
                 grid: SpectralGrid) -> float:
    """Separation functional Psi = (|L^{-1/2}(v1-v2)|_L2^2 + |u1-u2|_L2^2)/2,

    with L the shifted-Laplacian multiplier 1 + 4 pi^2 |k|^2.
    """
    g = v1 - v2
    gh = sp.fft(grid, g) * sp.sobolev_multiplier_pow(grid, -0.5)
    return 0.5 * (sp.l2_norm_sq_hat(grid, gh[0]) + sp.l2_norm_sq_hat(grid, gh[1])
                  + sp.l2_norm_sq(u1 - u2))


def gronwall_twin_run(init1: SimState, init2: SimState, model: NoiseModel,
                      cfg: SchemeConfig, grid: SpectralGrid, seed: int) -> dict:
    """Run two states under one noise path; report growth and driver.

    Returns psi0, psiT, log_growth = log(psiT / psi0) (None when psi0 = 0,
    in which case discrete uniqueness demands psiT <= 1e-12) and the
    quartic driver integral

        driver = int_0^T sum_j (1 + int|v_j|^4 + int|grad u_j|^4) dt

    accumulated with left-endpoint rectangles.
    """
    rng1 = NoiseRng(seed, model.truncation_n)
    rng2 = NoiseRng(seed, model.truncation_n)
    s1, s2 = init1, init2
    psi0 = gronwall_psi(s1.v, s1.u, s2.v, s2.u, grid)
    driver = 0.0
    for _ in range(cfg.n_steps):
        s1, d1, _ = step(s1, model, cfg, grid, rng1)
        s2, d2, _ = step(s2, model, cfg, grid, rng2)
        driver += cfg.dt * (2.0 + d1.v_l4 + d1.grad_u_l4 + d2.v_l4 + d2.grad_u_l4)
    psi_t = gronwall_psi(s1.v, s1.u, s2.v, s2.u, grid)
    log_growth = float(np.log(psi_t / psi0)) if psi0 > 0 else None
    return {"psi0": psi0, "psiT": psi_t, "log_growth": log_growth,
            "driver": driver}


# ----------------------------------------------------------------------
# empirical constants

def measure_mu0(grid: SpectralGrid, count: int = 100, kmax: int = 6,
                seed: int = 0) -> float:
    """Empirical quartic-interpolation constant over a random corpus.

    The constant field (ratio exactly 1) is part of the corpus, so the
    result is always >= 1.
    """
    from .presets import random_band_limited
    rng = np.random.default_rng(seed)
    best = ladyzhenskaya_check(np.ones((grid.n, grid.n)), grid)
    for _ in range(count):
        phi = random_band_limited(grid, 1, kmax=kmax, rng=rng)[0]
        best = max(best, ladyzhenskaya_check(phi, grid))
    return best


def random_director_path(grid: SpectralGrid, samples: int, kmax: int,
                         rng: np.random.Generator,
                         amplitude: float = 0.8) -> np.ndarray:
    """Smooth sphere-valued path: rotating band-limited perturbation of e3."""
    from .presets import random_band_limited
    base = np.zeros((3, grid.n, grid.n))
    base[2] = 1.0
    pert_a = random_band_limited(grid, 3, kmax=kmax, rng=rng)
    pert_b = random_band_limited(grid, 3, kmax=kmax, rng=rng)
    path = np.empty((samples, 3, grid.n, grid.n))
    phases = np.linspace(0.0, np.pi, samples)
    for m, ph in enumerate(phases):
        raw = base + amplitude * (np.cos(ph) * pert_a + np.sin(ph) * pert_b)
        path[m] = fd.normalize_sphere(raw, min_modulus=1e-12)
    return path


def measure_mu1(grid: SpectralGrid, rho: float, n_paths: int = 20,
                samples: int = 100, kmax: int = 4, seed: int = 0) -> float:
    """Empirical localized-interpolation constant over random smooth paths."""
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(n_paths):
        path = random_director_path(grid, samples, kmax, rng)
        best = max(best, struwe_check(path, rho, grid))
    return best
