"""Time integration of the coupled velocity/director system.

One step of the default integrator (left-endpoint noise, Stokes/heat
implicit, everything nonlinear explicit and dealiased):

    (1 + dt 4 pi^2 |k|^2) v^_{new} = v^ - dt P[ v.grad v + div(grad u (.) grad u) ]^
    (1 + dt 4 pi^2 |k|^2) u^_*    = [ u + dt (|grad u|^2 u - v.grad u + F_psi u)
                                      + u x dW ]^
    u_new = u_* / |u_*|            (pointwise)

P is the divergence-free projection, F_psi = -sum_l psi_l^2 <= 0 the
left-endpoint conversion drift of the sphere-preserving (midpoint) noise
term.  The projection step restores the sphere constraint exactly at every
step; a modulus below 1e-8 anywhere aborts the trajectory.

A midpoint (Heun) variant of the noise substep is provided for
cross-validation: it drops the conversion drift and applies the
second-order rotation update u + u x dW + (u x dW) x dW / 2 instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import spectral as sp
from . import fields as fd
from .errors import BlowUpError, SingularityError
from .noise import NoiseModel, NoiseIncrement, NoiseRng, sample_increment
from .spectral import SpectralGrid

__all__ = [
    "SimState", "SchemeConfig", "StepDiagnostics", "ContinuationRecord",
    "step", "recover_pressure", "picard_iterate", "picard_contraction",
    "run_with_continuation",
]

INTEGRATORS = ("ito_semi_implicit", "heun_stratonovich")


@dataclass
class SimState:
    """Trajectory state at one time level."""

    t: float
    v: np.ndarray           # (2, N, N), divergence-free
    u: np.ndarray           # (3, N, N), unit vectors
    step_index: int = 0


@dataclass
class SchemeConfig:
    dt: float
    n_steps: int
    integrator: str = "ito_semi_implicit"
    dealias: bool = True
    constraint_tol: float = 1e-10

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.n_steps < 0:
            raise ValueError(f"n_steps must be >= 0, got {self.n_steps}")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}")

    @property
    def horizon(self) -> float:
        return self.dt * self.n_steps


@dataclass
class StepDiagnostics:
    """Pre-step quantities consumed by the energy ledger and monitors."""

    grad_v_sq: float        # |grad v|_L2^2
    tension_sq: float       # |tau|_L2^2
    grad_u_sq: float        # |grad u|_L2^2
    delta_u_sq: float       # |lap u|_L2^2
    v_l4: float             # int |v|^4
    grad_u_l4: float        # int |grad u|^4
    martingale_increment: float  # sum_a <d_a u, u x d_a(dW)>


def _nonlinear_velocity_hat(v, du, grid: SpectralGrid, dealias: bool) -> np.ndarray:
    """Fourier transform of v.grad v + div(grad u (.) grad u), projected."""
    dv = sp.partials(v, grid)
    adv = np.stack((v[0] * dv[0, 0] + v[1] * dv[0, 1],
                    v[0] * dv[1, 0] + v[1] * dv[1, 1]))
    adv_hat = sp.fft(grid, adv)
    if dealias:
        adv_hat = sp.dealias_hat(grid, adv_hat)

    # stress entries S_ab = sum_c d_a u^c d_b u^c, divergence taken spectrally
    s11 = np.sum(du[:, 0] * du[:, 0], axis=0)
    s12 = np.sum(du[:, 0] * du[:, 1], axis=0)
    s22 = np.sum(du[:, 1] * du[:, 1], axis=0)
    s11h, s12h, s22h = (sp.fft(grid, s) for s in (s11, s12, s22))
    if dealias:
        s11h, s12h, s22h = (sp.dealias_hat(grid, s) for s in (s11h, s12h, s22h))
    div_s_hat = np.stack((grid.ik1 * s11h + grid.ik2 * s12h,
                          grid.ik1 * s12h + grid.ik2 * s22h))
    return sp.leray_project_hat(grid, adv_hat + div_s_hat)


def step(state: SimState, model: NoiseModel, cfg: SchemeConfig, grid: SpectralGrid,
         rng: NoiseRng | None, increment: NoiseIncrement | None = None,
         ) -> tuple[SimState, StepDiagnostics, NoiseIncrement]:
    """Advance one time step; returns (new state, diagnostics, increment used).

    The increment may be supplied explicitly (twin runs share one); otherwise
    it is drawn from ``rng`` at the state's step index.
    """
    dt = cfg.dt
    v, u = state.v, state.u
    if increment is None:
        if model.truncation_n > 0 and rng is None:
            raise ValueError("a NoiseRng is required when the model has modes")
        if model.truncation_n > 0:
            increment = sample_increment(model, dt, rng, state.step_index)
        else:
            increment = NoiseIncrement(d_beta=np.zeros((0, 3)),
                                       field=np.zeros_like(u))

    du = sp.partials(u, grid)
    dv = sp.partials(v, grid)
    u_hat = sp.fft(grid, u)
    lap_u = sp.ifft(grid, grid.lap_mult * u_hat)

    denom = 1.0 - grid.lap_mult * dt    # 1 + dt 4 pi^2 |k|^2

    nv_hat = _nonlinear_velocity_hat(v, du, grid, cfg.dealias)
    v_hat_new = (sp.fft(grid, v) - dt * nv_hat) / denom

    g_raw = np.sum(du * du, axis=(0, 1))
    g = sp.dealias(g_raw, grid) if cfg.dealias else g_raw
    ug_hat = sp.fft(grid, u * g)
    if cfg.dealias:
        ug_hat = sp.dealias_hat(grid, ug_hat)
    tau = lap_u + sp.ifft(grid, ug_hat)   # scheme-consistent tension

    transport = v[0] * du[:, 0] + v[1] * du[:, 1]
    if cfg.integrator == "ito_semi_implicit":
        rest = model.f_psi * u - transport
        noise_term = fd.cross(u, increment.field)
    else:
        rest = -transport
        rot = fd.cross(u, increment.field)
        noise_term = rot + 0.5 * fd.cross(rot, increment.field)
    rest_hat = sp.fft(grid, dt * rest + noise_term)
    if cfg.dealias:
        rest_hat = sp.dealias_hat(grid, rest_hat)
    u_hat_star = (u_hat + dt * ug_hat + rest_hat) / denom

    # pre-step diagnostics (left-endpoint evaluation, matching the scheme)
    dw = increment.partial_fields(model) if model.truncation_n > 0 else None
    if dw is not None:
        mart = sp.l2_inner(du[:, 0], fd.cross(u, dw[:, 0])) + \
               sp.l2_inner(du[:, 1], fd.cross(u, dw[:, 1]))
    else:
        mart = 0.0
    diag = StepDiagnostics(
        grad_v_sq=sp.l2_norm_sq(dv),
        tension_sq=sp.l2_norm_sq(tau),
        grad_u_sq=sp.l2_norm_sq(du),
        delta_u_sq=sp.l2_norm_sq(lap_u),
        v_l4=sp.l4_norm4(v),
        grad_u_l4=sp.l4_norm4(du),
        martingale_increment=mart,
    )

    v_new = sp.ifft(grid, v_hat_new)
    u_star = sp.ifft(grid, u_hat_star)
    if not (np.all(np.isfinite(v_new)) and np.all(np.isfinite(u_star))):
        raise BlowUpError(f"non-finite state at t={state.t + dt:.6g}")
    u_new = fd.normalize_sphere(u_star)

    new_state = SimState(t=state.t + dt, v=v_new, u=u_new,
                         step_index=state.step_index + 1)
    return new_state, diag, increment


def recover_pressure(state: SimState, grid: SpectralGrid,
                     dealias: bool = True) -> np.ndarray:
    """Zero-mean pressure from the double-divergence Poisson problem.

    Solves lap(p) = - d_i d_j (v^i v^j + d_i u . d_j u) spectrally; the
    source has zero mean by construction, so the problem is solvable.
    """
    v, u = state.v, state.u
    du = sp.partials(u, grid)
    s11 = v[0] * v[0] + np.sum(du[:, 0] * du[:, 0], axis=0)
    s12 = v[0] * v[1] + np.sum(du[:, 0] * du[:, 1], axis=0)
    s22 = v[1] * v[1] + np.sum(du[:, 1] * du[:, 1], axis=0)
    s11h, s12h, s22h = (sp.fft(grid, s) for s in (s11, s12, s22))
    if dealias:
        s11h, s12h, s22h = (sp.dealias_hat(grid, s) for s in (s11h, s12h, s22h))
    source_hat = -(grid.ik1 * grid.ik1 * s11h
                   + 2.0 * grid.ik1 * grid.ik2 * s12h
                   + grid.ik2 * grid.ik2 * s22h)
    p_hat = grid.inv_lap_mult * source_hat
    return sp.ifft(grid, p_hat)


# ----------------------------------------------------------------------
# truncated mild-solution map

def _theta(x: np.ndarray | float) -> np.ndarray | float:
    """Smooth cutoff: 1 on [0, 1], supported in (-inf, 2), C^infinity."""
    x = np.asarray(x, dtype=float)
    def bump(t):
        out = np.zeros_like(t)
        pos = t > 0
        out[pos] = np.exp(-1.0 / t[pos])
        return out
    up = bump(np.atleast_1d(2.0 - x))
    down = bump(np.atleast_1d(x - 1.0))
    val = up / (up + down)
    return float(val[0]) if np.isscalar(x) or x.ndim == 0 else val


def _path_gate_norm(w_t: np.ndarray, y_t: np.ndarray, grid: SpectralGrid) -> float:
    """Norm driving the cutoff: max of |w|_L4 and the H^1 norm of y."""
    wl4 = sp.l4_norm4(w_t) ** 0.25
    dy = sp.partials(y_t, grid)
    yh1 = np.sqrt(sp.l2_norm_sq(y_t) + sp.l2_norm_sq(dy))
    return max(wl4, yh1)


def picard_iterate(w: np.ndarray, y: np.ndarray, R: float, t_short: float,
                   model: NoiseModel, grid: SpectralGrid,
                   x0: tuple[np.ndarray, np.ndarray] | None = None,
                   increments: np.ndarray | None = None,
                   ) -> tuple[np.ndarray, np.ndarray]:
    """One application of the cutoff mild-solution map to an input path pair.

    ``w``: (M+1, 2, N, N) velocity path, ``y``: (M+1, 3, N, N) director path
    on the uniform grid of [0, t_short].  Semigroup factors are exact per
    mode; the time convolutions use the left-endpoint rectangle rule,
    accumulated by the one-step recurrence

        I_m = E_dt (I_{m-1} + dt * integrand(t_{m-1})),

    which equals the rectangle sum exactly because the semigroup property
    is exact mode-wise.  The cutoff factor multiplies only the quadratic
    and cubic nonlinearities; the conversion drift F_psi y stays outside.

    ``increments`` may supply per-interval mode draws of shape (M, n, 3)
    so that contraction measurements share one noise path.
    """
    if R <= 0:
        raise ValueError(f"cutoff radius must be positive, got {R}")
    m_steps = w.shape[0] - 1
    if m_steps < 1 or y.shape[0] != m_steps + 1:
        raise ValueError("paths must share a uniform time grid with >= 2 samples")
    dt = t_short / m_steps
    v0, u0 = x0 if x0 is not None else (w[0], y[0])

    e_dt = np.exp(grid.lap_mult * dt)
    gate = np.array([_theta(_path_gate_norm(w[m], y[m], grid) / R)
                     for m in range(m_steps + 1)])

    v_out = np.empty_like(w)
    u_out = np.empty_like(y)
    v_out[0] = v0
    u_out[0] = u0

    v0_hat = sp.fft(grid, v0)
    u0_hat = sp.fft(grid, u0)
    iv = np.zeros_like(v0_hat)
    iu = np.zeros_like(u0_hat)
    zu = np.zeros_like(u0_hat)

    for m in range(1, m_steps + 1):
        wm, ym = w[m - 1], y[m - 1]
        dy = sp.partials(ym, grid)
        dw_ = sp.partials(wm, grid)

        adv = np.stack((wm[0] * dw_[0, 0] + wm[1] * dw_[0, 1],
                        wm[0] * dw_[1, 0] + wm[1] * dw_[1, 1]))
        s11 = np.sum(dy[:, 0] * dy[:, 0], axis=0)
        s12 = np.sum(dy[:, 0] * dy[:, 1], axis=0)
        s22 = np.sum(dy[:, 1] * dy[:, 1], axis=0)
        s11h, s12h, s22h = (sp.dealias_hat(grid, sp.fft(grid, sf))
                            for sf in (s11, s12, s22))
        div_s_hat = np.stack((grid.ik1 * s11h + grid.ik2 * s12h,
                              grid.ik1 * s12h + grid.ik2 * s22h))
        nv_hat = sp.leray_project_hat(
            grid, sp.dealias_hat(grid, sp.fft(grid, adv)) + div_s_hat)
        iv = e_dt * (iv + dt * gate[m - 1] * nv_hat)

        g = sp.dealias(s11 + s22, grid)
        cubic = sp.dealias(ym * g, grid)
        transport = sp.dealias(wm[0] * dy[:, 0] + wm[1] * dy[:, 1], grid)
        drift_hat = gate[m - 1] * sp.fft(grid, cubic - transport) \
            + sp.fft(grid, model.f_psi * ym)
        iu = e_dt * (iu + dt * drift_hat)

        if increments is not None and model.truncation_n > 0:
            dwf = np.einsum("lj,lxy->jxy", increments[m - 1],
                            model.basis_fields)
            zu = e_dt * (zu + sp.dealias_hat(grid, sp.fft(grid, fd.cross(ym, dwf))))
        else:
            zu = e_dt * zu

        v0_hat = e_dt * v0_hat
        u0_hat = e_dt * u0_hat
        v_out[m] = sp.ifft(grid, sp.leray_project_hat(grid, v0_hat) - iv)
        u_out[m] = sp.ifft(grid, u0_hat + iu + zu)
    return v_out, u_out


def _path_norm(w: np.ndarray, y: np.ndarray, grid: SpectralGrid) -> float:
    """sup over samples of |w|_L4 + |y|_H1 (the cutoff norms combined)."""
    best = 0.0
    for m in range(w.shape[0]):
        dy = sp.partials(y[m], grid)
        val = sp.l4_norm4(w[m]) ** 0.25 + np.sqrt(sp.l2_norm_sq(y[m])
                                                  + sp.l2_norm_sq(dy))
        best = max(best, val)
    return best


def _random_paths(grid: SpectralGrid, m_steps: int, scale: float,
                  rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Smooth band-limited random path pair for contraction probes."""
    from .presets import random_band_limited
    n = grid.n
    w = np.empty((m_steps + 1, 2, n, n))
    y = np.empty((m_steps + 1, 3, n, n))
    vband = sp.leray_project(random_band_limited(grid, 2, kmax=3, rng=rng), grid)
    yband = random_band_limited(grid, 3, kmax=3, rng=rng)
    vmod = random_band_limited(grid, 2, kmax=2, rng=rng)
    ymod = random_band_limited(grid, 3, kmax=2, rng=rng)
    for m in range(m_steps + 1):
        c = m / max(m_steps, 1)
        w[m] = scale * (vband + 0.3 * c * sp.leray_project(vmod, grid))
        y[m] = scale * (yband + 0.3 * c * ymod)
    return w, y


def picard_contraction(grid: SpectralGrid, model: NoiseModel, R: float,
                       t_short: float, m_steps: int = 8, pairs: int = 10,
                       fixed_point_iters: int = 5, seed: int = 0) -> dict:
    """Measure the Lipschitz ratio of the cutoff map and fixed-point decay.

    Random input path pairs share the initial datum and the noise path;
    the reported ratio is ||Gamma(p2) - Gamma(p1)|| / ||p2 - p1|| in the
    sup-in-time mixed norm used by the cutoff.
    """
    rng = np.random.default_rng(seed)
    incs = None
    if model.truncation_n > 0:
        nr = NoiseRng(model.seed, model.truncation_n)
        dt = t_short / m_steps
        incs = np.stack([np.sqrt(dt) * nr.normals(j)[: model.truncation_n]
                         for j in range(m_steps)])

    w0, y0 = _random_paths(grid, m_steps, 0.5, rng)
    x0 = (w0[0].copy(), y0[0].copy())

    ratios = []
    for _ in range(pairs):
        wa, ya = _random_paths(grid, m_steps, 0.5, rng)
        wb, yb = _random_paths(grid, m_steps, 0.5, rng)
        ga = picard_iterate(wa, ya, R, t_short, model, grid, x0=x0, increments=incs)
        gb = picard_iterate(wb, yb, R, t_short, model, grid, x0=x0, increments=incs)
        num = _path_norm(ga[0] - gb[0], ga[1] - gb[1], grid)
        den = _path_norm(wa - wb, ya - yb, grid)
        ratios.append(num / den)

    # successive iterates from the frozen-initial-datum constant path
    wp = np.repeat(w0[:1], m_steps + 1, axis=0)
    yp = np.repeat(y0[:1], m_steps + 1, axis=0)
    diffs = []
    prev = (wp, yp)
    for _ in range(fixed_point_iters):
        cur = picard_iterate(prev[0], prev[1], R, t_short, model, grid,
                             x0=x0, increments=incs)
        diffs.append(_path_norm(cur[0] - prev[0], cur[1] - prev[1], grid))
        prev = cur
    fp_ratios = [diffs[i + 1] / diffs[i] for i in range(len(diffs) - 1)
                 if diffs[i] > 0]
    return {
        "lipschitz_ratios": ratios,
        "fixed_point_diffs": diffs,
        "fixed_point_ratios": fp_ratios,
    }


# ----------------------------------------------------------------------
# trajectory driver with concentration bookkeeping

@dataclass
class ContinuationRecord:
    """Bookkeeping for detected concentration events along one trajectory."""

    bubbling_times: list = field(default_factory=list)
    restart_count: int = 0
    interval_summaries: list = field(default_factory=list)
    unresolved: bool = False

    @property
    def j_count(self) -> int:
        """Number of solution intervals (events + 1)."""
        return self.restart_count + 1


def run_with_continuation(init: SimState, model: NoiseModel, cfg: SchemeConfig,
                          monitor, grid: SpectralGrid, rng: NoiseRng | None = None,
                          sample_stride: int = 1, ledger=None,
                          on_sample=None) -> tuple[list, ContinuationRecord, SimState]:
    """Step to the horizon, recording samples and concentration crossings.

    Each time the local-energy supremum first reaches the monitor threshold
    (an up-crossing), the crossing time is recorded, the director is
    re-projected onto the sphere, and the run continues from the current
    state; this restart datum is a documented surrogate for the continuum
    construction and is flagged through ``bubbling_count`` in the records.
    A singularity abort is caught and recorded as an unresolved event.
    """
    from .diagnostics import EnergyLedger, ledger_update, local_energy_sup

    if ledger is None:
        ledger = EnergyLedger.start(init.v, init.u, grid, model.c_psi)
    record = ContinuationRecord()
    records: list[dict] = []
    state = init
    above = False
    zeta = None

    def sample_row(st: SimState) -> dict:
        sup, _ = local_energy_sup(st, monitor, grid)
        nonlocal above, zeta
        crossing = sup >= monitor.epsilon1 and not above
        above = sup >= monitor.epsilon1
        if crossing:
            record.bubbling_times.append(st.t)
            record.restart_count += 1
            st.u = fd.normalize_sphere(st.u)
            if zeta is None:
                zeta = st.t
        row = {
            "t": st.t,
            "E": fd.energy(st.v, st.u, grid),
            "dissipation": ledger.dissipation,
            "martingale_x": ledger.martingale_x,
            "trace_drift": ledger.trace_drift,
            "residual": ledger.residual,
            "local_sup": sup,
            "constraint_err": fd.sphere_constraint_error(st.u),
            "divergence_err": sp.divergence_max(st.v, grid),
            "zeta": zeta,
            "bubbling_count": record.restart_count,
            "cum_grad_v_sq": ledger.cum_grad_v_sq,
            "cum_delta_u_sq": ledger.cum_delta_u_sq,
            "cum_grad_u_sq": ledger.cum_grad_u_sq,
        }
        return row

    records.append(sample_row(state))
    if on_sample is not None:
        on_sample(state, records[-1])
    start_t, start_e = state.t, records[0]["E"]
    try:
        for _ in range(cfg.n_steps):
            new_state, diag, inc = step(state, model, cfg, grid, rng)
            ledger_update(ledger, state, new_state, inc, cfg.dt, grid, diag=diag)
            state = new_state
            if state.step_index % sample_stride == 0 or state.step_index == cfg.n_steps:
                records.append(sample_row(state))
                if on_sample is not None:
                    on_sample(state, records[-1])
    except SingularityError:
        record.unresolved = True
        record.bubbling_times.append(state.t)
        record.restart_count += 1
        if zeta is None:
            zeta = state.t
        if records:
            records[-1]["zeta"] = zeta
            records[-1]["bubbling_count"] = record.restart_count

    record.interval_summaries.append({
        "t_start": start_t, "t_end": state.t,
        "e_start": start_e, "e_end": fd.energy(state.v, state.u, grid),
    })
    return records, record, state
