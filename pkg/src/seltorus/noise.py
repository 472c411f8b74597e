"""Trace-class Wiener forcing on the torus and its truncations.

The driving process is W(t, x) = sum_l B_l(t) psi_l(x) where the B_l are
independent R^3 Brownian motions and psi_l is a smoothed real Fourier mode.
The scalar basis is fixed once and documented here:

    l = 0:            f_0 = 1
    k-representative: sqrt(2) cos(2 pi k.x), then sqrt(2) sin(2 pi k.x)

with representatives k = (k1, k2) != 0 taken from the half-lattice
(k1 > 0, or k1 = 0 and k2 > 0), ordered by |k|^2 with (k1, k2)
lexicographic tie-break.  The smoothing acts as the radial multiplier
amplitude * (1 + 4 pi^2 |k|^2)^(-s/2), so each psi_l is the corresponding
basis function scaled by that factor.

Derived quantities stored on the model:

* ``f_psi``  = - sum_l psi_l^2   (pointwise <= 0): the conversion field
  between the midpoint and the left-endpoint stochastic integrals,
* ``c_psi``  = sum_l |grad psi_l|_L2^2: the drift rate appearing in the
  energy balance.

Increments are counter-based: mode l of path p under master seed m reads
Philox stream key(m, p, l) at counter position = step index, so the first
n modes of any two truncations n < n' agree bit-exactly and ensembles can
run in parallel with no shared state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import Philox, SeedSequence
from scipy.special import ndtri

from . import spectral as sp
from .spectral import SpectralGrid

__all__ = [
    "NoiseModel", "NoiseIncrement", "NoiseRng",
    "build_noise_model", "available_mode_count", "sample_increment",
    "covariance_estimate",
]


def _mode_reps(kmax: int) -> list[tuple[int, int]]:
    """Half-lattice representatives with |k1|,|k2| <= kmax, sorted."""
    reps = []
    for k1 in range(0, kmax + 1):
        for k2 in range(-kmax, kmax + 1):
            if k1 == 0 and k2 <= 0:
                continue
            reps.append((k1, k2))
    reps.sort(key=lambda k: (k[0] ** 2 + k[1] ** 2, k[0], k[1]))
    return reps


def available_mode_count(grid: SpectralGrid) -> int:
    """Number of basis modes resolvable inside the dealiased band."""
    return 1 + 2 * len(_mode_reps(grid.n // 3))


@dataclass
class NoiseModel:
    """Truncated trace-class Wiener structure (immutable once built)."""

    truncation_n: int
    decay_exponent: float
    amplitude: float
    seed: int
    basis_fields: np.ndarray        # (n, N, N): the psi_l
    basis_partials: np.ndarray      # (n, 2, N, N): grad psi_l
    mode_ksq: np.ndarray            # (n,) integer |k|^2 per mode
    f_psi: np.ndarray               # (N, N), <= 0 pointwise
    c_psi: float

    @property
    def n(self) -> int:
        return self.truncation_n


def build_noise_model(n: int, s: float, amplitude: float, grid: SpectralGrid,
                      seed: int) -> NoiseModel:
    if n < 0:
        raise ValueError(f"truncation must be >= 0, got {n}")
    if s < 0:
        raise ValueError(f"decay exponent must be >= 0, got {s}")
    avail = available_mode_count(grid)
    if n > avail:
        raise ValueError(
            f"requested {n} modes but only {avail} fit the dealiased band at N={grid.n}")

    N = grid.n
    basis = np.zeros((n, N, N))
    ksq = np.zeros(n, dtype=np.int64)
    li = 0
    if n > 0:
        basis[0] = 1.0
        ksq[0] = 0
        li = 1
    reps = _mode_reps(grid.n // 3)
    ri = 0
    while li < n:
        k1, k2 = reps[ri]
        phase = 2.0 * np.pi * (k1 * grid.x1 + k2 * grid.x2)
        for trig in (np.cos, np.sin):
            if li >= n:
                break
            basis[li] = np.sqrt(2.0) * trig(phase)
            ksq[li] = k1 ** 2 + k2 ** 2
            li += 1
        ri += 1

    weight = amplitude * (1.0 + 4.0 * np.pi ** 2 * ksq.astype(float)) ** (-s / 2.0)
    basis *= weight[:, None, None]

    if n > 0:
        dpsi = np.stack([sp.partials(basis[l], grid) for l in range(n)])
        f_psi = -np.sum(basis ** 2, axis=0)
        c_psi = float(np.sum(weight ** 2 * 4.0 * np.pi ** 2 * ksq))
    else:
        dpsi = np.zeros((0, 2, N, N))
        f_psi = np.zeros((N, N))
        c_psi = 0.0

    return NoiseModel(
        truncation_n=n, decay_exponent=s, amplitude=amplitude, seed=seed,
        basis_fields=basis, basis_partials=dpsi, mode_ksq=ksq,
        f_psi=f_psi, c_psi=c_psi,
    )


@dataclass
class NoiseIncrement:
    """Per-mode Gaussian draws and the assembled vector field."""

    d_beta: np.ndarray              # (n, 3), each component N(0, dt)
    field: np.ndarray               # (3, N, N): sum_l d_beta[l] psi_l

    def partial_fields(self, model: NoiseModel) -> np.ndarray:
        """Spatial partials of the assembled field, shape (3, 2, N, N)."""
        return np.einsum("lj,laxy->jaxy", self.d_beta, model.basis_partials)


class NoiseRng:
    """Counter-based Gaussian stream, one Philox key per (seed, path, mode).

    Draws for (mode l, step j) are a pure function of the key and j:
    three raw 64-bit words at counter j are mapped to (0,1) uniforms and
    through the inverse normal CDF.  Increments are therefore reproducible,
    independent across modes and paths, and identical under truncation
    refinement.
    """

    def __init__(self, seed: int, n_modes: int, path: int = 0):
        self.seed = int(seed)
        self.path = int(path)
        self.n_modes = int(n_modes)
        self._keys = [
            SeedSequence((self.seed, self.path, l)).generate_state(2, dtype=np.uint64)
            for l in range(n_modes)
        ]

    def normals(self, step: int) -> np.ndarray:
        """Standard-normal draws for one step, shape (n_modes, 3)."""
        out = np.empty((self.n_modes, 3))
        for l, key in enumerate(self._keys):
            raw = Philox(key=key, counter=[0, 0, 0, step]).random_raw(3)
            u = (raw >> np.uint64(11)) * 2.0 ** -53 + 2.0 ** -54
            out[l] = ndtri(u)
        return out


def sample_increment(model: NoiseModel, dt: float, rng: NoiseRng,
                     step: int) -> NoiseIncrement:
    """Wiener increment over one step of length dt > 0."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if rng.n_modes < model.truncation_n:
        raise ValueError("rng was built with fewer modes than the model")
    d_beta = np.sqrt(dt) * rng.normals(step)[: model.truncation_n]
    if model.truncation_n > 0:
        field = np.einsum("lj,lxy->jxy", d_beta, model.basis_fields)
    else:
        field = np.zeros((3, model.f_psi.shape[0], model.f_psi.shape[1]))
    return NoiseIncrement(d_beta=d_beta, field=field)


def covariance_estimate(model: NoiseModel, a: np.ndarray, b: np.ndarray,
                        t: float, s: float, paths: int,
                        seed: int = 0) -> tuple[float, float]:
    """Monte-Carlo and closed-form covariance of the paired field integrals.

    Closed form: min(t,s) * sum_i sum_l <psi_l, a^i> <psi_l, b^i> (the
    Brownian components are independent, so only matching vector components
    pair up).  The estimate averages <W(t), a> <W(s), b> over sampled paths.
    """
    if paths < 100:
        raise ValueError(f"need at least 100 paths, got {paths}")
    if model.truncation_n == 0 or t == 0.0 or s == 0.0:
        return 0.0, 0.0
    pa = np.array([[sp.integral(model.basis_fields[l] * a[i]) for i in range(3)]
                   for l in range(model.truncation_n)])
    pb = np.array([[sp.integral(model.basis_fields[l] * b[i]) for i in range(3)]
                   for l in range(model.truncation_n)])
    closed = float(min(t, s) * np.sum(pa * pb))

    rng = np.random.default_rng(SeedSequence((model.seed, 97, seed)))
    t0, t1 = min(t, s), max(t, s)
    n = model.truncation_n
    z0 = rng.standard_normal((paths, n, 3)) * np.sqrt(t0)
    z1 = z0 + rng.standard_normal((paths, n, 3)) * np.sqrt(t1 - t0) if t1 > t0 else z0
    beta_t, beta_s = (z1, z0) if t >= s else (z0, z1)
    wa = np.einsum("pli,li->p", beta_t, pa)
    wb = np.einsum("pli,li->p", beta_s, pb)
    return float(np.mean(wa * wb)), closed
