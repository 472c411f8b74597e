"""Initial-condition presets and random band-limited field builders.

Presets (all return a ``(v, u)`` pair of shapes (2, N, N) / (3, N, N)):

* ``equator_stationary``  zero velocity and the unit-speed equator map
  u = (cos 2 pi x1, sin 2 pi x1, 0): a harmonic map, stationary under the
  deterministic flow.
* ``constant_e3``         zero velocity, u = e3 everywhere.
* ``smooth_small``        gently perturbed constant director plus a weak
  solenoidal velocity; energy well below any concentration threshold.
* ``taylor_green``        the cellular vortex v = (sin cos, -cos sin) with
  constant director (pressure test problem).
* ``bump_concentrated``   director winding localized in one Gaussian bump,
  calibrated so the local gradient energy in a small ball exceeds any
  reasonable detector threshold at t = 0.
"""

from __future__ import annotations

import numpy as np

from . import fields as fd
from . import spectral as sp
from .spectral import SpectralGrid

PRESET_NAMES = ("equator_stationary", "constant_e3", "smooth_small",
                "taylor_green", "bump_concentrated")


def random_band_limited(grid: SpectralGrid, channels: int, kmax: int,
                        rng: np.random.Generator,
                        rms: float = 1.0) -> np.ndarray:
    """Random real field with modes only in |k1|,|k2| <= kmax, unit RMS.

    Built from seeded cosine/sine coefficients in physical space, so the
    result is identical for any grid size resolving the band.
    """
    n = grid.n
    if kmax > n // 3:
        raise ValueError(f"kmax={kmax} exceeds the dealiased band at N={n}")
    out = np.zeros((channels, n, n))
    for k1 in range(0, kmax + 1):
        for k2 in range(-kmax, kmax + 1):
            if k1 == 0 and k2 <= 0:
                continue
            phase = 2.0 * np.pi * (k1 * grid.x1 + k2 * grid.x2)
            coeff = rng.standard_normal((channels, 2))
            decay = 1.0 / (1.0 + k1 ** 2 + k2 ** 2)
            out += decay * (coeff[:, :1, None] * np.cos(phase)
                            + coeff[:, 1:, None] * np.sin(phase))
    norm = sp.l2_norm(out)
    return out * (rms / norm) if norm > 0 else out


def equator_stationary(grid: SpectralGrid) -> tuple[np.ndarray, np.ndarray]:
    n = grid.n
    v = np.zeros((2, n, n))
    u = np.stack((np.cos(2.0 * np.pi * grid.x1),
                  np.sin(2.0 * np.pi * grid.x1),
                  np.zeros((n, n))))
    return v, u


def constant_e3(grid: SpectralGrid) -> tuple[np.ndarray, np.ndarray]:
    n = grid.n
    v = np.zeros((2, n, n))
    u = np.zeros((3, n, n))
    u[2] = 1.0
    return v, u


def taylor_green(grid: SpectralGrid, amplitude: float = 1.0
                 ) -> tuple[np.ndarray, np.ndarray]:
    a = 2.0 * np.pi * grid.x1
    b = 2.0 * np.pi * grid.x2
    v = amplitude * np.stack((np.sin(a) * np.cos(b), -np.cos(a) * np.sin(b)))
    _, u = constant_e3(grid)
    return v, u


def smooth_small(grid: SpectralGrid, v_amp: float = 0.08, u_amp: float = 0.08,
                 seed: int = 2024) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    v = v_amp * sp.leray_project(random_band_limited(grid, 2, kmax=1, rng=rng), grid)
    _, base = constant_e3(grid)
    pert = random_band_limited(grid, 3, kmax=1, rng=rng)
    u = fd.normalize_sphere(base + u_amp * pert)
    return v, u


def bump_concentrated(grid: SpectralGrid, radius: float = 0.08,
                      winding_amp: float = 6.0) -> tuple[np.ndarray, np.ndarray]:
    """Director that winds rapidly inside one bump centered at (1/2, 1/2).

    The winding angle is theta(x) = winding_amp * exp(-r^2 / (2 radius^2))
    (periodized), giving |grad u| ~ |grad theta| concentrated at radius
    ~ ``radius``; local gradient energy in a ball of radius 2*radius is
    O(winding_amp^2), far above sub-unit thresholds.
    """
    n = grid.n
    d1 = grid.x1 - 0.5
    d2 = grid.x2 - 0.5
    r2 = d1 ** 2 + d2 ** 2
    theta = winding_amp * np.exp(-r2 / (2.0 * radius ** 2))
    u = np.stack((np.cos(theta), np.sin(theta), np.zeros((n, n))))
    v = np.zeros((2, n, n))
    return v, u


def build_preset(name: str, grid: SpectralGrid) -> tuple[np.ndarray, np.ndarray]:
    if name == "equator_stationary":
        return equator_stationary(grid)
    if name == "constant_e3":
        return constant_e3(grid)
    if name == "smooth_small":
        return smooth_small(grid)
    if name == "taylor_green":
        return taylor_green(grid)
    if name == "bump_concentrated":
        return bump_concentrated(grid)
    raise ValueError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
