"""Pointwise geometry of the flow state: the unit-sphere director and the
divergence-free velocity.

A velocity field is a (2, N, N) array with spectral divergence at roundoff;
a director field is a (3, N, N) array of (approximately) unit vectors.  The
functions here compute the quantities that drive both the dynamics and the
runtime monitors:

* ``tension(u)``       = lap(u) + u |grad u|^2   (vanishes on harmonic maps),
* ``corrected_tension``= tension(u) - (v . grad) u,
* ``energy(v, u)``     = (|v|_L2^2 + |grad u|_L2^2) / 2.

Both tensions are pointwise orthogonal to u; the squared-gradient factor is
assembled in physical space from spectral partials and dealiased before it
multiplies u (cubic-term aliasing control).
"""

from __future__ import annotations

import numpy as np

from . import spectral as sp
from .errors import ConstraintError, SingularityError

SPHERE_ERROR_TOL = 1e-6     # hard gate for operations that assume |u| = 1
MIN_MODULUS = 1e-8          # below this the renormalization is meaningless


def sphere_constraint_error(u: np.ndarray) -> float:
    """max over the grid of | |u|^2 - 1 |."""
    return float(np.max(np.abs(np.sum(u * u, axis=0) - 1.0)))


def normalize_sphere(u: np.ndarray, min_modulus: float = MIN_MODULUS) -> np.ndarray:
    """Pointwise projection u / |u| onto the unit sphere.

    Idempotent; a modulus below ``min_modulus`` anywhere aborts with
    :class:`SingularityError` (unresolved concentration).
    """
    mod = np.sqrt(np.sum(u * u, axis=0))
    small = float(np.min(mod))
    if not np.isfinite(small) or small < min_modulus:
        raise SingularityError(f"director modulus collapsed to {small:.3e}")
    return u / mod


def _check_unit(u: np.ndarray, tol: float = SPHERE_ERROR_TOL) -> None:
    err = sphere_constraint_error(u)
    if err > tol:
        raise ConstraintError(
            f"director is off the unit sphere by {err:.3e} (tol {tol:.1e})")


def cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pointwise vector product of channel-first (3, ...) arrays."""
    return np.stack((
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ))


def grad_sq_field(u: np.ndarray, grid: sp.SpectralGrid, du: np.ndarray | None = None,
                  dealias: bool = True) -> np.ndarray:
    """|grad u|^2 on the grid, dealiased by default.

    ``du`` may pass precomputed partials of shape (3, 2, N, N).
    """
    if du is None:
        du = sp.partials(u, grid)
    g = np.sum(du * du, axis=(0, 1))
    return sp.dealias(g, grid) if dealias else g


def tension(u: np.ndarray, grid: sp.SpectralGrid) -> np.ndarray:
    """lap(u) + u |grad u|^2 for a unit-norm director field."""
    _check_unit(u)
    lap_u = sp.laplacian(u, grid)
    g = grad_sq_field(u, grid)
    return lap_u + sp.dealias(u * g, grid)


def corrected_tension(u: np.ndarray, v: np.ndarray, grid: sp.SpectralGrid) -> np.ndarray:
    """tension(u) minus the material transport (v . grad) u."""
    _check_unit(u)
    du = sp.partials(u, grid)
    transport = sp.dealias(v[0] * du[:, 0] + v[1] * du[:, 1], grid)
    lap_u = sp.laplacian(u, grid)
    g = grad_sq_field(u, grid, du=du)
    return lap_u + sp.dealias(u * g, grid) - transport


def energy(v: np.ndarray, u: np.ndarray, grid: sp.SpectralGrid) -> float:
    """Half the squared L^2 norms of v and grad u (nonnegative)."""
    du = sp.partials(u, grid)
    return 0.5 * (sp.l2_norm_sq(v) + sp.l2_norm_sq(du))


def tension_identity_check(u: np.ndarray, grid: sp.SpectralGrid) -> float:
    """Residual of the pointwise identity |tau|^2 = |lap u|^2 - |grad u|^4.

    Returns the max over the grid of the absolute mismatch; small for
    smooth resolved unit fields (both sides use the same spectral partials).
    """
    _check_unit(u)
    du = sp.partials(u, grid)
    lap_u = sp.laplacian(u, grid)
    g = grad_sq_field(u, grid, du=du, dealias=False)
    tau = lap_u + u * g
    lhs = np.sum(tau * tau, axis=0)
    rhs = np.sum(lap_u * lap_u, axis=0) - g ** 2
    return float(np.max(np.abs(lhs - rhs)))
