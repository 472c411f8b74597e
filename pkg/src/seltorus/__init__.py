"""seltorus: pseudo-spectral stochastic liquid-crystal flow on the 2-torus.

A numpy/scipy library plus a small CLI.  The pieces:

* :mod:`seltorus.spectral`     periodic spectral calculus (derivatives,
  divergence-free projection, inverse Laplacian, semigroups, dealiasing),
* :mod:`seltorus.fields`       director/velocity geometry (tension, energy,
  sphere projection),
* :mod:`seltorus.noise`        truncated trace-class Wiener forcing and the
  conversion field between midpoint and left-endpoint integrals,
* :mod:`seltorus.dynamics`     semi-implicit time stepping, pressure
  recovery, the truncated mild-solution map, concentration-aware runs,
* :mod:`seltorus.diagnostics`  energy ledger, local-energy monitor,
  interpolation-ratio corpora, twin-run separation monitor,
* :mod:`seltorus.verify`       trace-term algebra, integrator equivalence,
  nested-truncation convergence,
* :mod:`seltorus.runner` / :mod:`seltorus.cli`  orchestration and I/O.
"""

from .spectral import SpectralGrid
from .fields import energy, tension, corrected_tension, normalize_sphere
from .noise import NoiseModel, NoiseRng, build_noise_model, sample_increment
from .dynamics import SimState, SchemeConfig, step, recover_pressure
from .diagnostics import EnergyLedger, ConcentrationMonitor

__version__ = "0.1.0"

__all__ = [
    "SpectralGrid", "energy", "tension", "corrected_tension",
    "normalize_sphere", "NoiseModel", "NoiseRng", "build_noise_model",
    "sample_increment", "SimState", "SchemeConfig", "step",
    "recover_pressure", "EnergyLedger", "ConcentrationMonitor",
    "__version__",
]
