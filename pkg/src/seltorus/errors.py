"""Exception types shared across the package."""


class SimulationError(Exception):
    """Base class for runtime failures of a trajectory."""


class SingularityError(SimulationError):
    """Director modulus collapsed below the resolvable threshold.

    Raised by the renormalization step; indicates an unresolved
    concentration of gradient energy at the current resolution.
    """


class BlowUpError(SimulationError):
    """Non-finite values appeared in the evolved state."""


class ConstraintError(ValueError):
    """A field violates its pointwise constraint beyond tolerance."""
