"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Array shapes are inconsistent with the operation."""


class NotSPDError(ValueError):
    """A matrix required to be symmetric positive definite is not."""


class NoUniqueSolutionError(ValueError):
    """A linear matrix equation has no unique solution."""


class DivergenceError(ArithmeticError):
    """An integrator produced non-finite values."""

    def __init__(self, message, step=None, time=None):
        super().__init__(message)
        self.step = step
        self.time = time


class ConeExitError(DivergenceError):
    """A precision matrix left the SPD cone during a flow."""


class NotAGraphError(ValueError):
    """The image of a Lagrangian graph is not a graph over the base."""


class NotGraphPreservingError(ValueError):
    """An affine symplectic map is not of cotangent-lift normal form."""


class InconsistentMapError(ValueError):
    """Block data that symplecticity would force to agree do not."""


class SingularSystemError(ValueError):
    """A normal-equation system is singular."""


class ConfigError(ValueError):
    """Invalid experiment configuration."""
