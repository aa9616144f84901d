"""Exception hierarchy shared by all modules."""


class FresnelError(Exception):
    """Base class for library errors."""


class DomainError(FresnelError, ValueError):
    """Input outside the mathematical domain of an operation."""


class ChartError(DomainError):
    """Point lies in the gap of the polar chart (a pole)."""


class NotBiaxialError(DomainError):
    """Operation requires three distinct dielectric eigenvalues."""


class NotCharacteristicError(DomainError):
    """(xi, tau) does not lie on the Fresnel surface."""


class LoopThroughZeroError(FresnelError):
    """The traceless field vanishes on the winding loop."""


class ResolutionError(FresnelError):
    """Loop sampling too coarse to resolve the winding angle."""


class DesingularizationError(FresnelError):
    """Transversality hypothesis of the eigenline construction fails."""


class NonHyperbolicError(FresnelError):
    """A dispersion polynomial has non-real roots."""

    def __init__(self, message, direction=None):
        super().__init__(message)
        self.direction = direction


class UsageError(FresnelError, ValueError):
    """Bad option or configuration value."""
