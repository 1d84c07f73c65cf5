"""Exception hierarchy shared by every module."""


class RRLError(Exception):
    """Base class for errors raised by ridgeless."""


class ParameterError(RRLError, ValueError):
    """A model or solver parameter is outside its admissible range."""


class ValidationError(RRLError, ValueError):
    """Input data failed a structural check (shape, symmetry, finiteness)."""


class DomainError(RRLError, ValueError):
    """A quantity is requested outside the regime where it is defined."""


class InterpolationBoundaryError(DomainError):
    """gamma is too close to 1, where the min-norm risk diverges."""


class NoSpectrumModelError(RRLError, TypeError):
    """The model has no covariance spectrum representation."""


class DegenerateSpectrumError(RRLError, ValueError):
    """The spectrum makes a fixed point undefined (all-zero atoms, etc.)."""


class NumericalError(RRLError, ArithmeticError):
    """A solver failed to converge.  ``diagnostics`` carries solver state."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class InSpectrumError(NumericalError):
    """A real spectral argument lies inside the support of the spectrum."""


class CVUndefinedError(RRLError, ValueError):
    """Cross-validation shortcut has a vanishing denominator."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class RankAmbiguityWarning(RuntimeWarning):
    """Singular values sit within a factor 10 of the pseudoinverse cutoff."""


class AccuracyWarning(RuntimeWarning):
    """A numerical extrapolation reported a large internal error estimate."""
