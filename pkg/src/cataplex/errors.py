"""Exception and warning types shared across the package."""


class CataplexError(Exception):
    """Base class for all package errors."""


class NumericalFailure(CataplexError):
    """A numerical routine could not deliver a result to tolerance."""


class NonConvergence(NumericalFailure):
    """Quadrature refinement exhausted without meeting the tolerance."""


class StepUnderflow(NumericalFailure):
    """An adaptive ODE step collapsed below machine resolution."""


class DomainError(CataplexError, ValueError):
    """Argument outside the mathematical domain of the function."""


class OutsideDomain(DomainError):
    """No evaluation regime of the Bessel engine covers the argument."""


class BesselZero(DomainError):
    """Logarithm requested at a zero of the Bessel function."""


class SaddlePoint(DomainError):
    """Level-set tracing started where the gradient vanishes."""


class LeftDomain(DomainError):
    """A traced contour exited the evaluable region."""


class Degenerate(DomainError):
    """A contour with fewer than two points cannot be classified."""


class Overflow(CataplexError, OverflowError):
    """Result not representable in double precision."""


class SlowDecay(UserWarning):
    """Integrand decays only slowly; the result may be less accurate."""
