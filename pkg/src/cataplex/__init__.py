"""Numerical checks of Liouville quantum mechanics, its complex-time map,
classical Backlund maps and lattice entwining identities."""

from .errors import (
    BesselZero,
    CataplexError,
    Degenerate,
    DomainError,
    LeftDomain,
    NonConvergence,
    NumericalFailure,
    OutsideDomain,
    Overflow,
    SaddlePoint,
    SlowDecay,
    StepUnderflow,
)
from .numeric import Tolerance

__all__ = [
    "BesselZero",
    "CataplexError",
    "Degenerate",
    "DomainError",
    "LeftDomain",
    "NonConvergence",
    "NumericalFailure",
    "OutsideDomain",
    "Overflow",
    "SaddlePoint",
    "SlowDecay",
    "StepUnderflow",
    "Tolerance",
]

__version__ = "0.1.0"
