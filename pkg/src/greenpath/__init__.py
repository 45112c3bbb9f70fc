"""greenpath: Green's functions on simple flat domains, boundary-value solvers
built on them, and random-walk estimators that check them."""

from __future__ import annotations

from .errors import (
    DimensionError,
    DomainError,
    GreenpathError,
    MaxStepsExceeded,
    QuadratureError,
    SingularKernelError,
    UnsupportedError,
)
from .fields import ScalarField
from .geometry import Domain, SpaceTimePoint, parse_domain
from .quadrature import QuadratureSpec
from .solver import BoundaryValueProblem, solve_elliptic, solve_parabolic, solve_wave_retarded

__version__ = "0.1.0"

__all__ = [
    "BoundaryValueProblem",
    "DimensionError",
    "Domain",
    "DomainError",
    "GreenpathError",
    "MaxStepsExceeded",
    "QuadratureError",
    "QuadratureSpec",
    "ScalarField",
    "SingularKernelError",
    "SpaceTimePoint",
    "UnsupportedError",
    "parse_domain",
    "solve_elliptic",
    "solve_parabolic",
    "solve_wave_retarded",
]
