"""Elliptic hypergeometric integrals of BC_n type: special functions,
interpolation bases, torus quadrature and determinant checks."""

from .errors import (
    BranchError,
    ConfigError,
    ConvergenceError,
    DegenerateParametersError,
    EllipError,
    PoleError,
    RegionError,
    TruncationError,
    ZeroArgumentError,
)
from .qseries import DEFAULT_TRUNCATION, Bases, Truncation, e_fact, e_pair, ell_gamma, poch_p, poch_pq, theta, theta_fact

__version__ = "0.1.0"

__all__ = [
    "Bases",
    "Truncation",
    "DEFAULT_TRUNCATION",
    "poch_p",
    "poch_pq",
    "theta",
    "ell_gamma",
    "e_pair",
    "theta_fact",
    "e_fact",
    "EllipError",
    "TruncationError",
    "PoleError",
    "ZeroArgumentError",
    "DegenerateParametersError",
    "BranchError",
    "RegionError",
    "ConvergenceError",
    "ConfigError",
    "__version__",
]
