"""Exception types shared across the package."""


class EllipError(Exception):
    """Base class for all library errors."""


class TruncationError(EllipError, ArithmeticError):
    """An infinite product did not reach the requested accuracy within the index cap."""

    def __init__(self, message, bound=None):
        super().__init__(message)
        self.bound = bound


class PoleError(EllipError, ArithmeticError):
    """An argument sits on (or numerically too close to) a pole."""


class ZeroArgumentError(EllipError, ValueError):
    """A multiplicative argument was exactly zero."""


class DegenerateParametersError(EllipError, ValueError):
    """Parameters are too close to a degenerate configuration."""


class BranchError(EllipError, ValueError):
    """A bracket product left a half-integer exponent, so its value is branch dependent."""


class RegionError(EllipError, ValueError):
    """Parameters violate the region where an integral or identity is valid."""


class ConvergenceError(EllipError, RuntimeError):
    """Quadrature refinement stopped before reaching the requested tolerance."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history or []


class ConfigError(EllipError, ValueError):
    """A scenario configuration is malformed."""
