"""Exception types shared across the package."""


class SpecdetError(Exception):
    """Base class for all package errors."""


class PotentialError(SpecdetError):
    """Invalid potential construction or use."""


class UnsupportedGeometryError(SpecdetError):
    """Classical geometry outside the supported single-well configuration."""


class BranchPointError(SpecdetError):
    """Evaluation requested at a branch point (e.g. lambda = 0 prefactor)."""


class PoleError(SpecdetError):
    """Evaluation too close to a determinant zero / log pole."""


class ConvergenceDomainError(SpecdetError):
    """Argument outside the convergence half-plane of a spectral sum."""


class TruncationError(SpecdetError):
    """Stored spectrum and tail model are mutually inconsistent."""


class IllConditionedFitError(SpecdetError):
    """Least-squares extraction refused due to bad conditioning."""


class ConvergenceError(SpecdetError):
    """Fixed-point iteration or root search failed to converge."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class OracleError(SpecdetError):
    """Direct ODE/finite-difference verification failed its own checks."""
