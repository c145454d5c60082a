"""Exception types shared across the package."""


class LrccError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatchError(LrccError, ValueError):
    """Operands have incompatible shapes."""


class ZeroRowError(LrccError):
    """A matrix row has (numerically) zero norm and cannot be normalized."""


class SylvesterSingularError(LrccError):
    """The horizontal-projection solve is ill-posed (rank-deficient factor)."""


class RankDeficientError(LrccError):
    """The k x k Gram matrix is numerically singular: rank(precision) < k."""


class LineSearchFailedError(LrccError):
    """Backtracking exhausted its budget without satisfying Armijo."""


class DegenerateCovarianceError(LrccError):
    """Sample covariance has zero trace; no scale information to initialize."""


class CholeskyFailedError(LrccError):
    """Cholesky factorization of a supposedly SPD matrix failed."""


class DegenerateTruthError(LrccError):
    """Ground-truth graph has no positive or no negative node pair."""


class BaseMismatchError(LrccError, ValueError):
    """Tangent vectors anchored at different base points were combined."""


class ConfigError(LrccError):
    """Invalid or unknown configuration. CLI exit code 2."""


class DataError(LrccError):
    """Malformed input data. CLI exit code 3."""
