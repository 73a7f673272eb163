"""Exception types shared across the package."""


class SparseMRError(Exception):
    """Base class for all library errors."""


class BadParam(SparseMRError):
    """A scalar parameter is outside its admissible range."""


class DimensionMismatch(SparseMRError):
    """Vector/matrix shapes are inconsistent with the problem dimension."""


class NonPSDInput(SparseMRError):
    """An input matrix violates the required symmetry/definiteness."""


class A0NotPD(SparseMRError):
    """The volatility matrix is not positive definite."""


class Nonconvergence(SparseMRError):
    """An iterative routine hit its iteration cap without meeting tolerance."""


class ZeroVector(SparseMRError):
    """A vector that must be nonzero (for normalization) is zero."""


class NoFeasiblePoint(SparseMRError):
    """No sparse unit vector meeting the volatility threshold was found."""


class MaxOuterExceeded(SparseMRError):
    """The penalty continuation loop hit its outer iteration cap."""


class BadSupport(SparseMRError):
    """A vector is nonzero outside its declared support."""


class NonPositivePrice(SparseMRError):
    """A price entry is zero or negative."""


class TauTooLarge(SparseMRError):
    """The return horizon exceeds the available history."""


class SeriesTooShort(SparseMRError):
    """The series is too short for the requested lag."""


class ZeroVolatilitySpread(SparseMRError):
    """The spread has zero standard deviation; it cannot be normalized."""


class ZeroVariance(SparseMRError):
    """The ROI series has zero variance; the Sharpe ratio is undefined."""


class DegenerateRegression(SparseMRError):
    """The unit-root regression is degenerate."""


class ValidationError(SparseMRError):
    """A config file or report failed schema validation."""
