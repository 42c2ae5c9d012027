"""Exception types shared across the package.

All errors derive from :class:`CovnetError`. The CLI attaches node/edge
context before reporting, so constructors accept plain messages only.
"""


class CovnetError(Exception):
    """Base class for all covnet errors."""


# --- data ingestion ---

class MalformedFile(CovnetError):
    """CSV is ragged, has non-numeric cells, or is missing required columns."""


class EmptyData(CovnetError):
    """Fewer than two usable rows."""


class NonFinite(CovnetError):
    """NaN or Inf encountered where finite values are required."""


# --- basis / design ---

class DimensionMismatch(CovnetError):
    """Vector or matrix shape does not match the declared dimensions."""


class RankDeficientBasis(CovnetError):
    """Basis Gram matrix is singular beyond the ridge tolerance."""


class ZeroVarianceColumn(CovnetError):
    """An interaction column is constant; scaling is undefined."""


class ScaleMismatch(CovnetError):
    """Operation requires a (consistently) scaled design bundle."""


# --- estimation ---

class SingularDesign(CovnetError):
    """Normal equations are singular."""


class InsufficientSamples(CovnetError):
    """Sample size too small for the requested estimator."""


class NegativeLambda(CovnetError):
    """Penalty level must be nonnegative."""


class FoldTooSmall(CovnetError):
    """A cross-validation fold has fewer than two rows."""


class IllConditionedC(CovnetError):
    """Nodewise C matrix is too ill-conditioned to invert."""


class IllConditionedD(CovnetError):
    """Nodewise D matrix is too ill-conditioned to invert."""


class SingularGram(CovnetError):
    """Score matching Gram matrix is singular."""


class SupportViolation(CovnetError):
    """Data lie outside the support of the score model."""


class ShapeMismatch(CovnetError):
    """Parameter vectors do not match the design shapes."""


# --- inference ---

class DegenerateVariance(CovnetError):
    """Variance estimate is zero or negative."""


class SingularCovariance(CovnetError):
    """Pooled covariance cannot be inverted even after jitter."""


class InvalidInput(CovnetError):
    """Argument outside the mathematical domain of the function."""


# --- simulation / pipeline ---

class InfeasibleDegreeSequence(CovnetError):
    """Could not realize a simple graph from the degree sequence."""


class NodeSetMismatch(CovnetError):
    """The two groups were fit on different node sets."""
