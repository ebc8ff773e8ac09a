"""Exception types shared across the package."""


class AdjRobustError(Exception):
    """Base class for all errors raised by this package."""


class CycleDetected(AdjRobustError):
    """The edge set admits no topological order (includes self-loops)."""


class DuplicateEdge(AdjRobustError):
    """The same ordered edge was given twice."""


class DuplicateNode(AdjRobustError):
    """A node label was given twice."""


class UnknownNode(AdjRobustError):
    """A referenced node label is not part of the graph."""


class OverlappingSets(AdjRobustError):
    """Node sets that must be pairwise disjoint overlap."""


class XYInZ(AdjRobustError):
    """The treatment or outcome appears in the candidate adjustment set."""


class CapExceeded(AdjRobustError):
    """Enumeration found more sets than the caller allowed."""


class NotDescendant(AdjRobustError):
    """The outcome is not a descendant of the treatment."""


class EmptyInput(AdjRobustError):
    """An operation that needs at least one (or two) items got fewer."""


class OutOfRange(AdjRobustError):
    """A numeric input lies outside its documented range."""


class SingularSystem(AdjRobustError):
    """A symmetric solve hit a (near-)singular matrix."""


class UnsupportedFamily(AdjRobustError):
    """The requested computation is only available for some error families."""


class NoEligiblePair(AdjRobustError):
    """No treatment/outcome pair with enough adjustment sets was found."""


class RankDeficientDesign(AdjRobustError):
    """The regression design matrix does not have full column rank."""


class InsufficientSamples(AdjRobustError):
    """Too few rows for the requested regression or estimator."""


class DegenerateResiduals(AdjRobustError):
    """A residual vector is numerically zero, the estimand is undefined."""


class KTooSmall(AdjRobustError):
    """At least two adjustment sets are needed to form a contrast."""


class RankExceedsDim(AdjRobustError):
    """Requested rank is outside 1..dim for the given matrix."""


class NearZeroLeadingEigenvalue(AdjRobustError):
    """The smallest retained eigenvalue is below the relative floor."""


class ParseError(AdjRobustError):
    """A text input (graph, model, dataset or config file) is malformed."""


class ColumnMismatch(AdjRobustError):
    """The dataset does not provide all columns the test needs."""


class ConfigError(AdjRobustError):
    """A simulation config file is missing keys or holds invalid values."""
