"""Exception hierarchy shared by all uniqcert modules."""


class UniqcertError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(UniqcertError):
    """Malformed grid CSV header or data row."""


class NonUniformGridError(UniqcertError):
    """Coordinate spacing deviates from uniform beyond tolerance."""


class IncompleteGridError(UniqcertError):
    """Grid file is missing cells or contains duplicates."""


class ValidationError(UniqcertError):
    """A domain object violates one of its invariants."""


class IoError(UniqcertError):
    """Filesystem read/write failure."""


class UnknownCaseError(UniqcertError):
    """Requested analytic case is not registered."""


class ParameterError(UniqcertError):
    """Missing or unexpected parameter for an analytic case."""


class OrderError(UniqcertError):
    """Unsupported derivative or accuracy order."""


class GridTooSmallError(UniqcertError):
    """Grid has too few points for the widest requested stencil."""


class DomainError(UniqcertError):
    """Numeric argument outside its mathematical domain."""


class ShapeError(UniqcertError):
    """Matrix shape makes the requested computation ill-posed."""


class SelectorError(UniqcertError):
    """Point selector produced an empty or invalid index set."""


class FeatureEvaluationError(UniqcertError):
    """A feature map produced non-finite values."""

    def __init__(self, message, label=None, point=None):
        super().__init__(message)
        self.label = label
        self.point = point


class ConfigError(UniqcertError):
    """Contradictory or incomplete certification configuration."""
