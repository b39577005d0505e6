"""Exception hierarchy shared by all modules."""


class DensalgError(Exception):
    """Base class for every error raised by the package."""


class ChartMismatch(DensalgError):
    pass


class UnknownCoordinate(DensalgError):
    pass


class ParityError(DensalgError):
    pass


class NotInvertible(DensalgError):
    """An element or matrix whose body is not invertible."""


class OrderError(DensalgError):
    """An operator exceeds the order bound an operation requires."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class SingularWeight(DensalgError):
    pass


class WeightError(DensalgError):
    pass


class DegenerateStructure(DensalgError):
    pass


class PreconditionFailed(DensalgError):
    pass


class InternalInconsistency(DensalgError):
    """Two routes that must agree disagreed: a convention bug, never a verdict."""
