"""Exception types raised by lesionkit operations."""


class LesionKitError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(LesionKitError, ValueError):
    """A file or value violates one of the documented interchange formats."""


class AlignmentError(LesionKitError, ValueError):
    """Prediction and ground-truth sets do not cover the same image ids."""

    def __init__(self, message: str, missing_from_predictions=(), missing_from_truth=()):
        super().__init__(message)
        self.missing_from_predictions = tuple(missing_from_predictions)
        self.missing_from_truth = tuple(missing_from_truth)


class BackendProtocolError(LesionKitError, RuntimeError):
    """An inference backend violated the line protocol."""
