"""Exception hierarchy shared across the toolkit.

CLI exit-code mapping: UsageFault -> 1, DataFault -> 2, anything else -> 3.
"""


class FolkdspError(Exception):
    """Base class for every error raised by this package."""


class DataFault(FolkdspError):
    """Problems with input data (files, headers, labels, shapes)."""


class UsageFault(FolkdspError):
    """Problems with parameters or configuration supplied by the caller."""


class DecodeError(DataFault):
    """Malformed audio container."""


class UnsupportedFormat(DataFault):
    """Audio container is valid but uses a codec outside the supported set."""


class InputTooShort(DataFault):
    """Clip shorter than one analysis frame."""


class SchemaError(DataFault):
    """Persisted table header does not match the declared schema."""


class DataError(DataFault):
    """Non-finite values, unknown labels, or similar content problems."""


class ShapeError(DataFault):
    """Matrix/vector dimensions do not agree with the operation's contract."""


class SplitError(DataFault):
    """A class is too small for the requested partitioning."""


class InvalidClustering(DataFault):
    """Clustering does not satisfy the preconditions of a quality metric."""


class ConfigError(UsageFault):
    """Infeasible or inconsistent run configuration."""


class TrainingDiverged(FolkdspError):
    """Optimization produced a non-finite loss."""

    def __init__(self, epoch: int, message: str = ""):
        self.epoch = epoch
        super().__init__(message or f"training loss became non-finite at epoch {epoch}")
