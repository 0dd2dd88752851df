"""Exception hierarchy shared across the package."""


class RisSimError(Exception):
    """Base class for all package-specific errors."""


class GeometryError(RisSimError):
    """Invalid or degenerate array/placement geometry."""


class PathSetError(RisSimError):
    """Path set violates the contract of the consuming operation."""


class DimensionError(RisSimError):
    """Vector/matrix dimensions do not match."""


class PartitionError(RisSimError):
    """Requested sub-array partition is incompatible with the panel."""


class SignalError(RisSimError):
    """Degenerate signal configuration (e.g. zero signal with finite SNR)."""


class SolverError(RisSimError):
    """A solver refused the problem (size guard, empty active set, ...)."""


class DegenerateNormalizationError(RisSimError):
    """Metric normalization is undefined for this input."""


class DataFormatError(RisSimError):
    """Base class for dataset file errors."""


class VersionMismatchError(DataFormatError):
    """Dataset file carries an unsupported format version."""


class TruncatedFileError(DataFormatError):
    """Dataset file ends before the declared content."""


class ChecksumError(DataFormatError):
    """Record or file checksum does not match the stored value."""


class SchemaError(RisSimError):
    """A results/predictions file violates the documented schema."""
