"""Exception hierarchy shared by all haarscatter modules."""


class HaarScatterError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatchError(HaarScatterError):
    """An input's length or shape is incompatible with the operation."""


class ShapeMismatchError(HaarScatterError):
    """Signals in a batch do not share a common shape."""


class EmptyBatchError(HaarScatterError):
    """An operation requiring at least one sample received none."""


class OddSizeError(HaarScatterError):
    """A perfect matching was requested over an odd number of units."""


class TooFewSamplesError(HaarScatterError):
    """Fewer training samples than bagging subsets."""


class NegativeInputError(HaarScatterError):
    """A strictly nonnegative signal contained negative entries."""


class NotPowerOfTwoError(HaarScatterError):
    """A dimension that must be a power of two is not."""


class IndexOutOfRangeError(HaarScatterError):
    """A layer, row or feature index is outside its valid range."""


class WrongModeError(HaarScatterError):
    """Operation requires the other network mode (free vs structured)."""


class InconsistentPartitionError(HaarScatterError):
    """A dyadic partition does not match the network that allegedly built it."""


class InadmissibleIndexError(HaarScatterError):
    """Coefficient/scale indices do not describe a valid wavelet identity."""


class TooSmallError(HaarScatterError):
    """Dimension too small for interlaced pairings."""


class NotInterlacedError(HaarScatterError):
    """Two pairings leave a strict index subset closed under both."""


class AmbiguousReconstructionError(HaarScatterError):
    """Two-valued alternating signal: inversion has multiple consistent answers."""


class InconsistentInputsError(HaarScatterError):
    """No signal is consistent with the transforms handed to the inverter."""


class InvalidModelError(HaarScatterError):
    """A ring-process model has an invalid correlation sequence."""


class ZeroGapError(HaarScatterError):
    """Sample-size bound undefined because the correlation gap is zero."""


class DegenerateDictionaryError(HaarScatterError):
    """Every remaining candidate feature has (numerically) zero norm."""


class SingularSystemError(HaarScatterError):
    """Unregularized kernel system is singular."""


class BadMagicError(HaarScatterError):
    """IDX file starts with an unexpected magic number."""


class TruncatedFileError(HaarScatterError):
    """IDX file ends before its declared payload."""


class VersionMismatchError(HaarScatterError):
    """Model file written by an incompatible format version."""


class CorruptFileError(HaarScatterError):
    """Model file cannot be parsed or is internally inconsistent."""
