"""Exception hierarchy for the simulator toolchain.

Every error raised on a contract violation derives from SenseSimError so the
CLI can map any domain failure to a structured message and a nonzero exit.
"""


class SenseSimError(Exception):
    """Base class for all toolchain errors."""


class MissingFile(SenseSimError):
    """A descriptor or tensor file path does not exist."""


class ShapeMismatch(SenseSimError):
    """Declared dims disagree with the data actually present."""


class ValueOverflow(SenseSimError):
    """A value does not fit the simulated integer width."""


class EmptyRange(SenseSimError):
    """A value range contains no usable (nonzero) values."""


class BadSpec(SenseSimError):
    """A requested setting (keep fraction, sweep axis, thread cap) is outside
    its legal domain."""


class CorruptBlock(SenseSimError):
    """A compressed block's bitmap disagrees with its stored length."""


class GeometryMismatch(SenseSimError):
    """Layer/tile geometry is inconsistent (kernel, stride, pad, dims)."""


class ColumnMismatch(SenseSimError):
    """A compressed column does not match the expected column geometry."""


class UnresolvedSchedule(SenseSimError):
    """Timing was requested before the layer schedule was built."""


class ZeroCycles(SenseSimError):
    """Utilization requested over a zero-cycle interval."""


class IncompleteInputs(SenseSimError):
    """Schedule building is missing pruning/compression inputs."""
