"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input data or configuration violates a documented precondition."""


class UndefinedMetricError(ValueError):
    """The requested metric has no defined value for this input.

    Raised instead of imputing a number, e.g. AUC on a single-class sample
    or a selection-rate gap with fewer than two nonempty groups.
    """


class CacheError(RuntimeError):
    """A backward pass got a cache that does not match its forward pass."""


class NonFiniteError(FloatingPointError):
    """A gradient became NaN or infinite; the message names the block."""


class TrainingDivergedError(NonFiniteError):
    """Training loss became non-finite; carries epoch/batch coordinates."""


class CheckpointError(ValueError):
    """Base class for checkpoint load failures."""


class CheckpointFormatError(CheckpointError):
    """Checkpoint file is not valid JSON or lacks required keys."""


class CheckpointVersionError(CheckpointError):
    """Checkpoint format version is not supported by this build."""


class CheckpointShapeError(CheckpointError):
    """Checkpoint arrays are missing or have inconsistent shapes."""
