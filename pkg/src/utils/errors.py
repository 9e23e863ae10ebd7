"""Exception types raised across codegloss."""


class CodeGlossError(Exception):
    """Base class for all codegloss errors"""


class ShapeError(CodeGlossError, ValueError):
    """Tensor shapes do not conform to an operation"""


class IndexRangeError(CodeGlossError, IndexError):
    """An id or index lies outside the valid range"""


class NumericalError(CodeGlossError, FloatingPointError):
    """An operation produced NaN or Inf"""


class TapeUsageError(CodeGlossError, RuntimeError):
    """Gradient requested for a value that was not recorded on the tape"""


class InputError(CodeGlossError, ValueError):
    """Caller supplied empty or otherwise unusable input"""


class EncodingError(CodeGlossError, ValueError):
    """A comment word cannot be covered by the vocabulary"""


class CompatibilityError(CodeGlossError):
    """Checkpoint and vocabulary do not belong together"""


class CheckpointFormatError(CodeGlossError, ValueError):
    """Checkpoint blob is truncated, corrupt or inconsistent with its manifest"""


class ConfigError(CodeGlossError, ValueError):
    """Configuration values are missing or of the wrong type"""


class TrainingDivergenceError(CodeGlossError, RuntimeError):
    """Training produced a non-finite loss"""

    def __init__(self, message: str, last_good=None):
        super().__init__(message)
        self.last_good = last_good
