"""Exception hierarchy with CLI exit codes"""
from typing import Optional


class RadioClassError(Exception):
    """Base error for the classifier toolkit"""

    exit_code = 1


class ConfigError(RadioClassError):
    """Invalid configuration or parameter combination"""

    exit_code = 2


class DataError(RadioClassError):
    """Input data violates a precondition"""

    exit_code = 3


class NumericError(RadioClassError):
    """A numeric computation diverged"""

    exit_code = 4


class AsrServiceError(RadioClassError):
    """Transcription service failed or returned an unusable payload"""

    exit_code = 5

    def __init__(self, message: str, status: Optional[int] = None):
        super().__init__(message if status is None else f"{message} (status {status})")
        self.status = status


# Configuration errors

class NonPowerOfTwo(ConfigError, ValueError):
    pass


class NonCOLAConfiguration(ConfigError, ValueError):
    pass


class EvenWidth(ConfigError, ValueError):
    pass


class InvalidRange(ConfigError, ValueError):
    pass


class InvalidHyperparameter(ConfigError, ValueError):
    pass


class InvalidPartition(ConfigError, TypeError):
    pass


# Data errors

class MalformedWav(DataError):
    pass


class UnsupportedEncoding(DataError):
    pass


class MissingTranscript(DataError):
    def __init__(self, clip_id: str, path: Optional[str] = None):
        detail = f" at {path}" if path else ""
        super().__init__(f"No transcript for clip '{clip_id}'{detail}")
        self.clip_id = clip_id


class EmptyCorpus(DataError, ValueError):
    pass


class TooFewFrames(DataError, ValueError):
    pass


class DimensionMismatch(DataError, ValueError):
    pass


class ShapeMismatch(DataError, ValueError):
    pass


class NegativeInput(DataError, ValueError):
    pass


class LengthMismatch(DataError, ValueError):
    pass


class InsufficientClassExamples(DataError, ValueError):
    pass


class SingleClassTrainingSet(DataError, ValueError):
    pass


class SingleClassTruth(DataError, ValueError):
    pass


class NoPositives(DataError, ValueError):
    pass


class EmptyTrainingSet(DataError, ValueError):
    pass


class EmptyEnsemble(DataError, ValueError):
    pass


class InvalidProbabilities(DataError, ValueError):
    pass


class CorpusIoError(DataError, OSError):
    pass


# Numeric errors

class NonFiniteLoss(NumericError):
    def __init__(self, epoch: int, loss: float):
        super().__init__(f"Non-finite training loss {loss} at epoch {epoch}")
        self.epoch = epoch
        self.loss = loss
