"""Exception hierarchy shared across qreg modules."""


class QregError(Exception):
    """Base class for all qreg errors."""


class ValidationError(QregError, ValueError):
    """Invalid argument or configuration value."""


class DatasetFormatError(QregError):
    """Dataset file is missing, corrupt, truncated, or inconsistent with its header."""


class DimensionMismatchError(QregError):
    """Streamed rows disagree on width, or a QUBO/Gram dimension pairing is wrong."""


class SingularGramError(QregError):
    """Gram matrix is singular or too ill-conditioned for a reliable solve."""


class DivergenceError(QregError):
    """Iterative solver produced non-finite values."""

    def __init__(self, message: str, epoch: int):
        super().__init__(message)
        self.epoch = epoch


class DegenerateTargetError(QregError):
    """Labels have no variance; R-squared is undefined."""


class DegenerateQuboError(QregError):
    """QUBO has no nonzero coefficient; no temperature scale exists."""


class SizeLimitError(QregError):
    """Problem exceeds a hard enumeration limit."""


class ResultsFormatError(QregError):
    """Benchmark results file is missing or cannot be parsed."""


class ExternalSamplerError(QregError):
    """Base class for failures of the external sampler child process."""


class SamplerProcessError(ExternalSamplerError):
    """Child process exited with a nonzero status."""


class SamplerProtocolError(ExternalSamplerError):
    """Child process response was not valid protocol JSON."""


class SamplerTimeoutError(ExternalSamplerError):
    """Child process did not answer within the configured timeout."""


class EnergyMismatchError(ExternalSamplerError):
    """Child-reported energy disagrees with the QUBO beyond tolerance."""
