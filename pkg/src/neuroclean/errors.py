"""Exception types raised across the package.

Every precondition violation maps to one of these named errors so callers
can distinguish bad input from internal failure. All inherit from
:class:`NeurocleanError`.
"""


class NeurocleanError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(NeurocleanError):
    """A data structure failed its consistency checks."""


class ShapeMismatch(NeurocleanError):
    """Two arrays that must agree in shape do not."""


class InvalidCutoff(NeurocleanError):
    """A frequency bound is outside the representable range."""


class SignalTooShort(NeurocleanError):
    """The input has too few samples for the requested operation."""


class EmptyBand(NeurocleanError):
    """A frequency band contains no spectral bins."""


class ConstantInput(NeurocleanError):
    """An operation that needs variance received a constant signal."""


class RecordingTooShort(NeurocleanError):
    """The recording is shorter than the operation requires."""


class AllChannelsRejected(NeurocleanError):
    """Channel rejection would leave fewer than two usable channels."""


class InsufficientChannels(NeurocleanError):
    """An operation needs more simultaneously active channels."""


class InsufficientSamples(NeurocleanError):
    """An operation needs more samples than channels, or more data."""


class RankDeficientData(NeurocleanError):
    """The data covariance has no usable eigenvalues."""


class SingularCovariance(NeurocleanError):
    """A covariance matrix cannot be decomposed or inverted."""


class DegeneratePopulation(NeurocleanError):
    """Too few observations to form a robust population statistic."""


class ClassTooSmall(NeurocleanError):
    """A class has too few trials for balancing or cross-validation."""


class SingleClassTest(NeurocleanError):
    """A test set contains only one class, so ranking metrics are undefined."""


class NoTrialsSurvive(NeurocleanError):
    """Every trial window fell outside the recording bounds."""


class FormatError(NeurocleanError):
    """A file does not conform to the expected on-disk format."""


class ConfigError(NeurocleanError):
    """A configuration value is out of range or inconsistent."""


class PipelineFailure(NeurocleanError):
    """A stage failed mid-run; carries the reports finished so far."""

    def __init__(self, stage: str, reports: tuple, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.reports = reports
        self.cause = cause
