"""Core data model: recordings, events, epochs, configuration, stage reports.

All signal payloads are float64 matrices shaped ``(n_channels, n_samples)``
in microvolts. Channels that have been rejected stay in the matrix as
all-zero rows and are tracked through ``channel_mask`` so that channel
indices remain stable across every stage.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import ConfigError, ValidationError

ALLOWED_LINE_FREQS = (50.0, 60.0)


@dataclass(frozen=True)
class Event:
    """A labelled time marker, in samples from the start of the recording."""

    sample_index: int
    label: str


@dataclass(frozen=True)
class Recording:
    """A multichannel time series with its acquisition metadata.

    Parameters
    ----------
    data : ndarray
        Signal matrix ``(n_channels, n_samples)``, microvolts. Stored as
        float64; the constructor does not defensively copy.
    sampling_rate_hz : float
        Sampling rate in Hz.
    line_freq_hz : float or None
        Mains frequency of the acquisition environment (50 or 60), or None
        when unknown.
    events : tuple of Event
        Trial markers, if any.
    channel_mask : ndarray of bool
        True for channels that still carry signal. Rejected channels are
        zeroed in ``data`` but never removed, so indices stay stable.
    """

    data: np.ndarray
    sampling_rate_hz: float
    line_freq_hz: float | None = None
    events: tuple[Event, ...] = ()
    channel_mask: np.ndarray | None = None

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=np.float64)
        object.__setattr__(self, "data", arr)
        if self.channel_mask is None:
            mask = np.ones(arr.shape[0] if arr.ndim == 2 else 0, dtype=bool)
        else:
            mask = np.asarray(self.channel_mask, dtype=bool)
        object.__setattr__(self, "channel_mask", mask)
        object.__setattr__(self, "events", tuple(self.events))

    @property
    def n_channels(self) -> int:
        return int(self.data.shape[0])

    @property
    def n_samples(self) -> int:
        return int(self.data.shape[1])

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sampling_rate_hz

    @property
    def active_indices(self) -> np.ndarray:
        """Indices of channels still carrying signal."""
        return np.flatnonzero(self.channel_mask)

    def active_data(self) -> np.ndarray:
        """View of the rows for active channels only."""
        return self.data[self.channel_mask]

    def with_data(self, data: np.ndarray, channel_mask: np.ndarray | None = None) -> "Recording":
        """Copy of this recording with a new signal matrix (and optionally mask)."""
        mask = self.channel_mask if channel_mask is None else channel_mask
        return Recording(
            data=data,
            sampling_rate_hz=self.sampling_rate_hz,
            line_freq_hz=self.line_freq_hz,
            events=self.events,
            channel_mask=mask,
        )


@dataclass(frozen=True)
class EpochedData:
    """Trials cut around events: ``trials`` is ``(n_trials, n_channels, p)``."""

    trials: np.ndarray
    labels: tuple[str, ...]
    epoch_len_p: int
    sampling_rate_hz: float
    channel_mask: np.ndarray
    event_sample_indices: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "trials", np.asarray(self.trials, dtype=np.float64))
        object.__setattr__(self, "channel_mask", np.asarray(self.channel_mask, dtype=bool))
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "event_sample_indices", tuple(int(i) for i in self.event_sample_indices))

    @property
    def n_trials(self) -> int:
        return int(self.trials.shape[0])

    @property
    def n_channels(self) -> int:
        return int(self.trials.shape[1])


@dataclass(frozen=True)
class PipelineConfig:
    """Every tunable of the cleaning pipeline, JSON-serializable.

    The file format accepted by the command line mirrors these field names
    exactly, one key per field.
    """

    bandpass_low_hz: float = 1.0
    bandpass_high_hz: float = 500.0
    butterworth_order: int = 4
    line_freq_hz: float | None = None
    zapline_n_remove: int | str = "auto"
    zapline_n_harmonics: int | None = None
    zapline_notch_bandwidth_hz: float = 0.5
    bcr_sd_low_uv: float = 0.1
    bcr_sd_high_uv: float = 100.0
    bcr_max_iters: int = 5
    bcr_literal_quartile: bool = False
    ica_max_iter: int = 200
    ica_tol: float = 1e-4
    dbscan_eps: float = 2.0
    dbscan_min_samples: int = 2
    mara_standardize: bool = True
    mara_skew_window_s: float = 15.0
    mara_fit_lo_hz: float = 2.0
    mara_fit_hi_hz: float = 35.0
    epoch_len_p: int = 500
    random_seed: int = 0
    enable_bandpass: bool = True
    enable_zapline: bool = True
    enable_channel_reject: bool = True
    enable_component_reject: bool = True

    def validate(self) -> None:
        """Raise ConfigError on any out-of-range or inconsistent value."""
        if not (0 < self.bandpass_low_hz < self.bandpass_high_hz):
            raise ConfigError(
                f"need 0 < bandpass_low_hz < bandpass_high_hz, got "
                f"{self.bandpass_low_hz} and {self.bandpass_high_hz}"
            )
        if self.butterworth_order < 1:
            raise ConfigError("butterworth_order must be >= 1")
        if self.line_freq_hz is not None and float(self.line_freq_hz) not in ALLOWED_LINE_FREQS:
            raise ConfigError(f"line_freq_hz must be one of {ALLOWED_LINE_FREQS} or null")
        if isinstance(self.zapline_n_remove, str):
            if self.zapline_n_remove != "auto":
                raise ConfigError("zapline_n_remove must be 'auto' or a non-negative integer")
        elif int(self.zapline_n_remove) < 0:
            raise ConfigError("zapline_n_remove must be 'auto' or a non-negative integer")
        if self.zapline_notch_bandwidth_hz <= 0:
            raise ConfigError("zapline_notch_bandwidth_hz must be positive")
        if not (0 <= self.bcr_sd_low_uv < self.bcr_sd_high_uv):
            raise ConfigError("need 0 <= bcr_sd_low_uv < bcr_sd_high_uv")
        if self.bcr_max_iters < 1:
            raise ConfigError("bcr_max_iters must be >= 1")
        if self.ica_max_iter < 1 or self.ica_tol <= 0:
            raise ConfigError("ica_max_iter must be >= 1 and ica_tol positive")
        if self.dbscan_eps <= 0 or self.dbscan_min_samples < 1:
            raise ConfigError("dbscan_eps must be positive and dbscan_min_samples >= 1")
        if self.mara_skew_window_s <= 0:
            raise ConfigError("mara_skew_window_s must be positive")
        if not (0 < self.mara_fit_lo_hz < self.mara_fit_hi_hz):
            raise ConfigError("need 0 < mara_fit_lo_hz < mara_fit_hi_hz")
        if self.epoch_len_p < 1:
            raise ConfigError("epoch_len_p must be >= 1")

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, payload: dict[str, Any]) -> "PipelineConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(payload) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        cfg = cls(**payload)
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, text: str) -> "PipelineConfig":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(payload, dict):
            raise ConfigError("config JSON must be an object")
        return cls.from_dict(payload)


def effective_high_cutoff(config: PipelineConfig, sampling_rate_hz: float) -> float | None:
    """Upper bandpass edge usable at this sampling rate, or None to skip it.

    The upper edge must sit strictly below the Nyquist frequency; when the
    rate is too low the filter degrades to a pure high-pass.
    """
    high = float(config.bandpass_high_hz)
    if sampling_rate_hz <= 2.0 * high:
        return None
    return high


@dataclass(frozen=True)
class StageReport:
    """What one pipeline stage did, serializable to a JSON-lines log.

    ``wall_time_ms`` is the only field allowed to differ between two runs
    on identical input; byte-level reproducibility checks must exclude it.
    """

    stage_name: str
    params: dict[str, Any] = field(default_factory=dict)
    rejected_channel_indices: tuple[int, ...] = ()
    rejected_component_indices: tuple[int, ...] = ()
    qa_before: Any | None = None
    qa_after: Any | None = None
    wall_time_ms: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        def qa_dict(qa: Any) -> Any:
            if qa is None:
                return None
            return qa.to_dict() if hasattr(qa, "to_dict") else qa

        return {
            "stage_name": self.stage_name,
            "params": _jsonable(self.params),
            "rejected_channel_indices": [int(i) for i in self.rejected_channel_indices],
            "rejected_component_indices": [int(i) for i in self.rejected_component_indices],
            "qa_before": qa_dict(self.qa_before),
            "qa_after": qa_dict(self.qa_after),
            "wall_time_ms": float(self.wall_time_ms),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _jsonable(value: Any) -> Any:
    """Recursively coerce numpy scalars/arrays so json.dumps accepts them."""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    return value


def validate(recording: Recording) -> list[str]:
    """Collect every consistency problem in a recording.

    Returns an empty list when the recording is well formed. Callers that
    need a hard failure can use :func:`require_valid`.
    """
    problems: list[str] = []
    data = recording.data
    if data.ndim != 2:
        problems.append(f"data must be 2-D (channels x samples), got ndim={data.ndim}")
        return problems
    n_channels, n_samples = data.shape
    if n_channels < 1:
        problems.append("need at least one channel")
    if n_samples < 2:
        problems.append(f"need at least two samples, got {n_samples}")
    if not np.isfinite(data).all():
        problems.append("data contains NaN or infinity")
    if not (recording.sampling_rate_hz > 0):
        problems.append(f"sampling rate must be positive, got {recording.sampling_rate_hz}")
    if recording.line_freq_hz is not None and float(recording.line_freq_hz) not in ALLOWED_LINE_FREQS:
        problems.append(f"line_freq_hz must be one of {ALLOWED_LINE_FREQS}, got {recording.line_freq_hz}")
    if recording.channel_mask.shape != (n_channels,):
        problems.append(
            f"channel_mask length {recording.channel_mask.shape} does not match {n_channels} channels"
        )
    else:
        masked = ~recording.channel_mask
        if masked.any() and np.any(data[masked] != 0.0):
            problems.append("masked-out channels must be all-zero rows")
    for i, ev in enumerate(recording.events):
        if not (0 <= ev.sample_index < n_samples):
            problems.append(f"event {i} sample_index {ev.sample_index} outside [0, {n_samples})")
        if not ev.label:
            problems.append(f"event {i} has an empty label")
    return problems


def require_valid(recording: Recording) -> None:
    """Raise ValidationError listing all problems, if any."""
    problems = validate(recording)
    if problems:
        raise ValidationError("; ".join(problems))
