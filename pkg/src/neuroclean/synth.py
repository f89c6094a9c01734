"""Seeded synthetic recordings with a ground-truth manifest.

Every generated recording starts from per-channel pink noise and layers
optional contaminants on top: a rank-one mains sinusoid, flat and hot
channels, blink-like positive spike trains, slow drift, and class-specific
band gains inside trial windows. The manifest records exactly what was
injected so cleaning results can be scored against it.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np

from . import dsp
from .errors import ConfigError
from .model import Event, Recording, StageReport


@dataclass(frozen=True)
class LineSpec:
    """A rank-one sinusoid at the mains frequency."""

    freq_hz: float = 60.0
    amplitude_uv: float = 20.0


@dataclass(frozen=True)
class BadChannelSpec:
    """Channels overwritten with nearly-flat or implausibly hot noise."""

    flat_channels: tuple[int, ...] = ()
    hot_channels: tuple[int, ...] = ()
    flat_sigma_uv: float = 0.05
    hot_sigma_uv: float = 500.0


@dataclass(frozen=True)
class SpikeSpec:
    """Blink-like one-sided exponential-decay positive transients."""

    channels: tuple[int, ...] = ()
    rate_hz: float = 0.5
    amplitude_uv: float = 80.0
    decay_s: float = 0.05
    line_leak_amplitude_uv: float = 0.0


@dataclass(frozen=True)
class ClassSpec:
    """Task structure: per-class gains on a band inside trial windows."""

    n_classes: int = 3
    trials_per_class: int = 40
    band_lo_hz: float = 20.0
    band_hi_hz: float = 45.0
    gain_depth: float = 0.6
    epoch_len_p: int = 500


@dataclass(frozen=True)
class DriftSpec:
    """Slow sub-bandpass oscillation with a drifting envelope."""

    amplitude_uv: float = 50.0
    freq_hz: float = 0.3
    envelope_freq_hz: float = 0.05


@dataclass(frozen=True)
class SynthSpec:
    """Everything needed to synthesize one recording, JSON-serializable."""

    n_channels: int = 16
    sampling_rate_hz: float = 1000.0
    duration_s: float = 60.0
    pink_exponent: float = 1.0
    sigma_uv_range: tuple[float, float] = (8.0, 12.0)
    seed: int = 0
    line: LineSpec | None = None
    bad_channels: BadChannelSpec = field(default_factory=BadChannelSpec)
    spikes: SpikeSpec | None = None
    classes: ClassSpec | None = None
    drift: DriftSpec | None = None

    def validate(self) -> None:
        if self.n_channels < 1 or self.duration_s <= 0 or self.sampling_rate_hz <= 0:
            raise ConfigError("n_channels, duration_s and sampling_rate_hz must be positive")
        lo, hi = self.sigma_uv_range
        if not (0 < lo <= hi):
            raise ConfigError(f"sigma_uv_range must be 0 < lo <= hi, got {self.sigma_uv_range}")
        if self.pink_exponent < 0:
            raise ConfigError("pink_exponent must be >= 0")
        n = int(round(self.duration_s * self.sampling_rate_hz))
        for name, idx in (
            ("flat", self.bad_channels.flat_channels),
            ("hot", self.bad_channels.hot_channels),
        ):
            for ch in idx:
                if not (0 <= ch < self.n_channels):
                    raise ConfigError(f"{name} channel {ch} outside [0, {self.n_channels})")
        if set(self.bad_channels.flat_channels) & set(self.bad_channels.hot_channels):
            raise ConfigError("a channel cannot be both flat and hot")
        if self.spikes is not None:
            for ch in self.spikes.channels:
                if not (0 <= ch < self.n_channels):
                    raise ConfigError(f"spike channel {ch} outside [0, {self.n_channels})")
        if self.classes is not None:
            c = self.classes
            if c.n_classes < 2 or c.trials_per_class < 1:
                raise ConfigError("need n_classes >= 2 and trials_per_class >= 1")
            if not (0 < c.band_lo_hz < c.band_hi_hz < self.sampling_rate_hz / 2):
                raise ConfigError("class band must sit inside (0, Nyquist)")
            n_trials = c.n_classes * c.trials_per_class
            if n < (n_trials + 2) * c.epoch_len_p:
                raise ConfigError(
                    f"{n} samples cannot hold {n_trials} non-overlapping trials of {c.epoch_len_p}"
                )

    def to_dict(self) -> dict[str, Any]:
        out = dataclasses.asdict(self)
        out["sigma_uv_range"] = list(self.sigma_uv_range)
        return out

    @classmethod
    def from_dict(cls, payload: dict[str, Any]) -> "SynthSpec":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(payload) - known)
        if unknown:
            raise ConfigError(f"unknown synth spec keys: {', '.join(unknown)}")
        kwargs = dict(payload)
        if kwargs.get("sigma_uv_range") is not None:
            kwargs["sigma_uv_range"] = tuple(kwargs["sigma_uv_range"])
        for key, sub in (
            ("line", LineSpec),
            ("bad_channels", BadChannelSpec),
            ("spikes", SpikeSpec),
            ("classes", ClassSpec),
            ("drift", DriftSpec),
        ):
            value = kwargs.get(key)
            if isinstance(value, dict):
                sub_kwargs = dict(value)
                for tup_key in ("flat_channels", "hot_channels", "channels"):
                    if tup_key in sub_kwargs and sub_kwargs[tup_key] is not None:
                        sub_kwargs[tup_key] = tuple(sub_kwargs[tup_key])
                kwargs[key] = sub(**sub_kwargs)
        spec = cls(**kwargs)
        spec.validate()
        return spec

    @classmethod
    def from_json(cls, text: str) -> "SynthSpec":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"synth spec is not valid JSON: {exc}") from exc
        if not isinstance(payload, dict):
            raise ConfigError("synth spec JSON must be an object")
        return cls.from_dict(payload)


@dataclass(frozen=True)
class GroundTruth:
    """What was injected, for scoring cleaning output against."""

    seed: int
    channel_sigma_uv: tuple[float, ...]
    flat_channels: tuple[int, ...]
    hot_channels: tuple[int, ...]
    line_freq_hz: float | None
    line_amplitude_uv: float | None
    line_pattern: tuple[float, ...] | None
    spike_channels: tuple[int, ...]
    spike_times_s: tuple[float, ...]
    class_names: tuple[str, ...]
    event_labels: tuple[str, ...]
    event_samples: tuple[int, ...]
    class_gains: tuple[tuple[float, ...], ...]
    class_band_hz: tuple[float, float] | None

    @property
    def bad_channels(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.flat_channels) | set(self.hot_channels)))

    def to_dict(self) -> dict[str, Any]:
        out = dataclasses.asdict(self)
        out["bad_channels"] = list(self.bad_channels)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _pink_rows(rng: np.random.Generator, n_channels: int, n: int, exponent: float) -> np.ndarray:
    """Unit-variance noise rows with PSD proportional to 1/f^exponent."""
    freqs = np.fft.rfftfreq(n)
    shaping = np.zeros(freqs.size)
    shaping[1:] = freqs[1:] ** (-exponent / 2.0)
    rows = np.empty((n_channels, n))
    for ch in range(n_channels):
        white = rng.standard_normal(n)
        shaped = np.fft.irfft(np.fft.rfft(white) * shaping, n=n)
        sd = shaped.std()
        rows[ch] = shaped / (sd if sd > 0 else 1.0)
    return rows


def _trial_envelope(n: int, starts: np.ndarray, length: int, ramp: int) -> list[tuple[int, int]]:
    """Trial windows as (start, stop) clipped to the signal."""
    windows = []
    for s in starts:
        a = max(0, int(s))
        b = min(n, int(s) + length)
        if b - a >= 2 * ramp + 1:
            windows.append((a, b))
    return windows


def generate(spec: SynthSpec) -> tuple[Recording, GroundTruth]:
    """Synthesize a recording and its ground-truth manifest.

    Fully determined by ``spec`` (including its seed): independent seeded
    substreams drive noise, channel deviations, contaminant patterns and
    trial labels, so any single ingredient can change without reshuffling
    the others.
    """
    spec.validate()
    fs = spec.sampling_rate_hz
    n = int(round(spec.duration_s * fs))
    t = np.arange(n) / fs
    streams = np.random.SeedSequence(spec.seed).spawn(7)
    rng_noise = np.random.default_rng(streams[0])
    rng_sigma = np.random.default_rng(streams[1])
    rng_line = np.random.default_rng(streams[2])
    rng_spike = np.random.default_rng(streams[3])
    rng_class = np.random.default_rng(streams[4])
    rng_drift = np.random.default_rng(streams[5])
    rng_bad = np.random.default_rng(streams[6])

    lo, hi = spec.sigma_uv_range
    sigma = rng_sigma.uniform(lo, hi, size=spec.n_channels)
    data = _pink_rows(rng_noise, spec.n_channels, n, spec.pink_exponent) * sigma[:, None]

    # class structure: per-class gain on one band inside each trial window
    events: list[Event] = []
    class_names: tuple[str, ...] = ()
    gains: np.ndarray = np.zeros((0, spec.n_channels))
    class_band = None
    if spec.classes is not None:
        c = spec.classes
        p = c.epoch_len_p
        n_trials = c.n_classes * c.trials_per_class
        step = (n - 2 * p) // n_trials
        starts = p + np.arange(n_trials) * step
        label_codes = np.repeat(np.arange(c.n_classes), c.trials_per_class)
        label_codes = label_codes[rng_class.permutation(n_trials)]
        class_names = tuple(f"class_{k}" for k in range(c.n_classes))
        gains = 1.0 + c.gain_depth * rng_class.uniform(-1.0, 1.0, size=(c.n_classes, spec.n_channels))
        class_band = (c.band_lo_hz, c.band_hi_hz)
        filt = dsp.design_butterworth(4, c.band_lo_hz, c.band_hi_hz, fs)
        band_part = dsp.filtfilt(filt, data)
        rest = data - band_part
        envelope = np.ones((spec.n_channels, n))
        ramp = max(2, min(50, p // 4))
        window = 0.5 * (1.0 - np.cos(np.linspace(0.0, np.pi, ramp)))
        for start, code in zip(starts, label_codes):
            a, b = int(start), int(start) + p
            shape = np.ones(b - a)
            shape[:ramp] = window
            shape[-ramp:] = window[::-1]
            envelope[:, a:b] = 1.0 + (gains[code][:, None] - 1.0) * shape
            centre = a + p // 2
            events.append(Event(sample_index=centre, label=class_names[code]))
        data = rest + band_part * envelope

    # slow drift below the analysis band, envelope-modulated
    if spec.drift is not None:
        d = spec.drift
        phases = rng_drift.uniform(0.0, 2.0 * np.pi, size=spec.n_channels)
        env_phases = rng_drift.uniform(0.0, 2.0 * np.pi, size=spec.n_channels)
        osc = np.sin(2.0 * np.pi * d.freq_hz * t[None, :] + phases[:, None])
        env = 1.0 + 0.5 * np.sin(2.0 * np.pi * d.envelope_freq_hz * t[None, :] + env_phases[:, None])
        data = data + d.amplitude_uv * osc * env

    # rank-one mains sinusoid
    line_pattern = None
    if spec.line is not None and spec.line.amplitude_uv > 0:
        pattern = rng_line.standard_normal(spec.n_channels)
        pattern /= np.linalg.norm(pattern)
        phase = rng_line.uniform(0.0, 2.0 * np.pi)
        course = spec.line.amplitude_uv * np.sin(2.0 * np.pi * spec.line.freq_hz * t + phase)
        data = data + np.outer(pattern, course)
        line_pattern = tuple(float(v) for v in pattern)

    # blink-like spikes, optionally leaking some mains into their channels
    spike_times: tuple[float, ...] = ()
    if spec.spikes is not None and spec.spikes.channels:
        s = spec.spikes
        expected = s.rate_hz * spec.duration_s
        n_events = int(rng_spike.poisson(expected))
        times = np.sort(rng_spike.uniform(0.0, spec.duration_s, size=n_events))
        course = np.zeros(n)
        tau = max(s.decay_s, 1.0 / fs)
        kernel_len = int(round(6.0 * tau * fs))
        kernel = np.exp(-np.arange(kernel_len) / (tau * fs))
        for when in times:
            i = int(round(when * fs))
            j = min(n, i + kernel_len)
            if i < n:
                course[i:j] += s.amplitude_uv * kernel[: j - i]
        if s.line_leak_amplitude_uv > 0 and spec.line is not None:
            leak_phase = rng_spike.uniform(0.0, 2.0 * np.pi)
            course = course + s.line_leak_amplitude_uv * np.sin(
                2.0 * np.pi * spec.line.freq_hz * t + leak_phase
            )
        weights = rng_spike.uniform(0.5, 1.0, size=len(s.channels))
        weights /= weights.max()
        for ch, w in zip(s.channels, weights):
            data[ch] += w * course
        spike_times = tuple(float(v) for v in times)

    # flat and hot channels replace whatever was there
    for ch in spec.bad_channels.flat_channels:
        data[ch] = rng_bad.standard_normal(n) * spec.bad_channels.flat_sigma_uv
    for ch in spec.bad_channels.hot_channels:
        data[ch] = rng_bad.standard_normal(n) * spec.bad_channels.hot_sigma_uv

    recording = Recording(
        data=data,
        sampling_rate_hz=fs,
        line_freq_hz=spec.line.freq_hz if spec.line is not None else None,
        events=tuple(events),
    )
    truth = GroundTruth(
        seed=spec.seed,
        channel_sigma_uv=tuple(float(v) for v in sigma),
        flat_channels=tuple(spec.bad_channels.flat_channels),
        hot_channels=tuple(spec.bad_channels.hot_channels),
        line_freq_hz=spec.line.freq_hz if spec.line is not None else None,
        line_amplitude_uv=spec.line.amplitude_uv if spec.line is not None else None,
        line_pattern=line_pattern,
        spike_channels=tuple(spec.spikes.channels) if spec.spikes is not None else (),
        spike_times_s=spike_times,
        class_names=class_names,
        event_labels=tuple(e.label for e in events),
        event_samples=tuple(e.sample_index for e in events),
        class_gains=tuple(tuple(float(v) for v in row) for row in gains),
        class_band_hz=class_band,
    )
    return recording, truth


@dataclass(frozen=True)
class ScoreCard:
    """Cleaning performance against the manifest, by simple counting."""

    channel_precision: float
    channel_recall: float
    n_channels_rejected: int
    n_channels_truth: int
    n_components_rejected: int
    artifact_expected: bool
    artifact_caught: bool | None
    line_reduction_db: float | None

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


def score_against_truth(reports: Iterable[StageReport], truth: GroundTruth) -> ScoreCard:
    """Compare stage reports with the manifest.

    Channel precision/recall count exact index matches against the
    injected flat/hot set (empty sets score 1.0). Component rejection is
    scored as caught/missed because component identities are not exposed
    by the manifest. Line reduction is read from the line-removal report.
    """
    rejected: set[int] = set()
    components: set[int] = set()
    line_reduction = None
    for report in reports:
        rejected.update(int(i) for i in report.rejected_channel_indices)
        components.update(int(i) for i in report.rejected_component_indices)
        before = report.params.get("line_band_power_before_db")
        after = report.params.get("line_band_power_after_db")
        if before is not None and after is not None:
            line_reduction = float(before) - float(after)
    truth_bad = set(truth.bad_channels)
    tp = len(rejected & truth_bad)
    precision = 1.0 if not rejected else tp / len(rejected)
    recall = 1.0 if not truth_bad else tp / len(truth_bad)
    expected = bool(truth.spike_channels)
    caught = (len(components) > 0) if expected else None
    return ScoreCard(
        channel_precision=precision,
        channel_recall=recall,
        n_channels_rejected=len(rejected),
        n_channels_truth=len(truth_bad),
        n_components_rejected=len(components),
        artifact_expected=expected,
        artifact_caught=caught,
        line_reduction_db=line_reduction,
    )
