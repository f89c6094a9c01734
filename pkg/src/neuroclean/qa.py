"""Signal-quality metrics computed before and after each cleaning stage.

These are the traditional (non-classification) quality measures: residual
signal-to-noise, similarity of the spectrum to a 1/f law, robust artifact
probabilities for ICA components, and simple retention bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np
import scipy.special

from . import dsp
from .errors import DegeneratePopulation, EmptyBand, ShapeMismatch
from .mara import FEATURE_NAMES, MaraFeatureMatrix
from .model import Recording, StageReport

SNR_CAP_DB = 300.0


@dataclass(frozen=True)
class QaMetrics:
    """Quality snapshot; fields that do not apply are None.

    ``snr_db`` compares a stage's output against its input, while
    ``snr_vs_raw_db`` compares against the raw recording, so both the
    per-stage and the cumulative effect are logged.
    """

    snr_db: float | None = None
    snr_vs_raw_db: float | None = None
    one_over_f_similarity: float | None = None
    artifact_probabilities: tuple[float, ...] | None = None
    channels_retained_fraction: float | None = None
    components_rejected_fraction: float | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "snr_db": self.snr_db,
            "snr_vs_raw_db": self.snr_vs_raw_db,
            "one_over_f_similarity": self.one_over_f_similarity,
            "artifact_probabilities": None
            if self.artifact_probabilities is None
            else list(self.artifact_probabilities),
            "channels_retained_fraction": self.channels_retained_fraction,
            "components_rejected_fraction": self.components_rejected_fraction,
        }


def snr_db(before: Recording, after: Recording) -> float:
    """Ratio of retained power to removed power across both recordings.

    Power is averaged over channels active in both recordings. A cleaning
    step that removed nothing returns the +300 dB cap; one that removed
    everything returns -300 dB.
    """
    if before.data.shape != after.data.shape:
        raise ShapeMismatch(
            f"recordings differ in shape: {before.data.shape} vs {after.data.shape}"
        )
    both = before.channel_mask & after.channel_mask
    if not both.any():
        raise ShapeMismatch("no channel is active in both recordings")
    residual = before.data[both] - after.data[both]
    p_after = float(np.mean(after.data[both] ** 2))
    p_residual = float(np.mean(residual**2))
    if p_residual == 0.0:
        return SNR_CAP_DB
    if p_after == 0.0:
        return -SNR_CAP_DB
    return float(np.clip(10.0 * np.log10(p_after / p_residual), -SNR_CAP_DB, SNR_CAP_DB))


def one_over_f_similarity(
    recording: Recording,
    f_lo_hz: float = 2.0,
    f_hi_hz: float = 35.0,
) -> float:
    """Mean per-channel correlation between the log PSD and a 1/f law.

    For each active channel the Welch log-spectrum over
    [f_lo, min(f_hi, 0.9 * Nyquist)] is correlated with ln(1/f); values
    near 1 indicate physiological-looking spectra, near 0 a flat spectrum.
    """
    fs = recording.sampling_rate_hz
    hi = min(f_hi_hz, 0.45 * fs)
    values = []
    for idx in recording.active_indices:
        psd = dsp.welch_psd(recording.data[idx], fs)
        sel = (psd.freqs_hz >= f_lo_hz) & (psd.freqs_hz <= hi)
        if int(sel.sum()) < 2:
            raise EmptyBand(f"fewer than 2 PSD bins in [{f_lo_hz}, {hi}] Hz")
        log_p = np.log(np.maximum(psd.power[sel], 1e-30))
        target = -np.log(psd.freqs_hz[sel])
        values.append(dsp.pearson(log_p, target))
    if not values:
        raise ShapeMismatch("recording has no active channels")
    return float(np.mean(values))


_PROBABILITY_FEATURES = ("mean_local_skewness", "one_over_f_slope", "one_over_f_fit_error")


def artifact_probability(features: MaraFeatureMatrix, offset: float = 2.0) -> np.ndarray:
    """Per-component probability of being an artifact, in [0, 1].

    Each of the three temporal/spectral features (mean local skewness,
    1/f slope, 1/f fit error) is converted to a robust z-score against the
    component population (median / MAD); the probability is the logistic
    of their mean minus ``offset``. Monotone in every feature's z-score.
    """
    values = features.values
    n = values.shape[0]
    if n < 3:
        raise DegeneratePopulation(f"need at least 3 components, got {n}")
    z = np.zeros((n, len(_PROBABILITY_FEATURES)))
    for k, name in enumerate(_PROBABILITY_FEATURES):
        col = values[:, FEATURE_NAMES.index(name)]
        med = float(np.median(col))
        mad = float(np.median(np.abs(col - med)))
        guard = max(mad, 1e-12 * max(1.0, abs(med)))
        z[:, k] = (col - med) / guard
    return scipy.special.expit(z.mean(axis=1) - offset)


@dataclass(frozen=True)
class RetentionSummary:
    """How much of the recording survived, by simple counting."""

    n_channels: int
    n_channels_rejected: int
    channels_retained_fraction: float
    n_components: int | None = None
    n_components_rejected: int = 0
    components_rejected_fraction: float | None = None
    rejected_channel_indices: tuple[int, ...] = ()
    rejected_component_indices: tuple[int, ...] = field(default=())


def retention_ratios(
    reports: Iterable[StageReport],
    n_channels: int,
    n_components: int | None = None,
) -> RetentionSummary:
    """Cumulative retention counts over a sequence of stage reports."""
    if n_channels < 1:
        raise ShapeMismatch("n_channels must be >= 1")
    chan: set[int] = set()
    comp: set[int] = set()
    for report in reports:
        chan.update(int(i) for i in report.rejected_channel_indices)
        comp.update(int(i) for i in report.rejected_component_indices)
    comp_fraction = None
    if n_components is not None and n_components > 0:
        comp_fraction = len(comp) / n_components
    return RetentionSummary(
        n_channels=n_channels,
        n_channels_rejected=len(chan),
        channels_retained_fraction=1.0 - len(chan) / n_channels,
        n_components=n_components,
        n_components_rejected=len(comp),
        components_rejected_fraction=comp_fraction,
        rejected_channel_indices=tuple(sorted(chan)),
        rejected_component_indices=tuple(sorted(comp)),
    )
