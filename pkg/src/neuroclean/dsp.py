"""Spectral and statistical primitives shared by every stage.

Thin, contract-checked wrappers over scipy.signal / scipy.stats. Welch
estimation uses Hann windows, 50% overlap, constant detrending and density
scaling; zero-phase filtering runs the filter forward and backward over an
even-reflected extension of the signal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.signal
import scipy.stats

from .errors import ConstantInput, EmptyBand, InvalidCutoff, ShapeMismatch, SignalTooShort


@dataclass(frozen=True)
class PsdEstimate:
    """One-sided power spectral density with its frequency grid."""

    freqs_hz: np.ndarray
    power: np.ndarray
    resolution_hz: float


@dataclass(frozen=True)
class IirFilter:
    """A designed IIR filter in second-order sections."""

    sos: np.ndarray
    order: int
    low_hz: float
    high_hz: float | None
    sampling_rate_hz: float

    @property
    def kind(self) -> str:
        return "highpass" if self.high_hz is None else "bandpass"


def welch_psd(
    signal: np.ndarray,
    sampling_rate_hz: float,
    segment_len: int | None = None,
    overlap_fraction: float = 0.5,
) -> PsdEstimate:
    """Welch PSD of a 1-D signal.

    Defaults to two-second segments (capped at the signal length) with a
    Hann window and 50% overlap; power is in units^2/Hz.
    """
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeMismatch(f"expected a 1-D signal, got shape {x.shape}")
    if sampling_rate_hz <= 0:
        raise InvalidCutoff(f"sampling rate must be positive, got {sampling_rate_hz}")
    if segment_len is None:
        segment_len = min(int(round(2.0 * sampling_rate_hz)), x.size)
    if segment_len < 2:
        raise SignalTooShort(f"segment_len must be >= 2, got {segment_len}")
    if segment_len > x.size:
        raise SignalTooShort(f"segment_len {segment_len} exceeds signal length {x.size}")
    if not (0.0 <= overlap_fraction < 1.0):
        raise InvalidCutoff(f"overlap_fraction must be in [0, 1), got {overlap_fraction}")
    freqs, power = scipy.signal.welch(
        x,
        fs=sampling_rate_hz,
        window="hann",
        nperseg=segment_len,
        noverlap=int(round(overlap_fraction * segment_len)),
        detrend="constant",
        scaling="density",
    )
    return PsdEstimate(freqs_hz=freqs, power=power, resolution_hz=float(freqs[1] - freqs[0]))


def band_power(psd: PsdEstimate, f_lo_hz: float, f_hi_hz: float) -> float:
    """Mean PSD over the bins with f_lo <= f < f_hi."""
    if not (0.0 <= f_lo_hz < f_hi_hz):
        raise InvalidCutoff(f"need 0 <= f_lo < f_hi, got [{f_lo_hz}, {f_hi_hz})")
    sel = (psd.freqs_hz >= f_lo_hz) & (psd.freqs_hz < f_hi_hz)
    if not np.any(sel):
        raise EmptyBand(
            f"no spectral bins in [{f_lo_hz}, {f_hi_hz}) Hz at resolution {psd.resolution_hz:.4g} Hz"
        )
    return float(np.mean(psd.power[sel]))


def design_butterworth(
    order: int,
    f_lo_hz: float,
    f_hi_hz: float | None,
    sampling_rate_hz: float,
) -> IirFilter:
    """Design a Butterworth bandpass (or, with f_hi None, highpass) filter.

    Cutoffs must sit strictly inside (0, Nyquist). The bandpass design has
    ``order`` poles per edge, so the returned total order is doubled.
    """
    nyquist = sampling_rate_hz / 2.0
    if order < 1:
        raise InvalidCutoff(f"order must be >= 1, got {order}")
    if not (0.0 < f_lo_hz < nyquist):
        raise InvalidCutoff(f"low cutoff {f_lo_hz} Hz outside (0, {nyquist}) Hz")
    if f_hi_hz is None:
        sos = scipy.signal.butter(order, f_lo_hz, btype="highpass", fs=sampling_rate_hz, output="sos")
        total_order = order
    else:
        if not (f_lo_hz < f_hi_hz < nyquist):
            raise InvalidCutoff(f"high cutoff {f_hi_hz} Hz outside ({f_lo_hz}, {nyquist}) Hz")
        sos = scipy.signal.butter(
            order, [f_lo_hz, f_hi_hz], btype="bandpass", fs=sampling_rate_hz, output="sos"
        )
        total_order = 2 * order
    return IirFilter(
        sos=sos,
        order=total_order,
        low_hz=float(f_lo_hz),
        high_hz=None if f_hi_hz is None else float(f_hi_hz),
        sampling_rate_hz=float(sampling_rate_hz),
    )


def filtfilt(filt: IirFilter, signal: np.ndarray) -> np.ndarray:
    """Zero-phase application of a designed filter along the last axis.

    Accepts a 1-D signal or a (channels x samples) matrix. Requires more
    than 3x the filter order in samples for the edge padding.
    """
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim not in (1, 2):
        raise ShapeMismatch(f"expected 1-D or 2-D input, got shape {x.shape}")
    padlen = 3 * filt.order
    if x.shape[-1] <= padlen:
        raise SignalTooShort(
            f"need more than {padlen} samples for order-{filt.order} zero-phase filtering, "
            f"got {x.shape[-1]}"
        )
    return scipy.signal.sosfiltfilt(filt.sos, x, axis=-1, padtype="even", padlen=padlen)


def pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Pearson correlation of two equal-length 1-D arrays."""
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(y, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1 or a.shape != b.shape:
        raise ShapeMismatch(f"need equal-length 1-D arrays, got {a.shape} and {b.shape}")
    if a.size < 2:
        raise SignalTooShort(f"need at least 2 points, got {a.size}")
    da = a - a.mean()
    db = b - b.mean()
    denom = np.sqrt(np.dot(da, da) * np.dot(db, db))
    if denom == 0.0:
        raise ConstantInput("correlation undefined for a constant input")
    return float(np.dot(da, db) / denom)


def skewness(x: np.ndarray) -> float:
    """Biased sample skewness (third standardized moment)."""
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 1:
        raise ShapeMismatch(f"expected a 1-D array, got shape {a.shape}")
    if a.size < 3:
        raise SignalTooShort(f"need at least 3 samples, got {a.size}")
    if np.all(a == a[0]):
        raise ConstantInput("skewness undefined for a constant input")
    return float(scipy.stats.skew(a, bias=True))
