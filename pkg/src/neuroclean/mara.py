"""Unsupervised screening of ICA components via clustering of shape features.

Each component is summarized by five features (spatial spread of its
mixing column, alpha-band log power, 1/f fit slope and fit error, mean
local skewness). Components are clustered with DBSCAN in standardized
feature space; points the clustering marks as density outliers are taken
to be artifacts, zeroed in source space, and the recording is remixed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import dsp
from .errors import ConstantInput, EmptyBand, InsufficientChannels
from .ica import ComponentDecomposition
from .model import PipelineConfig, Recording, StageReport

FEATURE_NAMES = (
    "spatial_range",
    "alpha_log_power",
    "one_over_f_slope",
    "one_over_f_fit_error",
    "mean_local_skewness",
)

RANGE_FLOOR = 1e-12
POWER_FLOOR = 1e-30


@dataclass(frozen=True)
class MaraFeatureMatrix:
    """Per-component feature values, raw and column-standardized."""

    values: np.ndarray
    standardized: np.ndarray
    feature_names: tuple[str, ...] = FEATURE_NAMES


def feature_spatial_range(mixing_column: np.ndarray) -> float:
    """Log of the peak-to-peak spread of a component's channel loadings."""
    col = np.asarray(mixing_column, dtype=np.float64)
    return float(np.log(max(float(col.max() - col.min()), RANGE_FLOOR)))


def feature_alpha_log_power(source: np.ndarray, sampling_rate_hz: float) -> float:
    """Log mean PSD in the 8-13 Hz band."""
    psd = dsp.welch_psd(source, sampling_rate_hz)
    return float(np.log(max(dsp.band_power(psd, 8.0, 13.0), POWER_FLOOR)))


def feature_one_over_f_fit(
    source: np.ndarray,
    sampling_rate_hz: float,
    f_lo_hz: float = 2.0,
    f_hi_hz: float = 35.0,
) -> tuple[float, float]:
    """Slope and RMS error of the log-log spectral fit ln P = a - slope * ln f.

    The fit band is [f_lo, min(f_hi, 0.9 * Nyquist)] so low rates still get
    a usable band.
    """
    psd = dsp.welch_psd(source, sampling_rate_hz)
    hi = min(f_hi_hz, 0.45 * sampling_rate_hz)
    sel = (psd.freqs_hz >= f_lo_hz) & (psd.freqs_hz <= hi)
    if int(sel.sum()) < 2:
        raise EmptyBand(f"fewer than 2 PSD bins in [{f_lo_hz}, {hi}] Hz")
    log_f = np.log(psd.freqs_hz[sel])
    log_p = np.log(np.maximum(psd.power[sel], POWER_FLOOR))
    design = np.column_stack([np.ones(log_f.size), log_f])
    coef, *_ = np.linalg.lstsq(design, log_p, rcond=None)
    residuals = log_p - design @ coef
    slope = float(-coef[1])
    fit_error = float(np.sqrt(np.mean(residuals**2)))
    return slope, fit_error


def feature_mean_local_skewness(
    source: np.ndarray,
    sampling_rate_hz: float,
    window_s: float = 15.0,
) -> float:
    """Mean absolute skewness over consecutive non-overlapping windows.

    The trailing partial window is included when it has at least 3
    samples; a signal shorter than one window is treated as one window.
    Constant windows contribute zero (no asymmetry).
    """
    x = np.asarray(source, dtype=np.float64)
    w = int(round(window_s * sampling_rate_hz))
    if w < 3 or x.size <= w:
        windows = [x]
    else:
        windows = [x[i : i + w] for i in range(0, x.size, w)]
        if windows[-1].size < 3:
            windows.pop()
    values = []
    for win in windows:
        try:
            values.append(abs(dsp.skewness(win)))
        except ConstantInput:
            values.append(0.0)
    return float(np.mean(values))


def mara_features(
    decomposition: ComponentDecomposition,
    sampling_rate_hz: float,
    skew_window_s: float = 15.0,
    fit_lo_hz: float = 2.0,
    fit_hi_hz: float = 35.0,
) -> MaraFeatureMatrix:
    """Compute the five screening features for every component."""
    n_comp = decomposition.n_components
    values = np.empty((n_comp, len(FEATURE_NAMES)), dtype=np.float64)
    for i in range(n_comp):
        source = decomposition.sources[i]
        slope, fit_error = feature_one_over_f_fit(source, sampling_rate_hz, fit_lo_hz, fit_hi_hz)
        values[i, 0] = feature_spatial_range(decomposition.mixing[:, i])
        values[i, 1] = feature_alpha_log_power(source, sampling_rate_hz)
        values[i, 2] = slope
        values[i, 3] = fit_error
        values[i, 4] = feature_mean_local_skewness(source, sampling_rate_hz, skew_window_s)
    return MaraFeatureMatrix(values=values, standardized=standardize_columns(values))


def standardize_columns(values: np.ndarray) -> np.ndarray:
    """Column z-scores; constant columns map to zero."""
    mean = values.mean(axis=0)
    std = values.std(axis=0)
    safe = np.where(std < 1e-12, 1.0, std)
    out = (values - mean) / safe
    out[:, std < 1e-12] = 0.0
    return out


def dbscan(points: np.ndarray, eps: float, min_samples: int) -> np.ndarray:
    """Deterministic DBSCAN labels for a small point set.

    Core points (at least ``min_samples`` neighbours within ``eps``,
    themselves included) form clusters as connected components of the
    within-eps graph restricted to cores. Clusters are numbered 0, 1, ...
    by their smallest core index. A non-core point joins the cluster of
    its lowest-indexed core neighbour; points with no core neighbour get
    label -1.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2:
        raise ValueError(f"points must be 2-D, got shape {pts.shape}")
    n = pts.shape[0]
    labels = np.full(n, -1, dtype=np.int64)
    if n == 0:
        return labels
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    within = dist <= eps
    core = within.sum(axis=1) >= min_samples
    cluster = 0
    for start in range(n):
        if not core[start] or labels[start] != -1:
            continue
        frontier = [start]
        labels[start] = cluster
        while frontier:
            i = frontier.pop()
            for j in np.flatnonzero(within[i] & core):
                if labels[j] == -1:
                    labels[j] = cluster
                    frontier.append(int(j))
        cluster += 1
    for i in range(n):
        if core[i] or labels[i] != -1:
            continue
        neighbours = np.flatnonzero(within[i] & core)
        if neighbours.size:
            labels[i] = labels[neighbours[0]]
    return labels


def reject_components(
    recording: Recording,
    decomposition: ComponentDecomposition,
    config: PipelineConfig,
) -> tuple[Recording, StageReport]:
    """Zero outlier components and remix the recording.

    If clustering marks every component as an outlier the input is
    returned unchanged (screening that rejects everything carries no
    information), with a note in the report.
    """
    t0 = time.perf_counter()
    config.validate()
    if decomposition.n_components < 1:
        raise InsufficientChannels("decomposition has no components")
    features = mara_features(
        decomposition,
        recording.sampling_rate_hz,
        skew_window_s=config.mara_skew_window_s,
        fit_lo_hz=config.mara_fit_lo_hz,
        fit_hi_hz=config.mara_fit_hi_hz,
    )
    points = features.standardized if config.mara_standardize else features.values
    labels = dbscan(points, config.dbscan_eps, config.dbscan_min_samples)
    outliers = np.flatnonzero(labels < 0)
    n_clusters = int(labels.max()) + 1 if labels.size and labels.max() >= 0 else 0
    params: dict = {
        "eps": float(config.dbscan_eps),
        "min_samples": int(config.dbscan_min_samples),
        "standardized": bool(config.mara_standardize),
        "n_components": decomposition.n_components,
        "n_clusters": n_clusters,
        "labels": [int(v) for v in labels],
        "feature_names": list(FEATURE_NAMES),
        "features": [[float(v) for v in row] for row in features.values],
    }
    if outliers.size == decomposition.n_components:
        params["note"] = "every component scored as an outlier; keeping input unchanged"
        report = StageReport(
            stage_name="cluster_mara",
            params=params,
            wall_time_ms=(time.perf_counter() - t0) * 1e3,
        )
        return recording, report
    sources = decomposition.sources.copy()
    sources[outliers] = 0.0
    remixed = decomposition.mixing @ sources + decomposition.mean_vector[:, None]
    out = np.zeros_like(recording.data)
    out[decomposition.channel_index_map] = remixed
    cleaned = recording.with_data(out)
    report = StageReport(
        stage_name="cluster_mara",
        params=params,
        rejected_component_indices=tuple(int(i) for i in outliers),
        wall_time_ms=(time.perf_counter() - t0) * 1e3,
    )
    return cleaned, report
