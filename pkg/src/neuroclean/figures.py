"""Matplotlib renderings of pipeline, QA and evaluation results.

Every function takes plain data plus an output path, writes one PNG and
returns the path, so the command line can drop figures next to its CSV
and JSON reports without holding figure state.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import dsp
from .model import Recording

_RC = {
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 9,
}


def _finish(fig: plt.Figure, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def save_psd_overlay(
    recordings: Mapping[str, Recording],
    path: str | Path,
    f_max_hz: float | None = None,
) -> Path:
    """Mean active-channel PSD of each named recording on one log plot."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(7, 4))
        for name, rec in recordings.items():
            active = rec.active_indices
            if active.size == 0:
                continue
            spectra = []
            for idx in active:
                psd = dsp.welch_psd(rec.data[idx], rec.sampling_rate_hz)
                spectra.append(psd.power)
            mean_power = np.mean(spectra, axis=0)
            freqs = psd.freqs_hz
            sel = freqs > 0
            if f_max_hz is not None:
                sel &= freqs <= f_max_hz
            ax.semilogy(freqs[sel], mean_power[sel], label=name, linewidth=1.0)
        ax.set_xlabel("frequency (Hz)")
        ax.set_ylabel("PSD (uV$^2$/Hz)")
        ax.set_title("mean power spectral density")
        ax.legend(frameon=False)
        return _finish(fig, path)


def save_channel_deviations(
    sd_uv: np.ndarray,
    rejected: Sequence[int],
    low_uv: float,
    high_uv: float,
    path: str | Path,
) -> Path:
    """Per-channel deviation bars with the rejection thresholds."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(8, 3.5))
        n = len(sd_uv)
        colors = ["firebrick" if i in set(rejected) else "steelblue" for i in range(n)]
        ax.bar(np.arange(n), sd_uv, color=colors)
        ax.axhline(low_uv, color="gray", linestyle="--", linewidth=0.8, label="flat threshold")
        ax.axhline(high_uv, color="black", linestyle="--", linewidth=0.8, label="hot threshold")
        ax.set_yscale("log")
        ax.set_xlabel("channel")
        ax.set_ylabel("sample SD (uV)")
        ax.set_title("channel deviations (rejected in red)")
        ax.legend(frameon=False)
        return _finish(fig, path)


def save_component_features(
    features: np.ndarray,
    labels: Sequence[int],
    feature_names: Sequence[str],
    path: str | Path,
) -> Path:
    """Scatter matrix of standardized component features, outliers marked."""
    values = np.asarray(features, dtype=np.float64)
    lab = np.asarray(labels)
    n_feat = values.shape[1]
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(n_feat - 1, n_feat - 1, figsize=(2.2 * (n_feat - 1),) * 2, squeeze=False)
        for row in range(n_feat - 1):
            for col in range(n_feat - 1):
                ax = axes[row][col]
                if col > row:
                    ax.axis("off")
                    continue
                xi, yi = col, row + 1
                outlier = lab < 0
                ax.scatter(values[~outlier, xi], values[~outlier, yi], s=14, c=lab[~outlier], cmap="viridis")
                ax.scatter(values[outlier, xi], values[outlier, yi], s=24, c="firebrick", marker="x")
                if row == n_feat - 2:
                    ax.set_xlabel(feature_names[xi])
                if col == 0:
                    ax.set_ylabel(feature_names[yi])
        fig.suptitle("component features (outliers x)")
        return _finish(fig, path)


def save_accuracy_by_stage(
    stage_names: Sequence[str],
    accuracies: Sequence[np.ndarray],
    shuffled: Sequence[np.ndarray],
    chance_level: float,
    path: str | Path,
    title: str = "decoding accuracy by pipeline stage",
) -> Path:
    """Box plots of repeated-split accuracies per stage, with the
    shuffled-label baseline alongside."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(1.4 * len(stage_names) + 2, 4))
        positions = np.arange(len(stage_names), dtype=float)
        real = ax.boxplot(
            [np.asarray(a) for a in accuracies],
            positions=positions - 0.17,
            widths=0.28,
            patch_artist=True,
        )
        base = ax.boxplot(
            [np.asarray(a) for a in shuffled],
            positions=positions + 0.17,
            widths=0.28,
            patch_artist=True,
        )
        for box in real["boxes"]:
            box.set_facecolor("steelblue")
        for box in base["boxes"]:
            box.set_facecolor("lightgray")
        ax.axhline(chance_level, color="gray", linestyle=":", linewidth=0.8, label="chance")
        ax.set_xticks(positions)
        ax.set_xticklabels(stage_names, rotation=20)
        ax.set_ylabel("accuracy")
        ax.set_ylim(0.0, 1.02)
        ax.set_title(title)
        ax.legend(
            [real["boxes"][0], base["boxes"][0]],
            ["true labels", "shuffled labels"],
            frameon=False,
            loc="lower right",
        )
        return _finish(fig, path)


def save_roc_curves(
    curves: Mapping[str, tuple[np.ndarray, np.ndarray, float]],
    path: str | Path,
) -> Path:
    """Pooled one-vs-rest ROC curves, one per named result."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.5, 4.5))
        for name, (fpr, tpr, auc) in curves.items():
            ax.plot(fpr, tpr, linewidth=1.2, label=f"{name} (AUC {auc:.3f})")
        ax.plot([0, 1], [0, 1], color="gray", linestyle=":", linewidth=0.8)
        ax.set_xlabel("false positive rate")
        ax.set_ylabel("true positive rate")
        ax.set_title("micro-averaged ROC")
        ax.legend(frameon=False, loc="lower right")
        return _finish(fig, path)


def save_search_curves(
    d_values: Sequence[int],
    mean_acc: np.ndarray,
    mean_acc_shuffled: np.ndarray,
    chance_level: float,
    path: str | Path,
    title: str = "incremental feature search",
) -> Path:
    """Mean cross-validated accuracy as the ranked feature set grows."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(d_values, mean_acc, marker="o", markersize=3, linewidth=1.0, label="true labels")
        ax.plot(
            d_values,
            mean_acc_shuffled,
            marker="o",
            markersize=3,
            linewidth=1.0,
            color="gray",
            label="shuffled labels",
        )
        ax.axhline(chance_level, color="gray", linestyle=":", linewidth=0.8)
        ax.set_xlabel("number of ranked features")
        ax.set_ylabel("mean validation accuracy")
        ax.set_title(title)
        ax.legend(frameon=False)
        return _finish(fig, path)


def save_timeseries_snippet(
    recordings: Mapping[str, Recording],
    path: str | Path,
    channel: int = 0,
    t_start_s: float = 0.0,
    duration_s: float = 2.0,
) -> Path:
    """A short stretch of one channel across processing stages."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(8, 3))
        for name, rec in recordings.items():
            fs = rec.sampling_rate_hz
            a = int(t_start_s * fs)
            b = min(rec.n_samples, a + int(duration_s * fs))
            t = np.arange(a, b) / fs
            ax.plot(t, rec.data[channel, a:b], linewidth=0.7, label=name)
        ax.set_xlabel("time (s)")
        ax.set_ylabel("amplitude (uV)")
        ax.set_title(f"channel {channel}")
        ax.legend(frameon=False)
        return _finish(fig, path)
