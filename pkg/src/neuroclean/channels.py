"""Iterative rejection of flat, saturated and overly noisy channels.

Each pass computes the per-channel sample standard deviation (N-1
denominator) over the channels still active, flags channels that are
nearly flat, implausibly hot, or whose median-normalized deviation sits
above the upper Tukey fence, zeroes them, and repeats until a pass flags
nothing or the iteration cap is reached. Channels are never removed from
the matrix, so indices stay stable.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import AllChannelsRejected, InsufficientSamples
from .model import PipelineConfig, Recording, StageReport


@dataclass(frozen=True)
class ChannelStats:
    """Per-channel deviation statistics for one rejection pass.

    ``sd_uv`` and ``normalized_sd`` are full-length vectors; entries for
    inactive channels are NaN so they cannot silently enter a decision.
    """

    sd_uv: np.ndarray
    normalized_sd: np.ndarray
    median_sd_uv: float
    active: np.ndarray


def channel_sd(recording: Recording) -> ChannelStats:
    """Sample standard deviation per channel, normalized by the active median."""
    if recording.n_samples < 2:
        raise InsufficientSamples(f"need at least 2 samples, got {recording.n_samples}")
    n_channels = recording.n_channels
    active = recording.channel_mask.copy()
    sd = np.full(n_channels, np.nan)
    if active.any():
        sd[active] = np.std(recording.data[active], axis=1, ddof=1)
    med = float(np.median(sd[active])) if active.any() else float("nan")
    normalized = np.full(n_channels, np.nan)
    if active.any():
        denom = med if med > 0 else np.finfo(float).tiny
        normalized[active] = sd[active] / denom
    return ChannelStats(sd_uv=sd, normalized_sd=normalized, median_sd_uv=med, active=active)


def flag_channels(stats: ChannelStats, config: PipelineConfig) -> np.ndarray:
    """Indices of active channels violating any rejection criterion.

    Criteria: deviation below ``bcr_sd_low_uv`` (flat), above
    ``bcr_sd_high_uv`` (hot), or normalized deviation above the upper
    Tukey fence Q75 + 1.5*IQR of the active normalized deviations. With
    ``bcr_literal_quartile`` the fence tightens to the bare third
    quartile, which by construction flags channels on every pass.
    """
    active_idx = np.flatnonzero(stats.active)
    if active_idx.size == 0:
        return active_idx
    sd = stats.sd_uv[active_idx]
    norm = stats.normalized_sd[active_idx]
    q25, q75 = np.percentile(norm, [25.0, 75.0])
    if config.bcr_literal_quartile:
        fence = q75
    else:
        fence = q75 + 1.5 * (q75 - q25)
    bad = (sd < config.bcr_sd_low_uv) | (sd > config.bcr_sd_high_uv) | (norm > fence)
    return active_idx[bad]


def reject_bad_channels(recording: Recording, config: PipelineConfig) -> tuple[Recording, StageReport]:
    """Run rejection passes until stable or ``bcr_max_iters`` is reached.

    Raises AllChannelsRejected rather than letting fewer than two channels
    survive. Running the function twice in a row rejects nothing new on
    the second run when the first stopped by itself.
    """
    t0 = time.perf_counter()
    config.validate()
    data = recording.data.copy()
    mask = recording.channel_mask.copy()
    rejected: list[int] = []
    iterations = 0
    per_pass: list[list[int]] = []
    for _ in range(config.bcr_max_iters):
        if int(mask.sum()) < 2:
            raise AllChannelsRejected(f"only {int(mask.sum())} channels active before a pass")
        iterations += 1
        current = recording.with_data(data, channel_mask=mask)
        stats = channel_sd(current)
        newly = flag_channels(stats, config)
        per_pass.append([int(i) for i in newly])
        if newly.size == 0:
            break
        if int(mask.sum()) - newly.size < 2:
            raise AllChannelsRejected(
                f"pass {iterations} would leave {int(mask.sum()) - newly.size} channels"
            )
        data[newly] = 0.0
        mask[newly] = False
        rejected.extend(int(i) for i in newly)
    cleaned = recording.with_data(data, channel_mask=mask)
    report = StageReport(
        stage_name="channel_reject",
        params={
            "sd_low_uv": float(config.bcr_sd_low_uv),
            "sd_high_uv": float(config.bcr_sd_high_uv),
            "max_iters": int(config.bcr_max_iters),
            "literal_quartile": bool(config.bcr_literal_quartile),
            "iterations_run": iterations,
            "rejected_per_pass": per_pass,
        },
        rejected_channel_indices=tuple(sorted(rejected)),
        wall_time_ms=(time.perf_counter() - t0) * 1e3,
    )
    return cleaned, report
