"""The five-stage cleaning pipeline.

Stages run in a fixed order: bandpass, line removal, bad-channel
rejection, component screening, optional epoching. Each stage consumes
the previous stage's recording, never mutates it, and emits a
:class:`~neuroclean.model.StageReport` with quality metrics before and
after. Any stage can be disabled through the configuration; a disabled or
inapplicable stage still emits a (skipped) report so logs keep a uniform
shape.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import dsp, qa
from .channels import reject_bad_channels
from .errors import NeurocleanError, NoTrialsSurvive, PipelineFailure
from .ica import fast_ica
from .mara import MaraFeatureMatrix, reject_components, standardize_columns
from .model import (
    EpochedData,
    PipelineConfig,
    Recording,
    StageReport,
    effective_high_cutoff,
    require_valid,
)
from .zapline import ZaplineConfig, apply_zapline

STAGE_ORDER = ("bandpass", "zapline", "channel_reject", "ica_mara", "epoch")


@dataclass(frozen=True)
class PipelineResult:
    """Everything a pipeline run produced."""

    cleaned: Recording
    reports: tuple[StageReport, ...]
    epoched: EpochedData | None = None
    staged: tuple[tuple[str, Recording], ...] | None = None


def epoch_recording(recording: Recording, epoch_len_p: int) -> EpochedData:
    """Cut one window of ``epoch_len_p`` samples around every event.

    The window starts ``floor(p / 2)`` samples before the event, so the
    event sits at (or just right of) the centre. Events whose window
    would cross either edge of the recording are discarded; if none
    survive, NoTrialsSurvive is raised.
    """
    if epoch_len_p < 1:
        raise NoTrialsSurvive(f"epoch_len_p must be >= 1, got {epoch_len_p}")
    half = epoch_len_p // 2
    trials = []
    labels = []
    kept_samples = []
    for event in recording.events:
        start = event.sample_index - half
        stop = start + epoch_len_p
        if start < 0 or stop > recording.n_samples:
            continue
        trials.append(recording.data[:, start:stop])
        labels.append(event.label)
        kept_samples.append(event.sample_index)
    if not trials:
        raise NoTrialsSurvive(
            f"none of {len(recording.events)} events fit a {epoch_len_p}-sample window"
        )
    return EpochedData(
        trials=np.stack(trials),
        labels=tuple(labels),
        epoch_len_p=int(epoch_len_p),
        sampling_rate_hz=recording.sampling_rate_hz,
        channel_mask=recording.channel_mask.copy(),
        event_sample_indices=tuple(kept_samples),
    )


def _qa_snapshot(recording: Recording) -> qa.QaMetrics:
    """Static quality metrics of one recording (no before/after pairing)."""
    try:
        similarity = qa.one_over_f_similarity(recording)
    except NeurocleanError:
        similarity = None
    return qa.QaMetrics(
        one_over_f_similarity=similarity,
        channels_retained_fraction=float(recording.channel_mask.mean()),
    )


def _qa_pair(
    stage_input: Recording,
    stage_output: Recording,
    raw: Recording,
    artifact_probabilities: tuple[float, ...] | None = None,
    components_rejected_fraction: float | None = None,
) -> qa.QaMetrics:
    snapshot = _qa_snapshot(stage_output)
    return qa.QaMetrics(
        snr_db=qa.snr_db(stage_input, stage_output),
        snr_vs_raw_db=qa.snr_db(raw, stage_output),
        one_over_f_similarity=snapshot.one_over_f_similarity,
        artifact_probabilities=artifact_probabilities,
        channels_retained_fraction=snapshot.channels_retained_fraction,
        components_rejected_fraction=components_rejected_fraction,
    )


def _skipped_report(stage: str, reason: str, current: Recording) -> StageReport:
    return StageReport(
        stage_name=stage,
        params={"skipped": True, "reason": reason},
        qa_before=_qa_snapshot(current),
        qa_after=_qa_snapshot(current),
        wall_time_ms=0.0,
    )


def _bandpass_stage(current: Recording, raw: Recording, config: PipelineConfig) -> tuple[Recording, StageReport]:
    t0 = time.perf_counter()
    qa_before = _qa_snapshot(current)
    high = effective_high_cutoff(config, current.sampling_rate_hz)
    filt = dsp.design_butterworth(
        config.butterworth_order, config.bandpass_low_hz, high, current.sampling_rate_hz
    )
    out = np.zeros_like(current.data)
    active = current.active_indices
    if active.size:
        out[active] = dsp.filtfilt(filt, current.data[active])
    result = current.with_data(out)
    report = StageReport(
        stage_name="bandpass",
        params={
            "low_hz": float(config.bandpass_low_hz),
            "high_hz": None if high is None else float(high),
            "order_per_edge": int(config.butterworth_order),
            "total_order": int(filt.order),
            "highpass_only": high is None,
        },
        qa_before=qa_before,
        qa_after=_qa_pair(current, result, raw),
        wall_time_ms=(time.perf_counter() - t0) * 1e3,
    )
    return result, report


def _zapline_stage(current: Recording, raw: Recording, config: PipelineConfig) -> tuple[Recording, StageReport]:
    line_freq = config.line_freq_hz if config.line_freq_hz is not None else current.line_freq_hz
    if line_freq is None:
        return current, _skipped_report(
            "zapline", "no line frequency in config or recording metadata", current
        )
    zap_config = ZaplineConfig(
        line_freq_hz=float(line_freq),
        n_harmonics=config.zapline_n_harmonics,
        n_remove=config.zapline_n_remove,
        notch_bandwidth_hz=config.zapline_notch_bandwidth_hz,
    )
    qa_before = _qa_snapshot(current)
    result, report = apply_zapline(current, zap_config)
    report = StageReport(
        stage_name=report.stage_name,
        params=report.params,
        rejected_channel_indices=report.rejected_channel_indices,
        rejected_component_indices=report.rejected_component_indices,
        qa_before=qa_before,
        qa_after=_qa_pair(current, result, raw),
        wall_time_ms=report.wall_time_ms,
    )
    return result, report


def _channel_stage(current: Recording, raw: Recording, config: PipelineConfig) -> tuple[Recording, StageReport]:
    qa_before = _qa_snapshot(current)
    result, report = reject_bad_channels(current, config)
    report = StageReport(
        stage_name=report.stage_name,
        params=report.params,
        rejected_channel_indices=report.rejected_channel_indices,
        rejected_component_indices=report.rejected_component_indices,
        qa_before=qa_before,
        qa_after=_qa_pair(current, result, raw),
        wall_time_ms=report.wall_time_ms,
    )
    return result, report


def _ica_mara_stage(current: Recording, raw: Recording, config: PipelineConfig) -> tuple[Recording, StageReport]:
    active = current.active_indices
    if active.size < 2:
        return current, _skipped_report("ica_mara", "fewer than 2 active channels", current)
    if current.n_samples <= active.size:
        return current, _skipped_report("ica_mara", "not enough samples for a decomposition", current)
    qa_before = _qa_snapshot(current)
    t0 = time.perf_counter()
    decomposition = fast_ica(
        current.data[active],
        seed=config.random_seed,
        tol=config.ica_tol,
        max_iter=config.ica_max_iter,
        channel_index_map=active,
    )
    result, report = reject_components(current, decomposition, config)
    values = np.asarray(report.params["features"], dtype=np.float64)
    features = MaraFeatureMatrix(values=values, standardized=standardize_columns(values))
    try:
        probabilities = tuple(float(v) for v in qa.artifact_probability(features))
    except NeurocleanError:
        probabilities = None
    fraction = len(report.rejected_component_indices) / decomposition.n_components
    params = dict(report.params)
    params.update(
        {
            "ica_converged": bool(decomposition.converged),
            "ica_iterations": int(decomposition.n_iterations),
            "ica_seed": int(config.random_seed),
        }
    )
    report = StageReport(
        stage_name="ica_mara",
        params=params,
        rejected_channel_indices=report.rejected_channel_indices,
        rejected_component_indices=report.rejected_component_indices,
        qa_before=qa_before,
        qa_after=_qa_pair(
            current,
            result,
            raw,
            artifact_probabilities=probabilities,
            components_rejected_fraction=fraction,
        ),
        wall_time_ms=(time.perf_counter() - t0) * 1e3,
    )
    return result, report


def run_pipeline(
    recording: Recording,
    config: PipelineConfig | None = None,
    epoch: bool = False,
    keep_stage_outputs: bool = False,
) -> PipelineResult:
    """Run the cleaning stages in order and collect their reports.

    ``epoch=True`` additionally cuts trials around the recording's events
    after cleaning. ``keep_stage_outputs=True`` retains every intermediate
    recording (including the raw input under the name "raw") for
    stage-by-stage evaluation.
    """
    cfg = config or PipelineConfig()
    cfg.validate()
    require_valid(recording)
    raw = recording
    current = recording
    reports: list[StageReport] = []
    staged: list[tuple[str, Recording]] = [("raw", recording)]

    stage_fns = (
        ("bandpass", cfg.enable_bandpass, _bandpass_stage),
        ("zapline", cfg.enable_zapline, _zapline_stage),
        ("channel_reject", cfg.enable_channel_reject, _channel_stage),
        ("ica_mara", cfg.enable_component_reject, _ica_mara_stage),
    )
    for name, enabled, fn in stage_fns:
        if not enabled:
            reports.append(_skipped_report(name, "disabled in config", current))
        else:
            try:
                current, report = fn(current, raw, cfg)
            except NeurocleanError as exc:
                raise PipelineFailure(stage=name, reports=tuple(reports), cause=exc) from exc
            reports.append(report)
        staged.append((name, current))

    epoched = None
    if epoch:
        t0 = time.perf_counter()
        if not recording.events:
            reports.append(_skipped_report("epoch", "recording has no events", current))
        else:
            epoched = epoch_recording(current, cfg.epoch_len_p)
            reports.append(
                StageReport(
                    stage_name="epoch",
                    params={
                        "epoch_len_p": int(cfg.epoch_len_p),
                        "n_events": len(recording.events),
                        "n_trials": epoched.n_trials,
                        "n_discarded": len(recording.events) - epoched.n_trials,
                    },
                    qa_before=_qa_snapshot(current),
                    qa_after=_qa_snapshot(current),
                    wall_time_ms=(time.perf_counter() - t0) * 1e3,
                )
            )

    return PipelineResult(
        cleaned=current,
        reports=tuple(reports),
        epoched=epoched,
        staged=tuple(staged) if keep_stage_outputs else None,
    )
