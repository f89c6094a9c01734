"""Unsupervised conditioning of multichannel electrophysiology recordings.

The package cleans EEG/LFP-style recordings in five stages (bandpass,
line-noise removal, bad-channel rejection, ICA component screening,
optional epoching) and quantifies the result two ways: traditional signal
quality metrics, and the accuracy of seeded classifiers trained on trial
features before and after cleaning.
"""

from .channels import ChannelStats, channel_sd, flag_channels, reject_bad_channels
from .dsp import (
    IirFilter,
    PsdEstimate,
    band_power,
    design_butterworth,
    filtfilt,
    pearson,
    skewness,
    welch_psd,
)
from .errors import NeurocleanError
from .ica import ComponentDecomposition, fast_ica, whiten
from .io_store import (
    read_csv,
    read_recording,
    read_stage_log,
    write_recording,
    write_stage_log,
)
from .mara import (
    FEATURE_NAMES,
    MaraFeatureMatrix,
    dbscan,
    mara_features,
    reject_components,
)
from .mleval import (
    BAND_EDGES,
    EvalConfig,
    EvalReport,
    FeatureDataset,
    MlrModel,
    SearchConfig,
    SearchResult,
    balance_classes,
    band_segment,
    evaluate_pipeline_steps,
    incremental_feature_search,
    knn1_predict,
    mean_spectral_amplitude,
    rank_features,
    roc_auc_ovr_micro,
    train_mlr,
)
from .model import (
    EpochedData,
    Event,
    PipelineConfig,
    Recording,
    StageReport,
    effective_high_cutoff,
    validate,
)
from .pipeline import PipelineResult, epoch_recording, run_pipeline
from .qa import (
    QaMetrics,
    artifact_probability,
    one_over_f_similarity,
    retention_ratios,
    snr_db,
)
from .synth import (
    BadChannelSpec,
    ClassSpec,
    DriftSpec,
    GroundTruth,
    LineSpec,
    ScoreCard,
    SpikeSpec,
    SynthSpec,
    generate,
    score_against_truth,
)
from .zapline import ZaplineConfig, apply_zapline, dss_line_components, harmonic_freqs, split_branches

__version__ = "0.1.0"

__all__ = [
    "BAND_EDGES",
    "BadChannelSpec",
    "ChannelStats",
    "ClassSpec",
    "ComponentDecomposition",
    "DriftSpec",
    "EpochedData",
    "EvalConfig",
    "EvalReport",
    "Event",
    "FEATURE_NAMES",
    "FeatureDataset",
    "GroundTruth",
    "IirFilter",
    "LineSpec",
    "MaraFeatureMatrix",
    "MlrModel",
    "NeurocleanError",
    "PipelineConfig",
    "PipelineResult",
    "PsdEstimate",
    "QaMetrics",
    "Recording",
    "ScoreCard",
    "SearchConfig",
    "SearchResult",
    "SpikeSpec",
    "StageReport",
    "SynthSpec",
    "ZaplineConfig",
    "apply_zapline",
    "artifact_probability",
    "balance_classes",
    "band_power",
    "band_segment",
    "channel_sd",
    "dbscan",
    "design_butterworth",
    "dss_line_components",
    "effective_high_cutoff",
    "epoch_recording",
    "evaluate_pipeline_steps",
    "fast_ica",
    "filtfilt",
    "flag_channels",
    "generate",
    "harmonic_freqs",
    "incremental_feature_search",
    "knn1_predict",
    "mara_features",
    "mean_spectral_amplitude",
    "one_over_f_similarity",
    "pearson",
    "rank_features",
    "read_csv",
    "read_recording",
    "read_stage_log",
    "reject_bad_channels",
    "reject_components",
    "retention_ratios",
    "roc_auc_ovr_micro",
    "run_pipeline",
    "score_against_truth",
    "skewness",
    "snr_db",
    "split_branches",
    "train_mlr",
    "validate",
    "welch_psd",
    "whiten",
    "write_recording",
    "write_stage_log",
]
