import numpy as np
import pytest

from neuroclean.errors import (
    AllChannelsRejected,
    NoTrialsSurvive,
    PipelineFailure,
    ValidationError,
)
from neuroclean.model import Event, PipelineConfig, Recording
from neuroclean.pipeline import STAGE_ORDER, epoch_recording, run_pipeline
from neuroclean.synth import BadChannelSpec, ClassSpec, LineSpec, SpikeSpec, SynthSpec, generate


def synth_recording(seed=0, **spec_overrides):
    defaults = dict(
        n_channels=8,
        sampling_rate_hz=500.0,
        duration_s=20.0,
        seed=seed,
        line=LineSpec(freq_hz=60.0, amplitude_uv=20.0),
        classes=ClassSpec(trials_per_class=8, epoch_len_p=250),
    )
    defaults.update(spec_overrides)
    recording, _ = generate(SynthSpec(**defaults))
    return recording


def report_dicts_without_timing(reports):
    out = []
    for report in reports:
        d = report.to_dict()
        d.pop("wall_time_ms", None)
        out.append(d)
    return out


class TestEpochRecording:
    def test_window_straddles_the_event(self):
        data = np.arange(10, dtype=np.float64)[None, :]
        rec = Recording(
            data=data,
            sampling_rate_hz=10.0,
            events=(Event(4, "a"), Event(8, "b")),
        )
        epoched = epoch_recording(rec, 4)
        assert epoched.trials.shape == (2, 1, 4)
        assert epoched.trials[0, 0].tolist() == [2.0, 3.0, 4.0, 5.0]
        assert epoched.trials[1, 0].tolist() == [6.0, 7.0, 8.0, 9.0]
        assert epoched.labels == ("a", "b")
        assert epoched.event_sample_indices == (4, 8)

    def test_odd_window_centres_the_event(self):
        data = np.arange(10, dtype=np.float64)[None, :]
        rec = Recording(data=data, sampling_rate_hz=10.0, events=(Event(5, "a"),))
        epoched = epoch_recording(rec, 5)
        assert epoched.trials[0, 0].tolist() == [3.0, 4.0, 5.0, 6.0, 7.0]

    def test_edge_events_discarded(self):
        data = np.zeros((2, 20))
        rec = Recording(
            data=data,
            sampling_rate_hz=10.0,
            events=(Event(1, "early"), Event(10, "mid"), Event(19, "late")),
        )
        epoched = epoch_recording(rec, 8)
        assert epoched.labels == ("mid",)
        assert epoched.event_sample_indices == (10,)

    def test_no_surviving_events_raises(self):
        rec = Recording(
            data=np.zeros((1, 10)), sampling_rate_hz=10.0, events=(Event(0, "x"),)
        )
        with pytest.raises(NoTrialsSurvive):
            epoch_recording(rec, 8)
        with pytest.raises(NoTrialsSurvive):
            epoch_recording(rec, 0)

    def test_mask_copied(self):
        mask = np.array([True, False])
        rec = Recording(
            data=np.zeros((2, 20)),
            sampling_rate_hz=10.0,
            events=(Event(10, "a"),),
            channel_mask=mask,
        )
        epoched = epoch_recording(rec, 4)
        assert epoched.channel_mask.tolist() == [True, False]
        epoched.channel_mask[0] = False
        assert rec.channel_mask[0]


class TestRunPipeline:
    def test_stage_order_and_report_shape(self):
        result = run_pipeline(synth_recording(), PipelineConfig())
        assert [r.stage_name for r in result.reports] == list(STAGE_ORDER[:4])
        for report in result.reports:
            assert report.qa_before is not None
            assert report.qa_after is not None
            assert report.wall_time_ms >= 0.0
        assert result.staged is None
        assert result.epoched is None

    def test_keep_stage_outputs(self):
        rec = synth_recording()
        result = run_pipeline(rec, PipelineConfig(), keep_stage_outputs=True)
        names = [name for name, _ in result.staged]
        assert names == ["raw"] + list(STAGE_ORDER[:4])
        assert result.staged[0][1] is rec
        assert result.staged[-1][1] is result.cleaned

    def test_line_noise_removed_and_qa_populated(self):
        result = run_pipeline(synth_recording(), PipelineConfig())
        zap = result.reports[1]
        assert zap.stage_name == "zapline"
        assert zap.params["n_remove_effective"] >= 1
        drop = zap.params["line_band_power_before_db"] - zap.params["line_band_power_after_db"]
        assert drop > 10.0
        assert zap.qa_after.snr_db is not None
        assert zap.qa_after.snr_vs_raw_db is not None

    def test_bad_channels_rejected_end_to_end(self):
        rec = synth_recording(
            bad_channels=BadChannelSpec(flat_channels=(1,), hot_channels=(5,))
        )
        result = run_pipeline(rec, PipelineConfig())
        chan = result.reports[2]
        assert chan.stage_name == "channel_reject"
        assert 1 in chan.rejected_channel_indices
        assert 5 in chan.rejected_channel_indices
        assert np.all(result.cleaned.data[1] == 0.0)
        assert not result.cleaned.channel_mask[1]
        assert chan.qa_after.channels_retained_fraction < 1.0

    def test_disabled_stages_skip_uniformly(self):
        rec = synth_recording()
        config = PipelineConfig(
            enable_bandpass=False,
            enable_zapline=False,
            enable_channel_reject=False,
            enable_component_reject=False,
        )
        result = run_pipeline(rec, config)
        assert len(result.reports) == 4
        for report in result.reports:
            assert report.params["skipped"] is True
            assert report.params["reason"] == "disabled in config"
        assert result.cleaned is rec

    def test_zapline_skips_without_line_frequency(self):
        rec = synth_recording(line=None)
        assert rec.line_freq_hz is None
        result = run_pipeline(rec, PipelineConfig(enable_component_reject=False))
        zap = result.reports[1]
        assert zap.params.get("skipped") is True
        assert "line frequency" in zap.params["reason"]

    def test_config_line_frequency_overrides_metadata(self):
        rec = synth_recording(line=None)
        result = run_pipeline(
            rec, PipelineConfig(line_freq_hz=60.0, enable_component_reject=False)
        )
        zap = result.reports[1]
        assert zap.params["line_freq_hz"] == 60.0
        assert "skipped" not in zap.params

    def test_epoching_after_cleaning(self):
        rec = synth_recording()
        result = run_pipeline(rec, PipelineConfig(epoch_len_p=250), epoch=True)
        assert result.epoched is not None
        assert result.epoched.n_trials == len(rec.events)
        assert result.epoched.trials.shape[2] == 250
        epoch_report = result.reports[-1]
        assert epoch_report.stage_name == "epoch"
        assert epoch_report.params["n_trials"] == result.epoched.n_trials

    def test_epoching_without_events_skips(self):
        rec = synth_recording(classes=None)
        result = run_pipeline(rec, PipelineConfig(), epoch=True)
        assert result.epoched is None
        assert result.reports[-1].stage_name == "epoch"
        assert result.reports[-1].params["skipped"] is True

    def test_highpass_fallback_recorded(self):
        # default upper cutoff is at Nyquist for a 500 Hz recording
        result = run_pipeline(synth_recording(), PipelineConfig(enable_zapline=False,
                                                                enable_component_reject=False))
        band = result.reports[0]
        assert band.params["highpass_only"] is True
        assert band.params["high_hz"] is None

    def test_failure_carries_partial_reports(self):
        rng = np.random.default_rng(0)
        data = rng.standard_normal((2, 4000)) * 10.0
        data[1] *= 1e-3  # flat channel; rejecting it would leave 1 channel
        rec = Recording(data=data, sampling_rate_hz=500.0)
        config = PipelineConfig(enable_bandpass=False, enable_zapline=False)
        with pytest.raises(PipelineFailure) as excinfo:
            run_pipeline(rec, config)
        failure = excinfo.value
        assert failure.stage == "channel_reject"
        assert len(failure.reports) == 2
        assert all(r.params["skipped"] for r in failure.reports)
        assert isinstance(failure.cause, AllChannelsRejected)

    def test_invalid_recording_rejected_up_front(self):
        data = np.zeros((2, 1000))
        data[0, 0] = np.nan
        rec = Recording(data=data, sampling_rate_hz=500.0)
        with pytest.raises(ValidationError):
            run_pipeline(rec, PipelineConfig())

    def test_deterministic_end_to_end(self):
        rec = synth_recording(
            bad_channels=BadChannelSpec(flat_channels=(2,)),
            spikes=SpikeSpec(channels=(3,), rate_hz=0.6),
        )
        a = run_pipeline(rec, PipelineConfig())
        b = run_pipeline(rec, PipelineConfig())
        assert np.array_equal(a.cleaned.data, b.cleaned.data)
        assert report_dicts_without_timing(a.reports) == report_dicts_without_timing(b.reports)
