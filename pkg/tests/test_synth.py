import dataclasses
import json

import numpy as np
import pytest

from neuroclean.dsp import band_power, welch_psd
from neuroclean.errors import ConfigError
from neuroclean.model import StageReport
from neuroclean.synth import (
    BadChannelSpec,
    ClassSpec,
    DriftSpec,
    GroundTruth,
    LineSpec,
    SpikeSpec,
    SynthSpec,
    generate,
    score_against_truth,
)


def base_spec(**overrides):
    defaults = dict(n_channels=8, sampling_rate_hz=500.0, duration_s=20.0, seed=0)
    defaults.update(overrides)
    return SynthSpec(**defaults)


def truth_stub(**overrides):
    defaults = dict(
        seed=0,
        channel_sigma_uv=(10.0,) * 8,
        flat_channels=(),
        hot_channels=(),
        line_freq_hz=None,
        line_amplitude_uv=None,
        line_pattern=None,
        spike_channels=(),
        spike_times_s=(),
        class_names=(),
        event_labels=(),
        event_samples=(),
        class_gains=(),
        class_band_hz=None,
    )
    defaults.update(overrides)
    return GroundTruth(**defaults)


class TestSpecValidation:
    @pytest.mark.parametrize(
        "overrides",
        [
            {"n_channels": 0},
            {"duration_s": 0.0},
            {"sigma_uv_range": (0.0, 5.0)},
            {"sigma_uv_range": (5.0, 1.0)},
            {"pink_exponent": -1.0},
            {"bad_channels": BadChannelSpec(flat_channels=(9,))},
            {"bad_channels": BadChannelSpec(flat_channels=(1,), hot_channels=(1,))},
            {"spikes": SpikeSpec(channels=(-1,))},
            {"classes": ClassSpec(n_classes=1)},
            {"classes": ClassSpec(band_lo_hz=100.0, band_hi_hz=300.0)},
            {"classes": ClassSpec(trials_per_class=40, epoch_len_p=500)},
        ],
    )
    def test_rejects_bad_specs(self, overrides):
        with pytest.raises(ConfigError):
            base_spec(**overrides).validate()

    def test_json_round_trip(self):
        spec = base_spec(
            line=LineSpec(50.0, 15.0),
            bad_channels=BadChannelSpec(flat_channels=(1,), hot_channels=(3,)),
            spikes=SpikeSpec(channels=(0, 2)),
            classes=ClassSpec(trials_per_class=8, epoch_len_p=250),
            drift=DriftSpec(),
        )
        back = SynthSpec.from_json(json.dumps(spec.to_dict()))
        assert back == spec

    def test_from_dict_rejects_unknown_keys(self):
        with pytest.raises(ConfigError, match="unknown"):
            SynthSpec.from_dict({"n_channels": 4, "color": "pink"})

    def test_from_json_rejects_non_object(self):
        with pytest.raises(ConfigError):
            SynthSpec.from_json("[1, 2]")


class TestGenerate:
    def test_deterministic_for_a_seed(self):
        spec = base_spec(line=LineSpec(), spikes=SpikeSpec(channels=(2,)))
        rec_a, truth_a = generate(spec)
        rec_b, truth_b = generate(spec)
        assert np.array_equal(rec_a.data, rec_b.data)
        assert rec_a.events == rec_b.events
        assert truth_a == truth_b
        rec_c, _ = generate(dataclasses.replace(spec, seed=1))
        assert not np.array_equal(rec_a.data, rec_c.data)

    def test_baseline_noise_matches_manifest_sigmas(self):
        rec, truth = generate(base_spec())
        assert rec.data.shape == (8, 10000)
        np.testing.assert_allclose(rec.data.std(axis=1), truth.channel_sigma_uv, rtol=1e-12)
        lo, hi = base_spec().sigma_uv_range
        assert all(lo <= s <= hi for s in truth.channel_sigma_uv)
        assert rec.line_freq_hz is None
        assert rec.events == ()

    def test_line_injection_is_rank_one_and_on_frequency(self):
        plain, _ = generate(base_spec())
        lined, truth = generate(base_spec(line=LineSpec(freq_hz=60.0, amplitude_uv=25.0)))
        diff = lined.data - plain.data
        assert np.linalg.matrix_rank(diff, tol=1e-6) == 1
        assert np.linalg.norm(truth.line_pattern) == pytest.approx(1.0)
        psd = welch_psd(lined.data[0], 500.0)
        assert band_power(psd, 59.0, 61.0) > 20.0 * band_power(psd, 49.0, 51.0)
        assert lined.line_freq_hz == 60.0

    def test_flat_and_hot_channels_overwritten(self):
        spec = base_spec(bad_channels=BadChannelSpec(flat_channels=(1,), hot_channels=(6,)))
        rec, truth = generate(spec)
        sds = rec.data.std(axis=1)
        assert sds[1] < 0.1
        assert sds[6] > 300.0
        assert truth.bad_channels == (1, 6)

    def test_spikes_touch_only_their_channels(self):
        plain, _ = generate(base_spec())
        spec = base_spec(spikes=SpikeSpec(channels=(2, 5), rate_hz=1.0))
        spiked, truth = generate(spec)
        diff = spiked.data - plain.data
        untouched = [i for i in range(8) if i not in (2, 5)]
        assert np.all(diff[untouched] == 0.0)
        assert np.any(diff[2] != 0.0)
        # one-sided positive transients skew the amplitude distribution
        assert float(np.mean(diff[2] ** 3)) > 0.0
        assert truth.spike_channels == (2, 5)
        assert all(0.0 <= when <= 20.0 for when in truth.spike_times_s)

    def test_drift_adds_low_frequency_power(self):
        plain, _ = generate(base_spec(duration_s=40.0))
        drifting, _ = generate(base_spec(duration_s=40.0, drift=DriftSpec(amplitude_uv=50.0)))
        psd_plain = welch_psd(plain.data[0], 500.0, segment_len=10000)
        psd_drift = welch_psd(drifting.data[0], 500.0, segment_len=10000)
        assert band_power(psd_drift, 0.1, 0.6) > 50.0 * band_power(psd_plain, 0.1, 0.6)

    def test_class_structure_labels_and_windows(self):
        spec = base_spec(classes=ClassSpec(trials_per_class=8, epoch_len_p=250))
        rec, truth = generate(spec)
        assert len(rec.events) == 24
        labels = [e.label for e in rec.events]
        assert sorted(set(labels)) == ["class_0", "class_1", "class_2"]
        assert all(labels.count(name) == 8 for name in set(labels))
        samples = [e.sample_index for e in rec.events]
        assert samples == sorted(samples)
        assert samples[0] >= 125 and samples[-1] <= rec.n_samples - 125
        assert truth.event_labels == tuple(labels)
        assert truth.class_band_hz == (20.0, 45.0)
        assert len(truth.class_gains) == 3
        assert len(truth.class_gains[0]) == 8

    def test_class_gains_move_band_power(self):
        spec = base_spec(
            duration_s=40.0,
            classes=ClassSpec(trials_per_class=15, epoch_len_p=250, gain_depth=0.9),
        )
        rec, truth = generate(spec)
        gains = np.asarray(truth.class_gains)
        code = {name: i for i, name in enumerate(truth.class_names)}
        # channel with the largest gain contrast between two classes
        contrast = np.abs(gains[0] - gains[1])
        ch = int(np.argmax(contrast))
        powers = {0: [], 1: []}
        for event in rec.events:
            k = code[event.label]
            if k not in powers:
                continue
            segment = rec.data[ch, event.sample_index - 125 : event.sample_index + 125]
            psd = welch_psd(segment, 500.0, segment_len=250)
            powers[k].append(band_power(psd, 20.0, 45.0))
        hi, lo = (0, 1) if gains[0, ch] > gains[1, ch] else (1, 0)
        assert np.mean(powers[hi]) > np.mean(powers[lo])


class TestScoreCard:
    def test_precision_recall_and_line_reduction(self):
        truth = truth_stub(flat_channels=(2,), hot_channels=(5,), spike_channels=(1,))
        reports = [
            StageReport(
                stage_name="zapline",
                params={"line_band_power_before_db": -3.0, "line_band_power_after_db": -25.0},
            ),
            StageReport(stage_name="channel_reject", rejected_channel_indices=(2, 4)),
            StageReport(
                stage_name="cluster_mara",
                rejected_channel_indices=(5,),
                rejected_component_indices=(0, 3),
            ),
        ]
        card = score_against_truth(reports, truth)
        assert card.channel_precision == pytest.approx(2.0 / 3.0)
        assert card.channel_recall == pytest.approx(1.0)
        assert card.n_channels_rejected == 3
        assert card.n_channels_truth == 2
        assert card.artifact_expected
        assert card.artifact_caught is True
        assert card.line_reduction_db == pytest.approx(22.0)
        json.dumps(card.to_dict())

    def test_nothing_rejected(self):
        truth = truth_stub(flat_channels=(2,), spike_channels=(1,))
        card = score_against_truth([], truth)
        assert card.channel_precision == 1.0
        assert card.channel_recall == 0.0
        assert card.artifact_caught is False
        assert card.line_reduction_db is None

    def test_no_contamination_expected(self):
        card = score_against_truth(
            [StageReport(stage_name="channel_reject")], truth_stub()
        )
        assert card.channel_precision == 1.0
        assert card.channel_recall == 1.0
        assert card.artifact_expected is False
        assert card.artifact_caught is None
