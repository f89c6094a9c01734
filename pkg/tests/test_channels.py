import numpy as np
import pytest

from neuroclean.channels import channel_sd, flag_channels, reject_bad_channels
from neuroclean.errors import AllChannelsRejected, InsufficientSamples
from neuroclean.model import PipelineConfig, Recording
from oracles import sample_sd_reference


def rows_with_sd(sds, n_samples=2000, seed=0):
    """Rows whose sample SD is exactly the requested value."""
    rng = np.random.default_rng(seed)
    rows = []
    for target in sds:
        base = rng.standard_normal(n_samples)
        base = (base - base.mean()) / np.std(base, ddof=1)
        rows.append(target * base)
    return np.asarray(rows)


class TestChannelSd:
    def test_matches_reference_per_channel(self, rng):
        data = rng.standard_normal((5, 400)) * 10.0
        rec = Recording(data=data, sampling_rate_hz=100.0)
        stats = channel_sd(rec)
        for i in range(5):
            assert stats.sd_uv[i] == pytest.approx(sample_sd_reference(data[i]), abs=1e-12)
        med = np.median(stats.sd_uv)
        np.testing.assert_allclose(stats.normalized_sd, stats.sd_uv / med, atol=1e-12)
        assert stats.median_sd_uv == pytest.approx(med)

    def test_inactive_channels_are_nan(self, rng):
        data = rng.standard_normal((4, 300))
        mask = np.array([True, False, True, True])
        rec = Recording(data=data * mask[:, None], sampling_rate_hz=100.0, channel_mask=mask)
        stats = channel_sd(rec)
        assert np.isnan(stats.sd_uv[1])
        assert np.isnan(stats.normalized_sd[1])
        assert np.isfinite(stats.sd_uv[[0, 2, 3]]).all()
        # median excludes the masked channel
        assert stats.median_sd_uv == pytest.approx(np.median(stats.sd_uv[[0, 2, 3]]))

    def test_single_sample_raises(self):
        rec = Recording(data=np.zeros((3, 1)), sampling_rate_hz=100.0)
        with pytest.raises(InsufficientSamples):
            channel_sd(rec)


class TestFlagChannels:
    def test_flat_hot_and_fence_criteria(self):
        sds = [10.0, 11.0, 9.0, 10.5, 0.01, 500.0, 40.0, 10.2]
        data = rows_with_sd(sds)
        rec = Recording(data=data, sampling_rate_hz=500.0)
        flagged = flag_channels(channel_sd(rec), PipelineConfig())
        # 0.01 is flat, 500 is hot, 40 is 4x the median and over the fence
        assert set(flagged.tolist()) == {4, 5, 6}

    def test_fence_is_tukey_by_default(self):
        sds = [8.0, 9.0, 10.0, 11.0, 12.0, 13.0, 14.0, 15.0]
        data = rows_with_sd(sds)
        rec = Recording(data=data, sampling_rate_hz=500.0)
        stats = channel_sd(rec)
        assert flag_channels(stats, PipelineConfig()).size == 0
        # literal third-quartile fence flags the upper tail of the same data
        literal = flag_channels(stats, PipelineConfig(bcr_literal_quartile=True))
        norm = stats.normalized_sd
        q75 = np.percentile(norm, 75.0)
        assert set(literal.tolist()) == set(np.flatnonzero(norm > q75).tolist())
        assert literal.size == 2

    def test_only_active_channels_considered(self):
        sds = [10.0, 10.5, 9.5, 500.0]
        data = rows_with_sd(sds)
        mask = np.array([True, True, True, False])
        rec = Recording(data=data * mask[:, None], sampling_rate_hz=500.0, channel_mask=mask)
        flagged = flag_channels(channel_sd(rec), PipelineConfig())
        assert 3 not in flagged.tolist()


class TestRejectBadChannels:
    def test_rejects_flat_and_hot_and_zeroes_rows(self):
        sds = [10.0, 11.0, 9.0, 0.02, 10.5, 9.5, 480.0, 10.8, 9.8, 11.2, 10.1, 9.3]
        data = rows_with_sd(sds)
        rec = Recording(data=data, sampling_rate_hz=500.0)
        cleaned, report = reject_bad_channels(rec, PipelineConfig())
        assert report.rejected_channel_indices == (3, 6)
        assert np.all(cleaned.data[3] == 0.0)
        assert np.all(cleaned.data[6] == 0.0)
        keep = [i for i in range(12) if i not in (3, 6)]
        np.testing.assert_array_equal(cleaned.data[keep], data[keep])
        assert not cleaned.channel_mask[3]
        assert not cleaned.channel_mask[6]
        # input recording untouched
        assert np.array_equal(rec.data[3], data[3])

    def test_second_run_is_stable(self):
        sds = [10.0, 11.0, 9.0, 0.02, 10.5, 9.5, 480.0, 10.8, 9.8, 11.2, 10.1, 9.3]
        rec = Recording(data=rows_with_sd(sds), sampling_rate_hz=500.0)
        once, _ = reject_bad_channels(rec, PipelineConfig())
        twice, second = reject_bad_channels(once, PipelineConfig())
        assert second.rejected_channel_indices == ()
        assert np.array_equal(twice.data, once.data)

    def test_clean_data_rejects_nothing(self, rng):
        sds = rng.uniform(8.0, 12.0, size=16)
        rec = Recording(data=rows_with_sd(sds), sampling_rate_hz=500.0)
        cleaned, report = reject_bad_channels(rec, PipelineConfig())
        assert report.rejected_channel_indices == ()
        assert report.params["iterations_run"] == 1
        assert report.params["rejected_per_pass"] == [[]]
        assert np.array_equal(cleaned.data, rec.data)

    def test_report_records_passes(self):
        sds = [10.0, 11.0, 9.0, 0.02, 10.5, 9.5, 480.0, 10.8, 9.8, 11.2, 10.1, 9.3]
        rec = Recording(data=rows_with_sd(sds), sampling_rate_hz=500.0)
        _, report = reject_bad_channels(rec, PipelineConfig())
        per_pass = report.params["rejected_per_pass"]
        assert set(per_pass[0]) == {3, 6}
        assert per_pass[-1] == []
        assert report.params["iterations_run"] == len(per_pass)
        assert report.params["sd_low_uv"] == 0.1
        assert report.params["sd_high_uv"] == 100.0

    def test_literal_mode_stops_at_iteration_cap(self):
        sds = [8.0, 9.0, 10.0, 11.0, 12.0, 13.0, 14.0, 15.0]
        rec = Recording(data=rows_with_sd(sds), sampling_rate_hz=500.0)
        config = PipelineConfig(bcr_literal_quartile=True, bcr_max_iters=2)
        cleaned, report = reject_bad_channels(rec, config)
        assert report.params["iterations_run"] == 2
        assert len(report.rejected_channel_indices) >= 2
        assert int(cleaned.channel_mask.sum()) >= 2

    def test_all_channels_rejected_raises(self):
        sds = [0.01, 0.02, 10.0]
        rec = Recording(data=rows_with_sd(sds), sampling_rate_hz=500.0)
        with pytest.raises(AllChannelsRejected):
            reject_bad_channels(rec, PipelineConfig())

    def test_two_channel_recording_with_one_flat_raises(self):
        sds = [10.0, 0.01]
        rec = Recording(data=rows_with_sd(sds), sampling_rate_hz=500.0)
        with pytest.raises(AllChannelsRejected):
            reject_bad_channels(rec, PipelineConfig())
