import numpy as np
import pytest
import scipy.signal

from neuroclean.dsp import (
    PsdEstimate,
    band_power,
    design_butterworth,
    filtfilt,
    pearson,
    skewness,
    welch_psd,
)
from neuroclean.errors import (
    ConstantInput,
    EmptyBand,
    InvalidCutoff,
    ShapeMismatch,
    SignalTooShort,
)
from oracles import pearson_reference, skewness_reference, welch_psd_reference


class TestWelch:
    def test_matches_reference_implementation(self, rng):
        x = rng.standard_normal(2000)
        est = welch_psd(x, sampling_rate_hz=200.0, segment_len=256)
        ref_f, ref_p = welch_psd_reference(x, 200.0, 256)
        np.testing.assert_allclose(est.freqs_hz, ref_f, rtol=0, atol=1e-12)
        np.testing.assert_allclose(est.power, ref_p, rtol=1e-10, atol=1e-15)

    def test_default_segment_is_two_seconds(self, rng):
        x = rng.standard_normal(1000)
        est = welch_psd(x, sampling_rate_hz=100.0)
        assert est.resolution_hz == pytest.approx(0.5)
        assert est.freqs_hz[0] == 0.0
        assert est.freqs_hz[-1] == pytest.approx(50.0)

    def test_sine_peak_lands_on_its_frequency(self):
        fs = 1000.0
        t = np.arange(4000) / fs
        x = np.sin(2 * np.pi * 37.0 * t)
        est = welch_psd(x, fs)
        assert est.freqs_hz[np.argmax(est.power)] == pytest.approx(37.0)

    def test_total_power_tracks_variance(self, rng):
        x = rng.standard_normal(20000)
        est = welch_psd(x, sampling_rate_hz=500.0)
        total = np.sum(est.power) * est.resolution_hz
        assert total == pytest.approx(np.var(x), rel=0.15)

    def test_input_validation(self, rng):
        x = rng.standard_normal(100)
        with pytest.raises(ShapeMismatch):
            welch_psd(x.reshape(10, 10), 100.0)
        with pytest.raises(SignalTooShort):
            welch_psd(x, 100.0, segment_len=101)
        with pytest.raises(SignalTooShort):
            welch_psd(x, 100.0, segment_len=1)
        with pytest.raises(InvalidCutoff):
            welch_psd(x, 100.0, overlap_fraction=1.0)
        with pytest.raises(InvalidCutoff):
            welch_psd(x, -5.0)


class TestBandPower:
    def test_mean_over_half_open_band(self):
        psd = PsdEstimate(
            freqs_hz=np.array([0.0, 1.0, 2.0, 3.0, 4.0]),
            power=np.array([0.0, 10.0, 20.0, 30.0, 40.0]),
            resolution_hz=1.0,
        )
        assert band_power(psd, 1.0, 3.0) == pytest.approx(15.0)
        assert band_power(psd, 1.0, 3.5) == pytest.approx(20.0)

    def test_empty_band_raises(self):
        psd = PsdEstimate(
            freqs_hz=np.array([0.0, 1.0, 2.0]),
            power=np.ones(3),
            resolution_hz=1.0,
        )
        with pytest.raises(EmptyBand):
            band_power(psd, 0.2, 0.8)
        with pytest.raises(InvalidCutoff):
            band_power(psd, 2.0, 1.0)


class TestButterworth:
    def test_bandpass_is_3db_down_at_both_cutoffs(self):
        filt = design_butterworth(4, 1.0, 100.0, 1000.0)
        freqs = np.array([1.0, 100.0])
        _, response = scipy.signal.sosfreqz(filt.sos, worN=freqs, fs=1000.0)
        gains_db = 20 * np.log10(np.abs(response))
        np.testing.assert_allclose(gains_db, [-3.0103, -3.0103], atol=0.05)

    def test_bandpass_kills_dc_and_doubles_order(self):
        filt = design_butterworth(4, 1.0, 100.0, 1000.0)
        assert filt.order == 8
        assert filt.kind == "bandpass"
        _, response = scipy.signal.sosfreqz(filt.sos, worN=np.array([0.05]), fs=1000.0)
        assert 20 * np.log10(np.abs(response[0])) < -60.0

    def test_passband_is_flat(self):
        filt = design_butterworth(4, 1.0, 100.0, 1000.0)
        freqs = np.array([5.0, 10.0, 30.0, 50.0])
        _, response = scipy.signal.sosfreqz(filt.sos, worN=freqs, fs=1000.0)
        np.testing.assert_allclose(np.abs(response), 1.0, atol=0.01)

    def test_highpass_when_upper_cutoff_is_none(self):
        filt = design_butterworth(4, 1.0, None, 800.0)
        assert filt.kind == "highpass"
        assert filt.order == 4
        freqs = np.array([1.0, 100.0])
        _, response = scipy.signal.sosfreqz(filt.sos, worN=freqs, fs=800.0)
        assert 20 * np.log10(np.abs(response[0])) == pytest.approx(-3.0103, abs=0.05)
        assert np.abs(response[1]) == pytest.approx(1.0, abs=0.01)

    @pytest.mark.parametrize(
        "order, lo, hi, fs",
        [
            (0, 1.0, 100.0, 1000.0),
            (4, 0.0, 100.0, 1000.0),
            (4, -1.0, 100.0, 1000.0),
            (4, 1.0, 500.0, 1000.0),
            (4, 100.0, 50.0, 1000.0),
            (4, 600.0, None, 1000.0),
        ],
    )
    def test_invalid_designs_raise(self, order, lo, hi, fs):
        with pytest.raises(InvalidCutoff):
            design_butterworth(order, lo, hi, fs)


class TestFiltfilt:
    def test_zero_phase_on_in_band_sine(self):
        fs = 1000.0
        t = np.arange(4000) / fs
        x = np.sin(2 * np.pi * 10.0 * t)
        filt = design_butterworth(4, 1.0, 100.0, fs)
        y = filtfilt(filt, x)
        mid = slice(1000, 3000)
        in_phase = 2 * np.mean(y[mid] * np.sin(2 * np.pi * 10.0 * t[mid]))
        quadrature = 2 * np.mean(y[mid] * np.cos(2 * np.pi * 10.0 * t[mid]))
        phase = np.arctan2(quadrature, in_phase)
        assert abs(phase) < 1e-4
        assert in_phase == pytest.approx(1.0, abs=0.05)

    def test_matrix_rows_match_individual_calls(self, rng):
        fs = 500.0
        x = rng.standard_normal((3, 2000))
        filt = design_butterworth(4, 1.0, 100.0, fs)
        stacked = filtfilt(filt, x)
        for i in range(3):
            np.testing.assert_array_equal(stacked[i], filtfilt(filt, x[i]))

    def test_attenuates_out_of_band_sine(self):
        fs = 1000.0
        t = np.arange(8000) / fs
        x = np.sin(2 * np.pi * 300.0 * t)
        filt = design_butterworth(4, 1.0, 100.0, fs)
        y = filtfilt(filt, x)
        assert np.std(y[2000:6000]) < 0.01 * np.std(x)

    def test_too_short_signal_raises(self, rng):
        filt = design_butterworth(4, 1.0, 100.0, 1000.0)
        with pytest.raises(SignalTooShort):
            filtfilt(filt, rng.standard_normal(3 * filt.order))
        with pytest.raises(ShapeMismatch):
            filtfilt(filt, rng.standard_normal((2, 2, 50)))


class TestPearson:
    def test_frozen_small_example(self):
        x = np.array([1.0, 2.0, 3.0])
        y = np.array([2.0, 4.0, 7.0])
        r = pearson(x, y)
        assert r == pytest.approx(0.9933992677987828, abs=1e-12)
        assert r == pytest.approx(pearson_reference(x, y), abs=1e-15)

    def test_exact_linear_relations(self):
        x = np.array([0.0, 1.0, 2.0, 5.0])
        assert pearson(x, 2.0 * x + 1.0) == pytest.approx(1.0, abs=1e-12)
        assert pearson(x, -x) == pytest.approx(-1.0, abs=1e-12)

    def test_random_data_matches_reference(self, rng):
        x = rng.standard_normal(100)
        y = rng.standard_normal(100)
        assert pearson(x, y) == pytest.approx(pearson_reference(x, y), abs=1e-14)

    def test_degenerate_inputs_raise(self):
        with pytest.raises(ConstantInput):
            pearson(np.ones(5), np.arange(5.0))
        with pytest.raises(ShapeMismatch):
            pearson(np.arange(4.0), np.arange(5.0))
        with pytest.raises(SignalTooShort):
            pearson(np.array([1.0]), np.array([2.0]))


class TestSkewness:
    def test_frozen_small_example(self):
        x = np.array([0.0, 1.0, 2.0, 3.0, 10.0])
        s = skewness(x)
        assert s == pytest.approx(1.2099004414720482, abs=1e-12)
        assert s == pytest.approx(skewness_reference(x), abs=1e-14)

    def test_symmetric_sample_is_near_zero(self):
        x = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
        assert skewness(x) == pytest.approx(0.0, abs=1e-12)

    def test_random_data_matches_reference(self, rng):
        x = rng.exponential(size=500)
        assert skewness(x) == pytest.approx(skewness_reference(x), abs=1e-12)
        assert skewness(x) > 0.5

    def test_degenerate_inputs_raise(self):
        with pytest.raises(ConstantInput):
            skewness(np.full(10, 3.3))
        with pytest.raises(SignalTooShort):
            skewness(np.array([1.0, 2.0]))
