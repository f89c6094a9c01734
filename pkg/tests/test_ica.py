import numpy as np
import pytest

from neuroclean.errors import InsufficientChannels, InsufficientSamples, RankDeficientData
from neuroclean.ica import fast_ica, whiten
from oracles import amari_index


def mixed_laplace(seed=0, n_sources=3, n_samples=20000):
    """Linear mixture of independent Laplace sources with offsets."""
    rng = np.random.default_rng(seed)
    sources = rng.laplace(size=(n_sources, n_samples))
    mixing = rng.normal(size=(n_sources, n_sources)) + 0.5 * np.eye(n_sources)
    offsets = rng.uniform(-5.0, 5.0, size=n_sources)
    data = mixing @ sources + offsets[:, None]
    return data, sources, mixing


class TestWhiten:
    def test_output_has_identity_covariance(self, rng):
        mix = rng.normal(size=(4, 4))
        data = mix @ rng.standard_normal((4, 5000)) + rng.uniform(-2, 2, size=4)[:, None]
        z, transform, mean = whiten(data)
        cov = (z @ z.T) / z.shape[1]
        np.testing.assert_allclose(cov, np.eye(z.shape[0]), atol=1e-10)
        np.testing.assert_allclose(mean, data.mean(axis=1), atol=1e-12)
        np.testing.assert_allclose(transform @ (data - mean[:, None]), z, atol=1e-10)

    def test_rank_deficient_dimension_dropped(self, rng):
        base = rng.standard_normal((3, 4000))
        data = np.vstack([base, base[0] + base[1]])
        z, transform, _ = whiten(data)
        assert z.shape[0] == 3
        assert transform.shape == (3, 4)

    def test_deterministic(self, rng):
        data = rng.standard_normal((4, 1000))
        z1, t1, m1 = whiten(data)
        z2, t2, m2 = whiten(data)
        assert np.array_equal(z1, z2)
        assert np.array_equal(t1, t2)

    def test_degenerate_inputs_raise(self, rng):
        with pytest.raises(InsufficientChannels):
            whiten(rng.standard_normal((1, 100)))
        with pytest.raises(InsufficientSamples):
            whiten(rng.standard_normal((10, 10)))
        with pytest.raises(RankDeficientData):
            whiten(np.zeros((3, 100)))


class TestFastIca:
    def test_recovers_laplace_sources(self):
        data, sources, mixing = mixed_laplace(seed=1)
        result = fast_ica(data, seed=0)
        assert result.converged
        # every true source should be recovered by some component up to sign
        corr = np.corrcoef(np.vstack([sources, result.sources]))[:3, 3:]
        best = np.max(np.abs(corr), axis=1)
        assert np.min(best) > 0.99
        assert amari_index(result.unmixing @ mixing) < 0.05

    def test_reconstruction_matches_input(self):
        data, _, _ = mixed_laplace(seed=2)
        result = fast_ica(data, seed=0)
        np.testing.assert_allclose(
            result.reconstruct(), data, atol=1e-8 * np.max(np.abs(data))
        )

    def test_mixing_is_pseudoinverse_of_unmixing(self):
        data, _, _ = mixed_laplace(seed=3)
        result = fast_ica(data, seed=0)
        np.testing.assert_allclose(
            result.unmixing @ result.mixing, np.eye(result.n_components), atol=1e-9
        )

    def test_bit_reproducible_for_a_seed(self):
        data, _, _ = mixed_laplace(seed=4)
        a = fast_ica(data, seed=7)
        b = fast_ica(data, seed=7)
        assert np.array_equal(a.sources, b.sources)
        assert np.array_equal(a.unmixing, b.unmixing)
        assert a.n_iterations == b.n_iterations
        c = fast_ica(data, seed=8)
        assert not np.array_equal(a.unmixing, c.unmixing)

    def test_iteration_budget_reports_instead_of_raising(self):
        data, _, _ = mixed_laplace(seed=5)
        result = fast_ica(data, seed=0, max_iter=1)
        assert not result.converged
        assert result.n_iterations == 1
        assert np.all(np.isfinite(result.sources))

    def test_component_subset(self, rng):
        data = rng.standard_normal((4, 3000))
        result = fast_ica(data, n_components=2, seed=0)
        assert result.sources.shape == (2, 3000)
        assert result.unmixing.shape == (2, 4)
        assert result.mixing.shape == (4, 2)

    def test_component_count_bounds(self, rng):
        data = rng.standard_normal((3, 1000))
        with pytest.raises(RankDeficientData):
            fast_ica(data, n_components=4)
        with pytest.raises(RankDeficientData):
            fast_ica(data, n_components=0)

    def test_channel_index_map_passthrough(self, rng):
        data = rng.standard_normal((3, 1000))
        default = fast_ica(data, seed=0)
        assert default.channel_index_map.tolist() == [0, 1, 2]
        mapped = fast_ica(data, seed=0, channel_index_map=np.array([2, 5, 9]))
        assert mapped.channel_index_map.tolist() == [2, 5, 9]
