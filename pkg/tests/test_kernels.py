import numpy as np
import pytest
from scipy.integrate import quad

from cnmaps import (
    Dataset,
    KernelSpec,
    PairSample,
    approx_mse,
    gram_exact,
    init_random_dense,
    kernel_eval,
    psd_check,
    sample_phases,
    sample_spectral,
)

from .oracles import expected_rff_mse


class ZeroMap:
    def __init__(self, d, k=4):
        self.d, self.k = d, k

    def transform(self, X):
        return np.zeros((len(np.atleast_2d(X)), self.k))


class TestKernelEval:
    def test_zero_distance(self, rng):
        x = rng.standard_normal(5)
        assert kernel_eval(KernelSpec(3.0), x, x) == 1.0

    def test_direct_formula(self):
        # ||x - y||^2 = 2
        assert kernel_eval(KernelSpec(0.5), [1.0, 0.0], [0.0, 1.0]) == pytest.approx(np.exp(-1), rel=1e-15)
        assert kernel_eval(KernelSpec(0.5), [1.0, 0.0], [0.0, 1.0]) == pytest.approx(0.367879, abs=1e-6)

    def test_symmetry(self, rng):
        spec = KernelSpec(0.7)
        for _ in range(10):
            x, y = rng.standard_normal((2, 4))
            assert kernel_eval(spec, x, y) == kernel_eval(spec, y, x)

    def test_dim_mismatch(self):
        with pytest.raises(ValueError):
            kernel_eval(KernelSpec(1.0), [1.0, 2.0], [1.0])

    def test_bad_gamma(self):
        with pytest.raises(ValueError):
            KernelSpec(0.0)
        with pytest.raises(NotImplementedError):
            KernelSpec(1.0, family="laplacian")


class TestSpectral:
    def test_variance(self):
        theta = sample_spectral(KernelSpec(0.5), 1, 100_000, np.random.default_rng(0))
        assert theta.shape == (1, 100_000)
        assert 0.97 <= theta.var() <= 1.03

    def test_mean(self):
        theta = sample_spectral(KernelSpec(0.5), 1, 100_000, np.random.default_rng(1))
        se = theta.std() / np.sqrt(theta.size)
        assert abs(theta.mean()) < 4 * se

    def test_deterministic(self):
        a = sample_spectral(KernelSpec(2.0), 3, 7, np.random.default_rng(9))
        b = sample_spectral(KernelSpec(2.0), 3, 7, np.random.default_rng(9))
        np.testing.assert_array_equal(a, b)

    def test_bad_dims(self, rng):
        with pytest.raises(ValueError):
            sample_spectral(KernelSpec(1.0), 0, 3, rng)


class TestPhases:
    def test_range(self, rng):
        b = sample_phases(10_000, rng)
        assert np.all(b >= 0) and np.all(b < 2 * np.pi)

    def test_mean(self):
        b = sample_phases(100_000, np.random.default_rng(2))
        se = b.std() / np.sqrt(b.size)
        assert abs(b.mean() - np.pi) < 4 * se

    def test_deterministic(self):
        np.testing.assert_array_equal(sample_phases(5, np.random.default_rng(4)),
                                      sample_phases(5, np.random.default_rng(4)))


class TestGram:
    def test_single_point(self):
        g = gram_exact(KernelSpec(1.0), Dataset([[1.0, 2.0]], [1]))
        np.testing.assert_array_equal(g.values, [[1.0]])

    def test_diagonal_and_symmetry(self, rng):
        ds = Dataset(rng.standard_normal((40, 5)), np.ones(40))
        g = gram_exact(KernelSpec(0.3), ds).values
        np.testing.assert_array_equal(np.diag(g), 1.0)
        np.testing.assert_allclose(g, g.T, atol=1e-12)

    def test_matches_scalar(self, rng):
        spec = KernelSpec(0.8)
        X = rng.standard_normal((3, 4))
        g = gram_exact(spec, Dataset(X, np.ones(3))).values
        for i in range(3):
            for j in range(3):
                assert g[i, j] == pytest.approx(kernel_eval(spec, X[i], X[j]), rel=1e-12)

    def test_cap(self, rng):
        ds = Dataset(rng.standard_normal((11, 2)), np.ones(11))
        with pytest.raises(ValueError, match="pairs"):
            gram_exact(KernelSpec(1.0), ds, cap=10)

    def test_psd(self, rng):
        ds = Dataset(rng.standard_normal((150, 3)), np.ones(150))
        g = gram_exact(KernelSpec(0.5), ds)
        assert psd_check(g) >= -1e-8 * ds.n


class TestApproxMse:
    def test_large_k_reproduces_kernel(self):
        rng = np.random.default_rng(3)
        ds = Dataset(rng.standard_normal((30, 3)), np.ones(30))
        spec = KernelSpec(0.5)
        m = init_random_dense(spec, 3, 8192, True, rng)
        assert approx_mse(m, spec, ds) < 1e-3

    def test_zero_map_identical_pairs(self, rng):
        ds = Dataset(rng.standard_normal((10, 3)), np.ones(10))
        pairs = [PairSample(i, i) for i in range(10)]
        assert approx_mse(ZeroMap(3), KernelSpec(1.0), ds, pairs) == 1.0

    def test_nonnegative(self, rng):
        ds = Dataset(rng.standard_normal((25, 2)), np.ones(25))
        spec = KernelSpec(1.0)
        for seed in range(5):
            m = init_random_dense(spec, 2, 4, seed % 2 == 0, np.random.default_rng(seed))
            assert approx_mse(m, spec, ds) >= 0

    def test_sampled_pairs_path(self, rng):
        ds = Dataset(rng.standard_normal((60, 2)), np.ones(60))
        spec = KernelSpec(1.0)
        m = init_random_dense(spec, 2, 32, True, rng)
        full = approx_mse(m, spec, ds)
        sampled = approx_mse(m, spec, ds, cap=10, n_pairs=200_000, rng=np.random.default_rng(0))
        assert sampled == pytest.approx(full, rel=0.05)

    def test_dim_mismatch(self, rng):
        ds = Dataset(rng.standard_normal((5, 2)), np.ones(5))
        with pytest.raises(ValueError):
            approx_mse(ZeroMap(3), KernelSpec(1.0), ds)

    def test_matches_expectation_oracle(self):
        rng = np.random.default_rng(8)
        X = rng.standard_normal((25, 3))
        ds = Dataset(X, np.ones(25))
        spec = KernelSpec(0.4)
        k = 32
        mc = np.mean([approx_mse(init_random_dense(spec, 3, k, True, np.random.default_rng(s)), spec, ds)
                      for s in range(400)])
        assert mc == pytest.approx(expected_rff_mse(X, 0.4, k), rel=0.05)

    def test_monte_carlo_convergence(self):
        rng = np.random.default_rng(11)
        ds = Dataset(rng.standard_normal((60, 4)), np.ones(60))
        spec = KernelSpec(0.25)
        means = [np.mean([approx_mse(init_random_dense(spec, 4, k, True, np.random.default_rng(s)), spec, ds)
                          for s in range(10)]) for k in (16, 64, 256, 1024)]
        assert all(a > b for a, b in zip(means, means[1:]))


def test_bochner_identity_by_quadrature(rng):
    for _ in range(20):
        theta, x, y = rng.standard_normal((3, 4))
        a, c = theta @ x, theta @ y
        val, _ = quad(lambda b: 2 * np.cos(a + b) * np.cos(c + b), 0, 2 * np.pi, epsabs=1e-12, epsrel=1e-12)
        assert val / (2 * np.pi) == pytest.approx(np.cos(theta @ (x - y)), abs=1e-6)
