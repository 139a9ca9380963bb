import math

import numpy as np
import pytest

from graphrf import (
    Graph,
    GraphKernelSpec,
    KernelSpec,
    erdos_renyi,
    eval_kernel,
    eval_kernel_matrix,
    graph_kernel_matrix,
    spectral_sample,
)


def triangle():
    return Graph(np.array([[0, 1, 1], [1, 0, 1], [1, 1, 0]], dtype=float))


class TestEvalKernel:
    def test_standardized_at_zero_distance(self):
        a = np.array([0.3, -1.2, 4.0])
        for family, bw in (("gaussian", 1.0), ("laplacian", 2.0), ("cauchy", 0.7)):
            assert eval_kernel(KernelSpec(family, bw), a, a) == pytest.approx(1.0)

    def test_gaussian_hand_value(self):
        # sigma^2 = 2 and squared distance 4 gives exp(-4 / (2 * 2)) = exp(-1)
        spec = KernelSpec("gaussian", 2.0)
        val = eval_kernel(spec, np.array([2.0, 0.0]), np.array([0.0, 0.0]))
        assert val == pytest.approx(math.exp(-1.0), abs=1e-12)

    def test_laplacian_hand_value(self):
        spec = KernelSpec("laplacian", 2.0)
        val = eval_kernel(spec, np.array([1.0, -1.0]), np.array([0.0, 0.0]))
        assert val == pytest.approx(math.exp(-1.0), abs=1e-12)

    def test_cauchy_hand_value(self):
        spec = KernelSpec("cauchy", 1.0)
        val = eval_kernel(spec, np.array([1.0, 1.0]), np.array([0.0, 0.0]))
        assert val == pytest.approx(0.25, abs=1e-12)

    def test_shift_invariance(self):
        rng = np.random.default_rng(0)
        for family, bw in (("gaussian", 1.5), ("laplacian", 1.0), ("cauchy", 2.0)):
            spec = KernelSpec(family, bw)
            a, b, c = rng.normal(size=(3, 6))
            assert eval_kernel(spec, a, b) == pytest.approx(eval_kernel(spec, a + c, b + c), rel=1e-10)

    def test_symmetry_randomized(self):
        rng = np.random.default_rng(1)
        spec = KernelSpec("gaussian", 1.0)
        for _ in range(1000):
            a, b = rng.normal(size=(2, 4))
            assert eval_kernel(spec, a, b) == eval_kernel(spec, b, a)

    def test_bounded_in_unit_interval(self):
        rng = np.random.default_rng(2)
        for family in ("gaussian", "laplacian", "cauchy"):
            spec = KernelSpec(family, 0.8)
            for _ in range(200):
                a, b = rng.normal(size=(2, 5)) * 3
                val = eval_kernel(spec, a, b)
                assert 0.0 <= val <= 1.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            eval_kernel(KernelSpec("gaussian", 1.0), np.zeros(3), np.zeros(4))

    def test_bad_bandwidth(self):
        with pytest.raises(ValueError):
            KernelSpec("gaussian", 0.0)

    def test_unknown_family(self):
        with pytest.raises(ValueError):
            KernelSpec("sinc", 1.0)


class TestEvalKernelMatrix:
    @pytest.mark.parametrize("family,bw", [("gaussian", 1.3), ("laplacian", 0.9), ("cauchy", 1.1)])
    def test_matches_scalar_evaluation(self, family, bw):
        rng = np.random.default_rng(3)
        xs = rng.normal(size=(7, 5))
        ys = rng.normal(size=(4, 5))
        spec = KernelSpec(family, bw)
        mat = eval_kernel_matrix(spec, xs, ys)
        for i in range(7):
            for j in range(4):
                assert mat[i, j] == pytest.approx(eval_kernel(spec, xs[i], ys[j]), abs=1e-10)


class TestSpectralSample:
    def test_gaussian_unit_variance(self):
        v = spectral_sample(KernelSpec("gaussian", 1.0), 100_000, 1, seed=0)
        assert 0.99 <= v.var() <= 1.01

    def test_gaussian_quarter_variance(self):
        # sigma^2 = 4 gives sample variance 1/4 within 2 percent
        v = spectral_sample(KernelSpec("gaussian", 4.0), 100_000, 1, seed=1)
        assert abs(v.var() - 0.25) <= 0.005

    def test_laplacian_gives_cauchy_scale(self):
        # |Cauchy(scale)| has median equal to the scale, here 1/sigma
        v = spectral_sample(KernelSpec("laplacian", 2.0), 100_000, 1, seed=2)
        assert np.median(np.abs(v)) == pytest.approx(0.5, rel=0.05)

    def test_cauchy_gives_laplace_variance(self):
        # Laplace(1/sigma) has variance 2/sigma^2
        v = spectral_sample(KernelSpec("cauchy", 1.0), 100_000, 1, seed=3)
        assert v.var() == pytest.approx(2.0, rel=0.05)

    def test_deterministic(self):
        spec = KernelSpec("gaussian", 1.0)
        assert np.array_equal(spectral_sample(spec, 50, 7, 9), spectral_sample(spec, 50, 7, 9))

    def test_shape(self):
        assert spectral_sample(KernelSpec("gaussian", 1.0), 12, 5, 0).shape == (12, 5)

    def test_bad_counts(self):
        with pytest.raises(ValueError):
            spectral_sample(KernelSpec("gaussian", 1.0), 0, 5, 0)


class TestGraphKernelMatrix:
    def test_diffusion_small_sigma_is_identity(self):
        g = erdos_renyi(10, 0.5, 0)
        k = graph_kernel_matrix(g, GraphKernelSpec("diffusion", sigma2=0.0))
        np.testing.assert_allclose(k, np.eye(10), atol=1e-10)

    def test_triangle_diffusion_spectrum(self):
        # normalized Laplacian of the triangle has eigenvalues (0, 1.5, 1.5),
        # so the diffusion response exp(-sigma2 lambda / 2) with sigma2 = 2
        # gives kernel eigenvalues (1, e^-1.5, e^-1.5)
        k = graph_kernel_matrix(triangle(), GraphKernelSpec("diffusion", sigma2=2.0))
        evals = np.sort(np.linalg.eigvalsh(k))
        expected = np.sort([1.0, math.exp(-1.5), math.exp(-1.5)])
        np.testing.assert_allclose(evals, expected, atol=1e-12)

    def test_bandlimited_full_band_is_identity(self):
        g = erdos_renyi(8, 0.4, 1)
        k = graph_kernel_matrix(g, GraphKernelSpec("bandlimited", band_size=8))
        np.testing.assert_allclose(k, np.eye(8), atol=1e-10)

    def test_bandlimited_damps_out_of_band(self):
        g = erdos_renyi(8, 0.4, 1)
        spec = GraphKernelSpec("bandlimited", band_size=3, floor=1e-6)
        evals = np.sort(np.linalg.eigvalsh(graph_kernel_matrix(g, spec)))[::-1]
        np.testing.assert_allclose(evals[:3], 1.0, atol=1e-8)
        np.testing.assert_allclose(evals[3:], 1e-6, atol=1e-12)

    def test_symmetric_psd_random_graphs(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            n = int(rng.integers(3, 51))
            g = erdos_renyi(n, float(rng.uniform(0.1, 0.8)), int(rng.integers(1 << 30)))
            k = graph_kernel_matrix(g, GraphKernelSpec("diffusion", sigma2=3.0))
            assert np.abs(k - k.T).max() <= 1e-10
            assert np.linalg.eigvalsh(k).min() >= -1e-8

    def test_diffusion_monotone_in_sigma2(self):
        g = erdos_renyi(12, 0.4, 5)
        small = np.sort(np.linalg.eigvalsh(graph_kernel_matrix(g, GraphKernelSpec("diffusion", sigma2=1.0))))
        large = np.sort(np.linalg.eigvalsh(graph_kernel_matrix(g, GraphKernelSpec("diffusion", sigma2=4.0))))
        # the top (unit) eigenvalue stays, every other one shrinks
        assert large[-1] == pytest.approx(1.0, abs=1e-10)
        assert np.all(large[:-1] <= small[:-1] + 1e-12)

    def test_directed_rejected(self):
        g = Graph(np.array([[0.0, 1.0], [0.0, 0.0]]), directed=True)
        with pytest.raises(ValueError):
            graph_kernel_matrix(g, GraphKernelSpec("diffusion", sigma2=1.0))

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            GraphKernelSpec("diffusion")
        with pytest.raises(ValueError):
            GraphKernelSpec("bandlimited", band_size=0)
