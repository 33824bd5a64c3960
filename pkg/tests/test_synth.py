import math

import numpy as np
import pytest

from ordreg.core import canonicalize
from ordreg.errors import DimensionMismatch, NotApplicable, ZeroNorm, ZeroVariance
from ordreg.solver import FitConfig
from ordreg.synth import (
    ExperimentConfig,
    NoiseKind,
    UtilityKind,
    apply_utility,
    gen_coefficients,
    gen_noise,
    gen_predictors,
    generate_dataset,
    metric_m1,
    metric_m2,
    predictor_covariance,
    run_consistency_experiment,
    run_single,
    scale_noise,
    selection_metrics,
    signed_sensitivity,
    specificity,
)


class TestPredictors:
    def test_covariance_entries(self):
        sigma = predictor_covariance(4)
        np.testing.assert_array_equal(np.diag(sigma), 1.0)
        assert sigma[0, 2] == pytest.approx(0.49)

    def test_scalar_case(self):
        X = gen_predictors(5, 1, 3)
        np.testing.assert_array_equal(X[:, 0], np.random.default_rng(3).standard_normal((5, 1))[:, 0])

    def test_sample_covariance(self):
        X = gen_predictors(100_000, 3, 42)
        np.testing.assert_allclose(np.cov(X, rowvar=False), predictor_covariance(3), atol=0.02)

    def test_deterministic(self):
        np.testing.assert_array_equal(gen_predictors(7, 3, 1), gen_predictors(7, 3, 1))


class TestCoefficients:
    def test_canonical_and_rank(self):
        for seed in range(30):
            B = gen_coefficients(5, 5, 0.75, seed)
            assert B.canonical
            assert np.all(B.B[:, -1] == 0)
            assert abs(np.linalg.norm(B.B) - 1) <= 1e-12
            assert np.linalg.matrix_rank(B.B) >= 2

    def test_full_density_has_no_structural_zeros(self):
        B = gen_coefficients(4, 3, 1.0, 0)
        assert np.count_nonzero(B.B[:, :-1]) == 8

    def test_free_support_keeps_density(self):
        for seed in range(10):
            B = gen_coefficients(5, 5, 0.5, seed, support="free")
            assert np.count_nonzero(B.B) == math.ceil(0.5 * 5 * 4)

    def test_bad_density(self):
        with pytest.raises(ValueError):
            gen_coefficients(3, 3, 0.0, 1)

    def test_deterministic(self):
        np.testing.assert_array_equal(gen_coefficients(4, 4, 0.5, 9).B, gen_coefficients(4, 4, 0.5, 9).B)


class TestNoise:
    def test_gaussian_mean(self):
        assert abs(gen_noise(1000, 1000, "E1", 1).mean()) <= 0.01

    def test_mixture_mean(self):
        assert abs(gen_noise(1000, 1000, "E3", 2).mean() - 0.2) <= 0.01

    def test_cauchy_median(self):
        assert abs(np.median(gen_noise(1000, 1000, "E2", 3))) <= 0.01

    def test_cauchy_quartiles(self):
        # standard Cauchy quartiles are -1 and +1
        q1, q3 = np.percentile(gen_noise(500, 1000, NoiseKind.E2, 4), [25, 75])
        assert q1 == pytest.approx(-1, abs=0.02) and q3 == pytest.approx(1, abs=0.02)


class TestScaleNoise:
    def test_direct_ratio(self):
        E = np.zeros((2, 2))
        E[0, 0] = 1.0
        S = np.zeros((2, 2))
        S[1, 1] = 10.0
        assert np.linalg.norm(scale_noise(E, S)) == pytest.approx(2.0)

    def test_fixed_point(self):
        E = np.array([[0.2, 0.0]])
        np.testing.assert_allclose(scale_noise(E, np.array([[1.0, 0.0]])), E, rtol=1e-15)

    def test_ratio_exact(self, rng):
        for _ in range(50):
            E = rng.standard_cauchy((30, 5))
            S = rng.standard_normal((30, 5)) * rng.uniform(0.01, 100)
            assert np.linalg.norm(scale_noise(E, S)) / np.linalg.norm(S) == pytest.approx(0.2, abs=1e-12)

    def test_zero_norm(self):
        with pytest.raises(ZeroNorm):
            scale_noise(np.zeros((2, 2)), np.ones((2, 2)))


class TestUtility:
    def test_values(self):
        M = np.array([[2.7, -0.3, 0.0]])
        np.testing.assert_array_equal(apply_utility(M, "U1"), M)
        assert apply_utility(np.array([0.0]), UtilityKind.U2)[0] == 0.5
        np.testing.assert_array_equal(apply_utility(M, "U3"), [[2.0, -1.0, 0.0]])

    def test_monotone(self, rng):
        x = np.sort(rng.standard_normal(200) * 5)
        for kind in UtilityKind:
            assert np.all(np.diff(apply_utility(x, kind)) >= 0)


class TestMetrics:
    def test_m1(self, rng):
        B = canonicalize(rng.standard_normal((3, 4)))
        assert metric_m1(B, B) == 0
        assert metric_m1(-B.B, B) == pytest.approx(4.0)
        A = rng.standard_normal((3, 4))
        ref = sum((A[i, j] - B.B[i, j]) ** 2 for i in range(3) for j in range(4))
        assert metric_m1(A, B) == pytest.approx(ref, rel=1e-13)
        assert metric_m1(A, B) == metric_m1(B, A)

    def test_m1_inner_product_identity(self, rng):
        for _ in range(10):
            A, B = canonicalize(rng.standard_normal((4, 4))), canonicalize(rng.standard_normal((4, 4)))
            assert metric_m1(A, B) == pytest.approx(2 - 2 * np.sum(A.B * B.B), abs=1e-12)

    def test_m2(self, rng):
        B = rng.standard_normal((3, 4))
        assert metric_m2(B, B) == pytest.approx(1.0)
        assert metric_m2(-(B - B.mean()), B - B.mean()) == pytest.approx(-1.0)
        assert metric_m2(2 * B + 3, B) == pytest.approx(1.0)
        A = rng.standard_normal((3, 4))
        assert metric_m2(A, B) == pytest.approx(np.corrcoef(A.ravel(), B.ravel())[0, 1], abs=1e-12)

    def test_m2_constant(self):
        with pytest.raises(ZeroVariance):
            metric_m2(np.ones((2, 2)), np.eye(2))

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            metric_m1(np.ones((2, 2)), np.ones((2, 3)))

    def test_selection(self):
        B_star = np.array([[1.0, 0.0], [-2.0, 0.0]])
        assert selection_metrics(B_star, B_star) == (1.0, 1.0)
        assert selection_metrics(np.zeros((2, 2)), B_star) == (0.0, 1.0)
        assert selection_metrics(-B_star, B_star) == (0.0, 1.0)

    def test_selection_not_applicable(self):
        dense = np.ones((2, 2))
        with pytest.raises(NotApplicable):
            specificity(dense, dense)
        with pytest.raises(NotApplicable):
            signed_sensitivity(dense, np.zeros((2, 2)))
        sens, spec = selection_metrics(dense, dense)
        assert sens == 1.0 and math.isnan(spec)


class TestExperiment:
    def test_dataset_deterministic(self):
        cfg = ExperimentConfig(fit=FitConfig(seed=4))
        a, b = generate_dataset(cfg, 16, 1), generate_dataset(cfg, 16, 1)
        np.testing.assert_array_equal(a.data.Y, b.data.Y)
        assert a.fit_seed == b.fit_seed
        c = generate_dataset(cfg, 16, 2)
        assert not np.array_equal(a.data.X, c.data.X)

    def test_noise_ratio_in_dataset(self):
        cfg = ExperimentConfig(utility="U1", fit=FitConfig(seed=1))
        d = generate_dataset(cfg, 64, 0)
        signal = d.data.X @ d.B_star.B
        assert np.linalg.norm(d.data.Y - signal) / np.linalg.norm(signal) == pytest.approx(0.2, abs=1e-12)

    def test_single_run_table(self):
        cfg = ExperimentConfig(runs=1, fit=FitConfig(seed=3, restarts=2))
        rows, runs = run_consistency_experiment(cfg, [32])
        direct = run_single(cfg, 32, 0)
        assert rows[0].median_m1 == direct.m1 and rows[0].median_m2 == direct.m2
        assert runs == [direct]

    def test_parallel_matches_serial(self):
        cfg = ExperimentConfig(runs=2, fit=FitConfig(seed=3, restarts=2))
        assert run_consistency_experiment(cfg, [16, 32]) == run_consistency_experiment(cfg, [16, 32], n_jobs=2)

    def test_m1_shrinks_with_n(self):
        cfg = ExperimentConfig(runs=5, fit=FitConfig(seed=8, restarts=3))
        rows, _ = run_consistency_experiment(cfg, [16, 512])
        assert rows[1].median_m1 < rows[0].median_m1

    def test_config_validation(self):
        with pytest.raises(ValueError):
            ExperimentConfig(noise="E9")
        with pytest.raises(ValueError):
            ExperimentConfig(density=1.5)
        with pytest.raises(ValueError):
            ExperimentConfig(support="diag")
