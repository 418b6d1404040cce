import csv

import numpy as np
import pytest

from ngw.errors import ContractViolation, DegenerateMetric
from ngw.gaussian import optimal_map, sample_gaussian_spec, sample_points
from ngw.metrics import (
    MetricReport,
    append_report,
    bw2,
    bw_uvp,
    empirical_const,
    empirical_innergw,
    energy_distance,
    energy_test_pvalue,
    gaussian_fit,
    topk_accuracy,
)

identity = lambda X: X  # noqa: E731
zero_map = lambda X: np.zeros_like(X)  # noqa: E731


class TestEmpiricalInnerGW:
    def test_identity_map_zero(self):
        X = np.random.default_rng(0).standard_normal((64, 3))
        assert empirical_innergw(identity, X) == 0.0

    def test_zero_map_matches_trace_identity(self):
        # E <x, x'>^2 = tr(Sigma^2) = 2 for N(0, I_2)
        X = np.random.default_rng(1).standard_normal((2**14, 2))
        assert empirical_innergw(zero_map, X) == pytest.approx(2.0, rel=0.05)

    def test_permutation_invariant(self):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((50, 4))
        M = rng.standard_normal((3, 4))
        T = lambda pts: pts @ M.T  # noqa: E731
        base = empirical_innergw(T, X)
        shuffled = empirical_innergw(T, X[rng.permutation(50)])
        assert shuffled == pytest.approx(base, rel=1e-12)

    def test_split_half_and_full_agree_statistically(self):
        rng = np.random.default_rng(3)
        M = rng.standard_normal((2, 6)) * 0.4
        T = lambda pts: pts @ M.T  # noqa: E731
        small = empirical_innergw(T, rng.standard_normal((4096, 6)))
        big = empirical_innergw(T, rng.standard_normal((8192, 6)))
        assert big == pytest.approx(small, rel=0.1)

    def test_rejects_single_sample(self):
        with pytest.raises(ContractViolation):
            empirical_innergw(identity, np.ones((1, 2)))

    def test_analytic_map_consistency(self):
        mu = sample_gaussian_spec(16, seed=0)
        nu = sample_gaussian_spec(4, seed=1)
        M = optimal_map(mu, nu)
        X = sample_points(mu, 2**14, seed=2)
        from ngw.gaussian import innergw_closed_form

        assert empirical_innergw(lambda p: p @ M.T, X) == pytest.approx(
            innergw_closed_form(mu, nu), rel=0.05)


class TestEmpiricalConst:
    def test_zero_points(self):
        X = np.zeros((10, 2))
        assert empirical_const(X, X) == 0.0

    def test_gaussian_trace_identity(self):
        rng = np.random.default_rng(5)
        X = rng.standard_normal((2**14, 2))
        Y = rng.standard_normal((2**14, 3))
        assert empirical_const(X, Y) == pytest.approx(5.0, rel=0.05)

    def test_expansion_consistency_with_closed_form(self):
        from ngw.gaussian import innergw_closed_form

        mu = sample_gaussian_spec(8, seed=3)
        nu = sample_gaussian_spec(3, seed=4)
        X = sample_points(mu, 2**14, seed=5)
        Y = sample_points(nu, 2**14, seed=6)
        max_term = float(np.sum(mu.eigenvalues[:3] * nu.eigenvalues))
        est = empirical_const(X, Y) - 2.0 * max_term
        assert est == pytest.approx(innergw_closed_form(mu, nu), rel=0.05)

    def test_rejects_undersized(self):
        with pytest.raises(ContractViolation):
            empirical_const(np.ones((1, 2)), np.ones((5, 2)))


class TestBW2:
    def test_identical_gaussians_zero(self):
        spec = sample_gaussian_spec(4, seed=7)
        cov = spec.covariance()
        mean = np.zeros(4)
        assert abs(bw2(mean, cov, mean, cov)) <= 1e-8

    def test_one_dimensional_closed_form(self):
        # (sigma1 - sigma2)^2 = (1 - 2)^2 = 1
        assert bw2([0.0], [[1.0]], [0.0], [[4.0]]) == pytest.approx(1.0)

    def test_mean_translation(self):
        cov = np.eye(2)
        assert bw2([0.0, 0.0], cov, [3.0, 0.0], cov) == pytest.approx(9.0)

    def test_symmetry(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            d = int(rng.integers(1, 6))
            B1 = rng.standard_normal((d, d))
            B2 = rng.standard_normal((d, d))
            c1, c2 = B1 @ B1.T, B2 @ B2.T
            m1, m2 = rng.standard_normal(d), rng.standard_normal(d)
            assert bw2(m1, c1, m2, c2) == pytest.approx(
                bw2(m2, c2, m1, c1), abs=1e-6)

    def test_dimension_mismatch(self):
        with pytest.raises(ContractViolation):
            bw2([0.0], np.eye(1), [0.0, 0.0], np.eye(2))


class TestBWUVP:
    def test_exact_map_near_zero(self):
        mu = sample_gaussian_spec(16, seed=9)
        nu = sample_gaussian_spec(4, seed=10)
        M = optimal_map(mu, nu)
        X = sample_points(mu, 100_000, seed=11)
        Y = sample_points(nu, 100_000, seed=12)
        assert bw_uvp(lambda p: p @ M.T, X, Y) <= 0.1

    def test_zero_map_is_two_hundred_percent(self):
        nu = sample_gaussian_spec(3, seed=13)
        X = sample_points(nu, 50_000, seed=14)
        Y = sample_points(nu, 50_000, seed=15)
        assert bw_uvp(zero_map, X, Y) == pytest.approx(200.0, rel=0.02)

    def test_zero_target_variance_degenerate(self):
        X = np.random.default_rng(0).standard_normal((10, 2))
        with pytest.raises(DegenerateMetric):
            bw_uvp(identity, X, np.zeros((10, 2)))


class TestGaussianFit:
    def test_normalization_is_one_over_k(self):
        X = np.array([[0.0], [2.0]])
        mean, cov = gaussian_fit(X)
        assert mean[0] == 1.0
        assert cov[0, 0] == 1.0  # biased normalization: ((1)^2 + (1)^2) / 2


class TestTopKAccuracy:
    def test_identity_retrieval(self):
        V = np.random.default_rng(16).standard_normal((20, 5))
        lex = [(i, {i}) for i in range(20)]
        assert topk_accuracy(V, V, lex, k=1) == 1.0

    def test_orthogonal_fixture(self):
        targets = np.eye(4)
        mapped = np.eye(4)[[2, 0], :]
        lex = [(0, {2}), (1, {0})]
        assert topk_accuracy(mapped, targets, lex, k=1) == 1.0

    def test_chance_level(self):
        hits = []
        for seed in range(10):
            rng = np.random.default_rng(seed)
            mapped = rng.standard_normal((1000, 8))
            targets = rng.standard_normal((1000, 8))
            lex = [(i, {i}) for i in range(1000)]
            hits.append(topk_accuracy(mapped, targets, lex, k=1))
        mean = float(np.mean(hits))
        assert 0.0002 <= mean <= 0.0025  # 3-sigma band around 1/1000

    def test_scale_invariance(self):
        rng = np.random.default_rng(17)
        mapped = rng.standard_normal((50, 6))
        targets = rng.standard_normal((80, 6))
        lex = [(i, {i % 80}) for i in range(50)]
        a = topk_accuracy(mapped, targets, lex, k=5)
        b = topk_accuracy(3.7 * mapped, targets, lex, k=5)
        assert a == b

    def test_tie_break_prefers_lower_index(self):
        targets = np.vstack([np.eye(2), np.eye(2)])  # rows 0/2 and 1/3 tie
        mapped = np.eye(2)
        assert topk_accuracy(mapped, targets, [(0, {0})], k=1) == 1.0
        assert topk_accuracy(mapped, targets, [(0, {2})], k=1) == 0.0

    def test_empty_lexicon_rejected(self):
        with pytest.raises(ContractViolation):
            topk_accuracy(np.eye(2), np.eye(2), [], k=1)

    def test_out_of_range_query(self):
        with pytest.raises(ContractViolation):
            topk_accuracy(np.eye(2), np.eye(2), [(5, {0})], k=1)


class TestEnergyDistance:
    def test_same_distribution_accepts(self):
        rng = np.random.default_rng(18)
        X = rng.standard_normal((256, 2))
        Y = rng.standard_normal((256, 2))
        assert energy_test_pvalue(X, Y, n_permutations=199, seed=0) > 0.05

    def test_shifted_distribution_rejects(self):
        rng = np.random.default_rng(19)
        X = rng.standard_normal((256, 2))
        Y = rng.standard_normal((256, 2)) + 1.5
        assert energy_test_pvalue(X, Y, n_permutations=199, seed=0) <= 0.05

    def test_statistic_nonnegative_for_disjoint(self):
        X = np.zeros((8, 1))
        Y = np.ones((8, 1))
        assert energy_distance(X, Y) > 0.0


class TestReporting:
    def test_report_validation(self):
        with pytest.raises(ContractViolation):
            MetricReport("foo", float("nan"), 10, 0)

    def test_ledger_append(self, tmp_path):
        path = tmp_path / "ledger.csv"
        append_report(path, "run-1", MetricReport("innergw", 1.25, 100, 7))
        append_report(path, "run-2", MetricReport("bw_uvp", 0.5, 200, 8))
        with open(path) as fh:
            rows = list(csv.DictReader(fh))
        assert rows[0]["run_id"] == "run-1"
        assert float(rows[0]["value"]) == 1.25
        assert rows[1]["metric"] == "bw_uvp"
        assert rows[1]["samples"] == "200"
