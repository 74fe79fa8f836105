"""Tests for the disentanglement metrics and shared statistical kernels."""
import math

import numpy as np
import pytest

from disentlab.errors import DegenerateEncoder
from disentlab.lingauss import OptimizerConfig, optimize_generator
from disentlab.linalg import SymMatrix
from disentlab.metrics import (
    Encoder,
    FactorDataset,
    FactorVaeConfig,
    FunctionEncoder,
    GeneratorSampler,
    LinearEncoder,
    MetricReport,
    PseudoNoiseEncoder,
    SyntheticFactorSampler,
    TransformedEncoder,
    dci_disentanglement,
    dhsic,
    factorvae_metric,
    inception_score,
    lasso_fit,
    metric_matrix_reduction,
    reverse_kl,
    spearman_rho,
)

# n=2 samples (0,0) and (1,1): every coordinate has one pair at distance 1,
# so each kernel matrix is [[1, 1/e], [1/e, 1]] and the three-term estimator
# evaluates to (1+e^-2)/2 + (1+e^-1)^2/4 - (1+e^-1)^2/2.
DHSIC_HAND = 0.09989410022343201

SMALL_CFG = FactorVaeConfig(groups_per_factor=40, group_size=25, reference_samples=2000, seed=0)


def _identity_sampler(k: int) -> SyntheticFactorSampler:
    return SyntheticFactorSampler(k=k)


class TestFactorDataset:
    def test_validation(self):
        with pytest.raises(ValueError):
            FactorDataset(np.zeros((3, 2)), np.zeros((4, 2)))
        with pytest.raises(ValueError):
            FactorDataset(np.zeros(3), np.zeros((3, 1)))
        with pytest.raises(ValueError):
            FactorDataset(np.zeros((3, 2)), np.zeros((3, 2)), (4,))

    def test_properties_and_default_cardinalities(self):
        ds = FactorDataset(np.zeros((5, 3)), np.zeros((5, 2)))
        assert (ds.n, ds.sample_dim, ds.n_factors) == (5, 3, 2)
        assert ds.factor_cardinalities == (0, 0)

    def test_save_load_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        ds = FactorDataset(rng.standard_normal((20, 4)), rng.standard_normal((20, 2)))
        ds.save(tmp_path)
        assert (tmp_path / "samples.csv").exists()
        assert (tmp_path / "factors.csv").exists()
        back = FactorDataset.load(tmp_path)
        assert np.array_equal(back.samples, ds.samples)
        assert np.array_equal(back.factors, ds.factors)


class TestEncoders:
    def test_linear_encoder(self):
        enc = LinearEncoder(np.array([[1.0, 0.0], [1.0, 1.0]]))
        assert enc.code_dim == 2
        out = enc.encode(np.array([[2.0, 3.0]]))
        assert np.array_equal(out, np.array([[2.0, 5.0]]))

    def test_from_generator_is_posterior_mean_map(self):
        sigma = SymMatrix(np.diag([4.0, 1.0]))
        gen, _ = optimize_generator(sigma, 1, OptimizerConfig(seed=3))
        enc = LinearEncoder.from_generator(gen)
        expected = gen.B.T @ np.linalg.inv(np.asarray(sigma))
        assert enc.weight == pytest.approx(expected, abs=1e-12)

    def test_function_encoder_checks_shape(self):
        enc = FunctionEncoder(lambda x: x[:, :1], dim=2)
        with pytest.raises(ValueError):
            enc.encode(np.zeros((3, 3)))

    def test_pseudo_noise_deterministic_and_seeded(self):
        x = np.random.default_rng(1).standard_normal((10, 3))
        enc = PseudoNoiseEncoder(dim=4, seed=7)
        a = enc.encode(x)
        b = enc.encode(x)
        assert np.array_equal(a, b)
        assert a.shape == (10, 4)
        assert np.all((a >= 0.0) & (a < 1.0))
        other = PseudoNoiseEncoder(dim=4, seed=8).encode(x)
        assert not np.array_equal(a, other)

    def test_pseudo_noise_dim_bounds(self):
        with pytest.raises(ValueError):
            PseudoNoiseEncoder(dim=9)

    def test_transformed_encoder(self):
        base = LinearEncoder(np.eye(3))
        enc = TransformedEncoder(base, permutation=(2, 0, 1), scales=(2.0, 1.0, 3.0))
        out = enc.encode(np.array([[1.0, 2.0, 3.0]]))
        assert np.array_equal(out, np.array([[6.0, 1.0, 6.0]]))

    def test_transformed_encoder_validation(self):
        base = LinearEncoder(np.eye(2))
        with pytest.raises(ValueError):
            TransformedEncoder(base, permutation=(0, 0), scales=(1.0, 1.0))
        with pytest.raises(ValueError):
            TransformedEncoder(base, permutation=(1, 0), scales=(1.0,))


class TestSamplers:
    def test_synthetic_group_fixes_exactly_one_factor(self):
        sampler = _identity_sampler(4)
        rng = np.random.default_rng(0)
        group = sampler.sample_group(2, 50, rng)
        assert group.shape == (50, 4)
        assert np.ptp(group[:, 2]) == 0.0
        for j in (0, 1, 3):
            assert np.ptp(group[:, j]) > 0.0

    def test_generator_sampler_moments(self):
        sigma = SymMatrix(np.diag([4.0, 1.0, 0.25]))
        gen, _ = optimize_generator(sigma, 2, OptimizerConfig(objective="cr_frobenius", seed=0))
        sampler = GeneratorSampler(gen)
        assert sampler.n_factors == 2
        rng = np.random.default_rng(5)
        x = sampler.sample_reference(60_000, rng)
        cov = x.T @ x / x.shape[0]
        assert cov == pytest.approx(np.asarray(sigma), abs=0.1)

    def test_generator_group_reduces_variance_along_fixed_code(self):
        sigma = SymMatrix(np.diag([9.0, 1.0]))
        gen, _ = optimize_generator(sigma, 1, OptimizerConfig(seed=0))
        sampler = GeneratorSampler(gen)
        enc = LinearEncoder.from_generator(gen)
        rng = np.random.default_rng(6)
        free = enc.encode(sampler.sample_reference(4000, rng)).var(axis=0)
        fixed = enc.encode(sampler.sample_group(0, 4000, rng)).var(axis=0)
        assert fixed[0] < 0.5 * free[0]


class TestFactorVaeMetric:
    def test_perfect_encoder_scores_one(self):
        report = factorvae_metric(_identity_sampler(3), LinearEncoder(np.eye(3)), SMALL_CFG)
        assert report.score == 1.0
        assert report.name == "factorvae"
        assert report.matrix.shape == (3, 3)
        assert report.matrix.sum() == 3 * SMALL_CFG.groups_per_factor
        assert dict(report.detail)["factor_0_accuracy"] == 1.0

    def test_scale_and_permutation_invariance(self):
        sampler = _identity_sampler(4)
        base = LinearEncoder(np.eye(4))
        rng = np.random.default_rng(2)
        for _ in range(5):
            perm = tuple(rng.permutation(4))
            scales = tuple(rng.uniform(0.1, 10.0, size=4))
            enc = TransformedEncoder(base, permutation=perm, scales=scales)
            assert factorvae_metric(sampler, enc, SMALL_CFG).score == 1.0

    def test_noise_encoder_near_chance(self):
        cfg = FactorVaeConfig(groups_per_factor=100, group_size=20, reference_samples=2000, seed=1)
        report = factorvae_metric(_identity_sampler(5), PseudoNoiseEncoder(dim=5, seed=0), cfg)
        assert report.score <= 0.3

    def test_constant_encoder_degenerate(self):
        enc = LinearEncoder(np.zeros((3, 3)))
        with pytest.raises(DegenerateEncoder):
            factorvae_metric(_identity_sampler(3), enc, SMALL_CFG)

    def test_too_few_codes(self):
        with pytest.raises(ValueError):
            factorvae_metric(_identity_sampler(3), LinearEncoder(np.eye(2, 3)), SMALL_CFG)

    def test_deterministic_per_seed(self):
        enc = PseudoNoiseEncoder(dim=3, seed=4)
        cfg = FactorVaeConfig(groups_per_factor=10, group_size=10, reference_samples=200, seed=9)
        a = factorvae_metric(_identity_sampler(3), enc, cfg)
        b = factorvae_metric(_identity_sampler(3), enc, cfg)
        assert a.score == b.score
        assert np.array_equal(a.matrix, b.matrix)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            FactorVaeConfig(groups_per_factor=0)
        with pytest.raises(ValueError):
            FactorVaeConfig(variance_floor=0.0)


class TestMetricMatrixReduction:
    def test_identity(self):
        assert metric_matrix_reduction(np.eye(3), normalized=False) == 3.0
        assert metric_matrix_reduction(np.eye(3)) == 1.0

    def test_hand_case(self):
        m = np.array([[0.9, 0.1], [0.2, 0.8], [0.5, 0.5]])
        assert metric_matrix_reduction(m, normalized=False) == pytest.approx(1.7, abs=1e-15)
        assert metric_matrix_reduction(m) == pytest.approx(0.85, abs=1e-15)

    def test_zero_matrix(self):
        assert metric_matrix_reduction(np.zeros((4, 2))) == 0.0

    def test_more_factors_than_codes(self):
        with pytest.raises(ValueError):
            metric_matrix_reduction(np.zeros((2, 3)))


class TestDci:
    def _dataset(self, rng, n=400, k_hat=3):
        factors = rng.standard_normal((n, k_hat))
        return FactorDataset(factors, factors)

    def test_identity_encoder_scores_one(self):
        ds = self._dataset(np.random.default_rng(0))
        report = dci_disentanglement(ds, LinearEncoder(np.eye(3)))
        assert report.score == 1.0
        assert all(v == 1.0 for _, v in report.detail)
        assert report.matrix.shape == (3, 3)

    def test_scaled_permuted_encoder_scores_one(self):
        ds = self._dataset(np.random.default_rng(1))
        enc = TransformedEncoder(LinearEncoder(np.eye(3)), (2, 0, 1), (3.0, 0.5, 4.0))
        assert dci_disentanglement(ds, enc).score == 1.0

    def test_mixing_code_near_zero(self):
        rng = np.random.default_rng(2)
        factors = rng.standard_normal((600, 2))
        ds = FactorDataset(factors, factors)
        enc = LinearEncoder(np.array([[0.5, 0.5]]))
        report = dci_disentanglement(ds, enc)
        assert report.score == pytest.approx(0.0, abs=0.05)

    def test_random_encoder_in_range(self):
        rng = np.random.default_rng(3)
        ds = self._dataset(rng)
        for _ in range(5):
            enc = LinearEncoder(rng.standard_normal((3, 3)))
            score = dci_disentanglement(ds, enc).score
            assert 0.0 <= score <= 1.0

    def test_dead_code_excluded_with_warning(self):
        rng = np.random.default_rng(4)
        factors = rng.standard_normal((300, 2))
        ds = FactorDataset(factors, factors)
        enc = LinearEncoder(np.array([[1.0, 0.0], [0.0, 0.0]]))
        with pytest.warns(UserWarning):
            report = dci_disentanglement(ds, enc)
        assert report.score == 1.0
        assert len(report.detail) == 1

    def test_all_dead_degenerate(self):
        rng = np.random.default_rng(5)
        factors = rng.standard_normal((300, 2))
        ds = FactorDataset(factors, factors)
        with pytest.raises(DegenerateEncoder):
            dci_disentanglement(ds, LinearEncoder(np.zeros((2, 2))))

    def test_sample_size_precondition(self):
        ds = FactorDataset(np.zeros((15, 2)), np.zeros((15, 2)))
        with pytest.raises(ValueError):
            dci_disentanglement(ds, LinearEncoder(np.eye(2)))

    def test_single_factor_rejected(self):
        ds = FactorDataset(np.zeros((50, 1)), np.zeros((50, 1)))
        with pytest.raises(ValueError):
            dci_disentanglement(ds, LinearEncoder(np.eye(1)))


class TestDhsic:
    def test_constant_samples_zero_with_warning(self):
        with pytest.warns(UserWarning):
            value = dhsic(np.ones((10, 3)))
        assert abs(value) <= 1e-12

    def test_hand_case(self):
        value = dhsic(np.array([[0.0, 0.0], [1.0, 1.0]]))
        assert value == pytest.approx(DHSIC_HAND, abs=1e-15)

    def test_nonnegative_up_to_roundoff(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n = int(rng.integers(2, 40))
            k = int(rng.integers(2, 5))
            assert dhsic(rng.standard_normal((n, k))) >= -1e-12

    def test_duplicated_coordinate_scores_higher(self):
        wins = 0
        for trial in range(10):
            rng = np.random.default_rng(trial)
            x = rng.standard_normal((400, 2))
            dup = np.column_stack([x[:, 0], x[:, 0]])
            if dhsic(dup) > dhsic(x):
                wins += 1
        assert wins >= 9

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            dhsic(np.ones((1, 3)))
        with pytest.raises(ValueError):
            dhsic(np.ones((5, 1)))


class TestInceptionScore:
    def test_uniform_rows(self):
        assert inception_score(np.full((7, 4), 0.25)) == pytest.approx(1.0, abs=1e-12)

    def test_one_hot_covering(self):
        assert inception_score(np.eye(5)) == pytest.approx(5.0, abs=1e-12)

    def test_collapsed_one_hot(self):
        p = np.zeros((6, 3))
        p[:, 1] = 1.0
        assert inception_score(p) == pytest.approx(1.0, abs=1e-12)

    def test_range(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            p = rng.uniform(0.0, 1.0, size=(10, 6))
            p /= p.sum(axis=1, keepdims=True)
            score = inception_score(p)
            assert 1.0 - 1e-12 <= score <= 6.0 + 1e-12

    def test_non_stochastic_rejected(self):
        with pytest.raises(ValueError):
            inception_score(np.array([[0.5, 0.6]]))
        with pytest.raises(ValueError):
            inception_score(np.array([[1.5, -0.5]]))


class TestReverseKl:
    def test_identical(self):
        assert reverse_kl([3.0, 3.0], [6.0, 6.0]) == pytest.approx(0.0, abs=1e-12)

    def test_missing_mode(self):
        value = reverse_kl([10.0, 0.0], [5.0, 5.0], smoothing=1e-9)
        assert value == pytest.approx(math.log(2.0), abs=1e-6)

    def test_asymmetry(self):
        a = reverse_kl([10.0, 0.0], [5.0, 5.0])
        b = reverse_kl([5.0, 5.0], [10.0, 0.0])
        assert a != b

    def test_validation(self):
        with pytest.raises(ValueError):
            reverse_kl([1.0, -1.0], [1.0, 1.0])
        with pytest.raises(ValueError):
            reverse_kl([0.0, 0.0], [1.0, 1.0])


class TestSpearman:
    def test_identical(self):
        assert spearman_rho([1.0, 5.0, 2.0], [1.0, 5.0, 2.0]) == 1.0

    def test_reversed(self):
        assert spearman_rho([1.0, 2.0, 3.0], [3.0, 2.0, 1.0]) == -1.0

    def test_hand_case(self):
        assert spearman_rho([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8, abs=1e-15)

    def test_monotone_invariance(self):
        rng = np.random.default_rng(0)
        a = rng.standard_normal(30)
        b = rng.standard_normal(30)
        base = spearman_rho(a, b)
        assert spearman_rho(np.exp(a), b) == pytest.approx(base, abs=1e-12)
        assert spearman_rho(a, b**3) == pytest.approx(base, abs=1e-12)

    def test_ties_use_average_ranks(self):
        # ranks of (1, 1, 2) are (1.5, 1.5, 3)
        assert spearman_rho([1.0, 1.0, 2.0], [1.0, 1.0, 2.0]) == 1.0
        value = spearman_rho([1.0, 1.0, 2.0], [2.0, 1.0, 1.5])
        assert -1.0 < value < 1.0

    def test_constant_input_nan(self):
        assert math.isnan(spearman_rho([1.0, 1.0, 1.0], [1.0, 2.0, 3.0]))

    def test_validation(self):
        with pytest.raises(ValueError):
            spearman_rho([1.0], [2.0])
        with pytest.raises(ValueError):
            spearman_rho([1.0, 2.0], [1.0, 2.0, 3.0])


class TestLassoFit:
    def test_zero_lambda_matches_least_squares(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((50, 4))
        w_true = np.array([1.0, -2.0, 0.5, 3.0])
        y = x @ w_true + 0.01 * rng.standard_normal(50)
        w = lasso_fit(x, y, 0.0)
        w_ls = np.linalg.solve(x.T @ x, x.T @ y)
        assert w == pytest.approx(w_ls, abs=1e-8)

    def test_large_lambda_kills_everything(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((30, 3))
        y = rng.standard_normal(30)
        lam = np.abs(x.T @ y).max() / 30
        # at exact equality the surviving coefficient is round-off sized
        assert np.abs(lasso_fit(x, y, lam)).max() <= 1e-14
        assert np.array_equal(lasso_fit(x, y, lam * (1 + 1e-12)), np.zeros(3))
        assert np.array_equal(lasso_fit(x, y, 2 * lam), np.zeros(3))

    def test_univariate_closed_form(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((40, 1))
        y = rng.standard_normal(40)
        lam = 0.05
        n = 40
        rho = float(x[:, 0] @ y) / n
        expected = math.copysign(max(abs(rho) - lam, 0.0), rho) / (float(x[:, 0] @ x[:, 0]) / n)
        assert lasso_fit(x, y, lam)[0] == pytest.approx(expected, abs=1e-14)

    def test_zero_column_gets_zero_weight(self):
        rng = np.random.default_rng(3)
        x = np.column_stack([rng.standard_normal(20), np.zeros(20)])
        w = lasso_fit(x, x[:, 0], 0.01)
        assert w[1] == 0.0
        col_sq = float(x[:, 0] @ x[:, 0]) / 20
        assert w[0] == pytest.approx(1.0 - 0.01 / col_sq, abs=1e-9)

    def test_validation(self):
        with pytest.raises(ValueError):
            lasso_fit(np.zeros((3, 2)), np.zeros(4), 0.1)
        with pytest.raises(ValueError):
            lasso_fit(np.zeros((3, 2)), np.zeros(3), -0.1)


class TestMetricReport:
    def test_csv_with_detail(self):
        report = MetricReport("demo", 0.5, (("a", 1.0), ("b", 0.25)))
        lines = report.to_csv().splitlines()
        assert lines[0] == "metric,score,detail_key,detail_value"
        assert lines[1] == "demo,0.5,a,1"
        assert lines[2] == "demo,0.5,b,0.25"

    def test_csv_without_detail(self):
        assert MetricReport("demo", 0.125).to_csv().splitlines()[1] == "demo,0.125,,"


class TestEncoderBase:
    def test_abstract_surface(self):
        enc = Encoder()
        with pytest.raises(NotImplementedError):
            enc.encode(np.zeros((1, 1)))
        with pytest.raises(NotImplementedError):
            enc.code_dim
