import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

import oracles
from active_mde.gp_core import (
    GpConfig,
    GpDataset,
    HeteroGpModel,
    HomGpModel,
    InsufficientDataError,
    KernelParams,
    NumericalError,
    _cholesky_with_jitter,
    build_hom_model,
    cv_noise_targets,
    empty_hom_model,
    fit_heteroscedastic,
    fit_homoscedastic,
    log_marginal_likelihood,
    lml_gradient,
    matern_gram,
    matern_kernel,
    predict_hetero,
    predict_hom,
    prior_hetero_model,
    subsample,
)

FAST = GpConfig(restarts=2, rounds=2, max_iter=30)


def random_model(rng, n, d, noise=None):
    x = rng.uniform(0, 1, size=(n, d))
    y = rng.normal(size=n)
    params = KernelParams(rng.uniform(0.2, 2.0), rng.uniform(0.1, 2.0, size=d))
    noise = rng.uniform(1e-3, 0.5) if noise is None else noise
    return build_hom_model(GpDataset(x, y), params, noise)


class TestKernel:
    def test_zero_distance_gives_signal_variance(self):
        p = KernelParams(2.0, [0.7, 1.3])
        assert matern_kernel([0.3, 0.4], [0.3, 0.4], p) == pytest.approx(2.0)

    def test_unit_distance_value(self):
        expected = (1 + math.sqrt(5) + 5 / 3) * math.exp(-math.sqrt(5))
        p = KernelParams(1.0, [1.0])
        assert matern_kernel([0.0], [1.0], p) == pytest.approx(expected, abs=1e-12)
        assert matern_kernel([0.0], [1.0], p) == pytest.approx(0.5240, abs=1e-4)

    def test_decays_monotonically(self):
        p = KernelParams(1.0, [1.0])
        vals = [matern_kernel([0.0], [r], p) for r in np.linspace(0, 20, 200)]
        assert np.all(np.diff(vals) <= 0)
        assert vals[-1] < 1e-15

    def test_dimension_mismatch(self):
        p = KernelParams(1.0, [1.0, 1.0])
        with pytest.raises(ValueError):
            matern_kernel([0.0], [1.0], p)

    @given(
        hnp.arrays(float, 3, elements=st.floats(-5, 5)),
        hnp.arrays(float, 3, elements=st.floats(-5, 5)),
        st.floats(0.01, 10),
    )
    def test_matches_oracle_and_symmetric(self, a, b, sf2):
        p = KernelParams(sf2, [0.5, 1.0, 2.0])
        k = matern_kernel(a, b, p)
        assert k == pytest.approx(oracles.matern52(a, b, sf2, [0.5, 1.0, 2.0]), rel=1e-9, abs=1e-300)
        assert k == pytest.approx(matern_kernel(b, a, p), rel=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_gram_is_psd(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.uniform(-2, 2, size=(20, 3))
        p = KernelParams(rng.uniform(0.1, 3), rng.uniform(0.05, 5, size=3))
        assert np.linalg.eigvalsh(matern_gram(x, x, p)).min() >= -1e-8

    @pytest.mark.parametrize("bad", [0.0, -1.0])
    def test_rejects_nonpositive_signal(self, bad):
        with pytest.raises(ValueError):
            KernelParams(bad, [1.0])

    def test_rejects_lengthscale_outside_bounds(self):
        with pytest.raises(ValueError):
            KernelParams(1.0, [10.0], (0.05, 5.0))


class TestDataset:
    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            GpDataset(np.zeros((3, 2)), np.zeros(4))

    def test_noise_must_be_positive(self):
        with pytest.raises(ValueError):
            GpDataset(np.zeros((2, 1)), np.zeros(2), np.array([1.0, 0.0]))

    def test_roundtrip(self):
        ds = GpDataset(np.arange(6.0).reshape(3, 2), [1.0, 2.0, 3.0], [0.1, 0.2, 0.3])
        back = GpDataset.from_dict(json.loads(json.dumps(ds.to_dict())))
        np.testing.assert_array_equal(back.inputs, ds.inputs)
        np.testing.assert_array_equal(back.per_point_noise_variance, ds.per_point_noise_variance)

    def test_empty_roundtrip_keeps_dim(self):
        ds = GpDataset(np.zeros((0, 4)), np.zeros(0))
        assert GpDataset.from_dict(ds.to_dict()).dim == 4


class TestHomPosterior:
    @pytest.mark.parametrize("n", [1, 2, 3, 5])
    def test_matches_explicit_inverse(self, n):
        rng = np.random.default_rng(n)
        m = random_model(rng, n, 2)
        xq = rng.uniform(-0.5, 1.5, size=(7, 2))
        mu, var = m.predict(xq)
        mu_o, var_o = oracles.posterior(
            m.dataset.inputs, m.dataset.targets, xq, m.params.signal_variance, m.params.lengthscales, m.noise_variance
        )
        np.testing.assert_allclose(mu, mu_o, atol=1e-8)
        np.testing.assert_allclose(var, var_o, atol=1e-8)

    def test_per_point_noise_matches_oracle(self):
        rng = np.random.default_rng(4)
        x = rng.uniform(size=(4, 1))
        noise = np.array([0.1, 0.01, 0.5, 0.2])
        p = KernelParams(1.3, [0.4])
        m = build_hom_model(GpDataset(x, rng.normal(size=4), noise), p, 1.0)
        xq = np.linspace(0, 1, 5)[:, None]
        mu_o, var_o = oracles.posterior(x, m.dataset.targets, xq, 1.3, [0.4], noise)
        mu, var = m.predict(xq)
        np.testing.assert_allclose(mu, mu_o, atol=1e-10)
        np.testing.assert_allclose(var, var_o, atol=1e-10)

    def test_empty_model_returns_prior(self):
        m = empty_hom_model(3)
        mu, var = predict_hom(m, [0.1, 0.2, 0.3])
        assert (mu, var) == (0.0, m.params.signal_variance)

    def test_interpolates_with_tiny_noise(self):
        x = np.array([[0.1], [0.5], [0.9]])
        y = np.array([0.3, -0.2, 0.7])
        m = build_hom_model(GpDataset(x, y), KernelParams(1.0, [0.3]), 1e-8)
        mu, _ = m.predict(x)
        np.testing.assert_allclose(mu, y, atol=1e-3)

    def test_cholesky_reconstructs_covariance(self):
        m = random_model(np.random.default_rng(0), 30, 3)
        cov = matern_gram(m.dataset.inputs, m.dataset.inputs, m.params) + m.noise_variance * np.eye(30)
        recon = m.chol @ m.chol.T
        assert np.linalg.norm(recon - cov) / np.linalg.norm(cov) < 1e-8

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 8))
    def test_variance_shrinks_when_point_added(self, seed, n):
        rng = np.random.default_rng(seed)
        m = random_model(rng, n, 2)
        x_new = rng.uniform(0, 1, size=(1, 2))
        ds = GpDataset(np.vstack([m.dataset.inputs, x_new]), np.append(m.dataset.targets, 0.0))
        bigger = build_hom_model(ds, m.params, m.noise_variance)
        assert bigger.predict(x_new)[1][0] <= m.predict(x_new)[1][0] + 1e-10

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_variance_nonnegative(self, seed):
        rng = np.random.default_rng(seed)
        m = random_model(rng, 6, 2, noise=1e-6)
        _, var = m.predict(rng.uniform(-1, 2, size=(50, 2)))
        assert np.all(var >= 0)

    def test_query_dimension_mismatch(self):
        m = random_model(np.random.default_rng(1), 3, 2)
        with pytest.raises(ValueError):
            m.predict(np.zeros((1, 3)))

    def test_serialization_roundtrip(self):
        m = random_model(np.random.default_rng(2), 5, 2)
        back = HomGpModel.from_dict(json.loads(json.dumps(m.to_dict())))
        xq = np.random.default_rng(3).uniform(size=(4, 2))
        np.testing.assert_array_equal(back.predict(xq)[0], m.predict(xq)[0])


class TestLml:
    def test_single_zero_target(self):
        ds = GpDataset(np.zeros((1, 1)), [0.0])
        m = build_hom_model(ds, KernelParams(0.5, [1.0]), 0.5)
        assert log_marginal_likelihood(m) == pytest.approx(-0.5 * math.log(2 * math.pi))
        assert log_marginal_likelihood(m) == pytest.approx(-0.9189, abs=1e-4)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_mvn_density(self, seed):
        m = random_model(np.random.default_rng(seed), 2 + seed, 2)
        ref = oracles.log_marginal(
            m.dataset.inputs, m.dataset.targets, m.params.signal_variance, m.params.lengthscales, m.noise_variance
        )
        assert log_marginal_likelihood(m) == pytest.approx(ref, rel=1e-10)

    @pytest.mark.parametrize("seed", range(5))
    def test_gradient_matches_finite_difference(self, seed):
        rng = np.random.default_rng(100 + seed)
        m = random_model(rng, 10, 3)
        lml, grad = lml_gradient(m)
        assert lml == pytest.approx(log_marginal_likelihood(m), rel=1e-12)

        def f(theta):
            p = KernelParams(math.exp(theta[0]), np.exp(theta[1:4]), (1e-3, 1e3))
            return log_marginal_likelihood(build_hom_model(m.dataset, p, math.exp(theta[4])))

        theta = np.log([m.params.signal_variance, *m.params.lengthscales, m.noise_variance])
        fd = oracles.central_difference(f, theta)
        np.testing.assert_allclose(grad, fd, rtol=1e-4, atol=1e-7)

    def test_gradient_drops_noise_entry_with_fixed_noise(self):
        rng = np.random.default_rng(7)
        ds = GpDataset(rng.uniform(size=(6, 2)), rng.normal(size=6), np.full(6, 0.1))
        m = build_hom_model(ds, KernelParams(1.0, [0.5, 0.5]), 0.1)
        assert lml_gradient(m)[1].shape == (3,)

    def test_smooth_in_noise(self):
        m = random_model(np.random.default_rng(9), 8, 1)
        def f(s):
            return log_marginal_likelihood(build_hom_model(m.dataset, m.params, s))

        steps = [abs(f(0.05 + h) - f(0.05)) for h in (1e-3, 1e-4, 1e-5)]
        assert steps[0] > 0
        assert steps[1] / steps[0] == pytest.approx(0.1, rel=0.05)
        assert steps[2] / steps[1] == pytest.approx(0.1, rel=0.05)


class TestJitter:
    def test_recovers_from_singular_matrix(self):
        cov = np.ones((3, 3))
        chol, jitter = _cholesky_with_jitter(cov)
        assert jitter > 0
        np.testing.assert_allclose(chol @ chol.T, cov + jitter * np.eye(3), atol=1e-12)

    def test_raises_on_indefinite(self):
        with pytest.raises(NumericalError):
            _cholesky_with_jitter(np.diag([1.0, -1.0]))


class TestFitHomoscedastic:
    def test_needs_two_points(self):
        with pytest.raises(InsufficientDataError):
            fit_homoscedastic(GpDataset(np.zeros((1, 1)), [0.0]))

    def test_deterministic(self):
        rng = np.random.default_rng(0)
        ds = GpDataset(rng.uniform(size=(30, 2)), rng.normal(size=30))
        a = fit_homoscedastic(ds, rng=5, config=FAST)
        b = fit_homoscedastic(ds, rng=5, config=FAST)
        np.testing.assert_array_equal(a.params.lengthscales, b.params.lengthscales)
        assert a.noise_variance == b.noise_variance

    def test_lengthscales_within_bounds(self):
        rng = np.random.default_rng(1)
        ds = GpDataset(rng.uniform(size=(25, 3)), rng.normal(size=25))
        cfg = GpConfig(restarts=3, rounds=2, lengthscale_bounds=(0.2, 0.8))
        m = fit_homoscedastic(ds, config=cfg, rng=0)
        assert np.all(m.params.lengthscales >= 0.2) and np.all(m.params.lengthscales <= 0.8)

    def test_improves_on_initial_guess(self):
        rng = np.random.default_rng(2)
        x = rng.uniform(size=(40, 1))
        ds = GpDataset(x, np.sin(6 * x[:, 0]) + 0.05 * rng.normal(size=40))
        start = build_hom_model(ds, KernelParams(1.0, [1.0]), 0.1)
        fit = fit_homoscedastic(ds, rng=0, config=FAST)
        assert log_marginal_likelihood(fit) > log_marginal_likelihood(start)

    def test_constant_targets_recovered(self):
        x = np.linspace(0, 1, 40)[:, None]
        ds = GpDataset(x, np.full(40, 0.7))
        m = fit_homoscedastic(ds, rng=0, config=FAST)
        mu, _ = m.predict(np.linspace(0.05, 0.95, 9)[:, None])
        np.testing.assert_allclose(mu, 0.7, atol=1e-3)

    @pytest.mark.slow
    def test_lengthscale_recovery(self):
        hits = 0
        for seed in range(10):
            rng = np.random.default_rng(seed)
            x = rng.uniform(0, 3, size=(200, 1))
            k = oracles.gram(x, x, 1.0, [0.5]) + 1e-2 * np.eye(200)
            y = np.linalg.cholesky(k) @ rng.standard_normal(200)
            m = fit_homoscedastic(GpDataset(x, y), rng=seed)
            hits += 0.25 <= m.params.lengthscales[0] <= 1.0
        assert hits >= 8


class TestHeteroscedastic:
    def test_prior_prediction(self):
        cfg = GpConfig()
        m = prior_hetero_model(2, cfg)
        mu, sigma = predict_hetero(m, [0.3, 0.3])
        assert mu == 0.0
        assert sigma == pytest.approx(math.sqrt(cfg.prior_signal_variance + cfg.prior_noise_variance))

    def test_needs_four_points(self):
        with pytest.raises(InsufficientDataError):
            fit_heteroscedastic(GpDataset(np.zeros((3, 1)), np.zeros(3)))

    def test_minimal_dataset(self):
        ds = GpDataset(np.array([[0.0], [0.3], [0.6], [0.9]]), [0.1, 0.0, 0.2, 0.05])
        m = fit_heteroscedastic(ds, rounds=2, rng=0, config=FAST)
        _, sigma = m.predict(np.linspace(-1, 2, 30)[:, None])
        assert np.all(sigma > 0)

    def test_cv_targets_floor_on_smooth_data(self):
        x = np.linspace(0, 1, 30)[:, None]
        ds = GpDataset(x, 0.5 * x[:, 0])
        cfg = GpConfig(noise_variance_bounds=(1e-8, 1.0))
        z = cv_noise_targets(ds, 5, rng=0, config=cfg)
        assert np.median(z) < math.log(1e-4)

    def test_cv_leave_one_out(self):
        rng = np.random.default_rng(0)
        ds = GpDataset(rng.uniform(size=(10, 1)), rng.normal(size=10))
        z = cv_noise_targets(ds, folds=10, rng=0, config=FAST)
        assert z.shape == (10,) and np.all(np.isfinite(z))

    def test_cv_rejects_too_many_folds(self):
        with pytest.raises(ValueError):
            cv_noise_targets(GpDataset(np.zeros((3, 1)), np.zeros(3)), folds=5)

    def test_step_noise_ratio(self):
        x, y = oracles.step_noise_data(0, n=150)
        m = fit_heteroscedastic(GpDataset(x, y), rng=0, config=FAST)
        left = m.noise_variance(np.linspace(0.05, 0.4, 10)[:, None]).mean()
        right = m.noise_variance(np.linspace(0.6, 0.95, 10)[:, None]).mean()
        assert left / right >= 10
        _, s_left = m.predict(np.linspace(0.05, 0.4, 10)[:, None])
        _, s_right = m.predict(np.linspace(0.6, 0.95, 10)[:, None])
        assert s_left.min() > s_right.max()

    def test_homoscedastic_data_gives_flat_noise(self):
        rng = np.random.default_rng(3)
        x = rng.uniform(size=(120, 1))
        y = np.sin(2 * np.pi * x[:, 0]) + 0.1 * rng.normal(size=120)
        m = fit_heteroscedastic(GpDataset(x, y), rng=0, config=FAST)
        nv = m.noise_variance(np.linspace(0.05, 0.95, 20)[:, None])
        assert nv.max() / nv.min() < 5

    def test_sigma_grows_away_from_data(self):
        rng = np.random.default_rng(4)
        x = rng.uniform(0, 0.5, size=(40, 1))
        y = 0.2 * x[:, 0] + 0.01 * rng.normal(size=40)
        m = fit_heteroscedastic(GpDataset(x, y), rng=0, config=FAST)
        _, s_in = m.predict(np.array([[0.25]]))
        _, s_far = m.predict(np.array([[3.0]]))
        assert s_far[0] >= s_in[0]

    def test_deterministic_and_serializable(self):
        x, y = oracles.step_noise_data(1, n=40)
        a = fit_heteroscedastic(GpDataset(x, y), rounds=2, rng=3, config=FAST)
        b = fit_heteroscedastic(GpDataset(x, y), rounds=2, rng=3, config=FAST)
        assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())
        back = HeteroGpModel.from_dict(json.loads(json.dumps(a.to_dict())))
        q = np.linspace(0, 1, 7)[:, None]
        np.testing.assert_allclose(back.predict(q)[1], a.predict(q)[1], rtol=1e-12)


class TestSubsample:
    def test_noop_below_cap(self):
        ds = GpDataset(np.zeros((100, 1)), np.arange(100.0))
        assert subsample(ds, 300, 0) is ds

    def test_cap_and_membership(self):
        ds = GpDataset(np.arange(1000.0)[:, None], np.arange(1000.0))
        sub = subsample(ds, 300, 0)
        assert sub.n == 300
        assert len(set(sub.targets)) == 300
        assert set(sub.targets) <= set(ds.targets)

    def test_deterministic(self):
        ds = GpDataset(np.arange(500.0)[:, None], np.arange(500.0))
        np.testing.assert_array_equal(subsample(ds, 50, 9).targets, subsample(ds, 50, 9).targets)

    def test_rejects_zero_cap(self):
        with pytest.raises(ValueError):
            subsample(GpDataset(np.zeros((2, 1)), np.zeros(2)), 0)
