"""Uncertainty mechanisms: KLD, reparameterized sampling, MC dropout, scores."""

import numpy as np
import pytest

from uqnet.layers import build_model, mlp_spec
from uqnet.tensor import Tensor, check_gradient
from uqnet.uncertainty import (
    PosteriorSamples,
    VariationalOutput,
    kld,
    kld_from_logvar,
    mc_predict,
    mc_probs,
    noise_draw,
    np_softmax,
    predictive_entropy,
    reparameterized_samples,
    uncertainty_score,
    variational_forward,
)


def mc_kl_estimate(mu, sigma2, n_draws, seed):
    """Monte Carlo estimate of KL(N(mu, diag s2) || N(0, I)) — independent oracle."""
    mu = np.asarray(mu, dtype=np.float64)
    sigma2 = np.asarray(sigma2, dtype=np.float64)
    rng = np.random.default_rng(seed)
    x = mu + np.sqrt(sigma2) * rng.standard_normal((n_draws, mu.size))
    log_q = -0.5 * (((x - mu) ** 2) / sigma2 + np.log(2.0 * np.pi * sigma2)).sum(axis=1)
    log_p = -0.5 * (x ** 2 + np.log(2.0 * np.pi)).sum(axis=1)
    return float((log_q - log_p).mean())


class TestKld:
    def test_zero_at_standard_normal(self):
        assert kld(np.zeros(4), np.ones(4)) == 0.0

    def test_shifted_mean_value(self):
        # -1/2 [(1+0-1-1) + (1+0-0-1)] = 0.5, cross-checked by the MC oracle
        assert abs(kld([1.0, 0.0], [1.0, 1.0]) - 0.5) < 1e-12
        assert abs(mc_kl_estimate([1.0, 0.0], [1.0, 1.0], 10 ** 6, 0) - 0.5) < 1e-2

    def test_inflated_variance_value(self):
        expected = 0.5 * (4.0 - 1.0 - np.log(4.0))
        assert abs(kld([0.0], [4.0]) - expected) < 1e-12
        assert abs(mc_kl_estimate([0.0], [4.0], 10 ** 6, 1) - expected) < 1e-2

    def test_nonnegative_with_equality_only_at_origin(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            c = int(rng.integers(1, 6))
            mu = rng.normal(0, 2, size=c)
            s2 = rng.uniform(0.05, 5.0, size=c)
            assert kld(mu, s2) >= 0.0
        # any perturbation away from (0, 1) is strictly positive
        assert kld([0.01], [1.0]) > 0.0
        assert kld([0.0], [1.01]) > 0.0
        assert kld([0.0], [0.99]) > 0.0

    def test_rejects_nonpositive_sigma2(self):
        with pytest.raises(ValueError, match="positive"):
            kld([0.0], [0.0])
        with pytest.raises(ValueError, match="positive"):
            kld(Tensor([0.0]), Tensor([-1.0]))

    def test_gradient_wrt_mu(self):
        s2 = Tensor(np.array([0.5, 1.5, 2.0]))
        err = check_gradient(lambda m: kld(m, s2), np.array([0.3, -1.0, 0.7]))
        assert err < 1e-4

    def test_gradient_wrt_sigma2(self):
        mu = Tensor(np.array([0.3, -1.0, 0.7]))
        err = check_gradient(lambda s: kld(mu, s), np.array([0.5, 1.5, 2.0]))
        assert err < 1e-4

    def test_tensor_and_array_paths_agree(self):
        rng = np.random.default_rng(3)
        mu = rng.normal(size=5)
        s2 = rng.uniform(0.2, 3.0, size=5)
        assert abs(float(kld(Tensor(mu), Tensor(s2))) - kld(mu, s2)) < 1e-12

    def test_batch_logvar_form_matches_pointwise(self):
        rng = np.random.default_rng(4)
        mu = rng.normal(size=(3, 4))
        logvar = rng.normal(size=(3, 4))
        batch = float(kld_from_logvar(Tensor(mu), Tensor(logvar)))
        pointwise = np.mean([kld(mu[i], np.exp(logvar[i])) for i in range(3)])
        assert abs(batch - pointwise) < 1e-12


class TestReparameterization:
    def test_zero_eps_returns_mu(self):
        mu = np.array([1.0, -2.0, 0.5, 3.0])
        s2 = np.array([0.04, 0.25, 1.0, 4.0])
        out = reparameterized_samples(mu, s2, 1, seed=0, eps=np.zeros((1, 4)))
        np.testing.assert_array_equal(out, mu[None, :])

    def test_sampling_statistics(self):
        # Gaussian sampling-statistics oracle at S = 10^4
        mu = np.array([1.0, 0.0, 0.0, 0.0])
        s2 = np.array([0.04, 0.09, 0.25, 1.0])
        S = 10_000
        draws = reparameterized_samples(mu, s2, S, seed=5)
        bound = 3.0 * np.sqrt(s2) / np.sqrt(S)
        assert np.all(np.abs(draws.mean(axis=0) - mu) < bound)
        var = draws.var(axis=0, ddof=1)
        assert np.all(np.abs(var - s2) < 0.10 * s2)

    def test_third_moment_is_normal(self):
        mu = np.zeros(4)
        s2 = np.full(4, 2.0)
        draws = reparameterized_samples(mu, s2, 10 ** 5, seed=6)
        z = (draws - mu) / np.sqrt(s2)
        skew = (z ** 3).mean(axis=0)
        assert np.all(np.abs(skew) < 0.1)

    def test_draws_are_deterministic(self):
        a = reparameterized_samples(np.zeros(3), np.ones(3), 50, seed=7)
        b = reparameterized_samples(np.zeros(3), np.ones(3), 50, seed=7)
        np.testing.assert_array_equal(a, b)
        assert noise_draw(7, 3, 3).epsilon.shape == (3,)
        np.testing.assert_array_equal(noise_draw(7, 3, 3).epsilon, noise_draw(7, 3, 3).epsilon)


class TestVariationalForward:
    def setup_method(self):
        self.spec = mlp_spec(2, variant="variational")
        self.params = build_model(self.spec, 0)
        self.x = np.array([0.4, -1.2])

    def test_sigma2_strictly_positive(self):
        out = variational_forward(self.params, self.spec, self.x)
        assert np.all(out.sigma2 > 0)

    def test_forced_zero_eps_equals_mu(self):
        out = variational_forward(self.params, self.spec, self.x, S=1, eps=np.zeros((1, 4)))
        np.testing.assert_array_equal(out.samples[0], out.mu)

    def test_frozen_rng_is_deterministic(self):
        a = variational_forward(self.params, self.spec, self.x, S=20, seed=9)
        b = variational_forward(self.params, self.spec, self.x, S=20, seed=9)
        np.testing.assert_array_equal(a.samples, b.samples)

    def test_rejects_non_variational_spec(self):
        spec = mlp_spec(2, variant="baseline")
        params = build_model(spec, 0)
        with pytest.raises(ValueError, match="variational"):
            variational_forward(params, spec, self.x)

    def test_sample_statistics_match_heads(self):
        out = variational_forward(self.params, self.spec, self.x, S=10_000, seed=10)
        bound = 3.0 * np.sqrt(out.sigma2) / np.sqrt(10_000)
        assert np.all(np.abs(out.samples.mean(axis=0) - out.mu) < bound)


class TestMcPredict:
    def test_zero_rate_has_zero_variance(self):
        spec = mlp_spec(2, variant="bayesian1", p=0.0)
        params = build_model(spec, 1)
        post = mc_predict(params, spec, np.array([1.0, 2.0]), T=16, seed=0)
        np.testing.assert_array_equal(post.variance, np.zeros(4))
        assert np.all(post.samples == post.samples[0])

    def test_deterministic_given_seed(self):
        spec = mlp_spec(2, variant="bayesian1")
        params = build_model(spec, 1)
        a = mc_predict(params, spec, np.array([1.0, 2.0]), T=32, seed=4)
        b = mc_predict(params, spec, np.array([1.0, 2.0]), T=32, seed=4)
        np.testing.assert_array_equal(a.samples, b.samples)

    def test_parallel_equals_sequential(self):
        spec = mlp_spec(2, variant="bayesian2")
        params = build_model(spec, 2)
        x = np.random.default_rng(0).normal(size=(5, 2))
        seq = mc_probs(params, spec, x, T=24, seed=3, workers=1)
        par = mc_probs(params, spec, x, T=24, seed=3, workers=4)
        np.testing.assert_array_equal(seq, par)

    def test_mean_converges_to_large_T_reference(self):
        spec = mlp_spec(2, variant="bayesian1")
        params = build_model(spec, 3)
        x = np.array([0.5, -0.5])
        small = mc_predict(params, spec, x, T=100, seed=11)
        big = mc_predict(params, spec, x, T=10_000, seed=12)
        assert np.abs(small.mean - big.mean).max() < 0.05

    def test_argmax_invariant_to_sample_order(self):
        spec = mlp_spec(2, variant="bayesian2")
        params = build_model(spec, 4)
        post = mc_predict(params, spec, np.array([0.3, 0.9]), T=40, seed=5)
        perm = np.random.default_rng(0).permutation(40)
        shuffled = PosteriorSamples(post.samples[perm], post.samples[perm].mean(axis=0),
                                    post.samples[perm].var(axis=0, ddof=1), 40)
        assert shuffled.predicted_label == post.predicted_label

    def test_validation(self):
        spec = mlp_spec(2, variant="bayesian1")
        params = build_model(spec, 1)
        with pytest.raises(ValueError, match="T must be >= 2"):
            mc_predict(params, spec, np.zeros(2), T=1, seed=0)
        base = mlp_spec(2, variant="baseline")
        with pytest.raises(ValueError, match="bayesian"):
            mc_predict(build_model(base, 0), base, np.zeros(2), T=8, seed=0)


class TestScores:
    def test_zero_variance_posterior_scores_zero(self):
        samples = np.tile(np.array([[0.7, 0.1, 0.1, 0.1]]), (10, 1))
        post = PosteriorSamples.from_samples(samples)
        assert uncertainty_score(post).value == 0.0

    def test_alternating_samples_variance(self):
        # rows alternate between two one-hot vectors; unbiased per-class
        # variance is 0.25 * T/(T-1) for the two active classes
        T = 10
        samples = np.zeros((T, 4))
        samples[0::2, 0] = 1.0
        samples[1::2, 1] = 1.0
        post = PosteriorSamples(samples, samples.mean(axis=0), samples.var(axis=0, ddof=1), T)
        v = 0.25 * T / (T - 1)
        np.testing.assert_allclose(post.variance, [v, v, 0.0, 0.0], atol=1e-12)
        assert abs(uncertainty_score(post).value - v / 2.0) < 1e-12

    def test_variational_analytic_score_is_mean_sigma2(self):
        out = VariationalOutput(np.zeros(4), np.array([0.1, 0.2, 0.3, 0.4]))
        score = uncertainty_score(out)
        assert score.method == "variational-analytic"
        assert abs(score.value - 0.25) < 1e-15

    def test_variational_sampled_scores_probability_space(self):
        mu = np.array([2.0, 0.0, 0.0, 0.0])
        s2 = np.full(4, 0.5)
        out = VariationalOutput(mu, s2, reparameterized_samples(mu, s2, 500, seed=8))
        score = uncertainty_score(out, space="sampled")
        assert score.method == "variational-sampled"
        probs = np_softmax(out.samples)
        assert abs(score.value - probs.var(axis=0, ddof=1).mean()) < 1e-15

    def test_sampled_space_requires_draws(self):
        out = VariationalOutput(np.zeros(4), np.ones(4))
        with pytest.raises(ValueError, match="draws"):
            uncertainty_score(out, space="sampled")


class TestPredictiveEntropy:
    def test_one_hot_is_zero(self):
        assert predictive_entropy([1.0, 0.0, 0.0, 0.0]) == 0.0

    def test_uniform_is_log_c(self):
        assert abs(predictive_entropy([0.25] * 4) - np.log(4.0)) < 1e-12

    def test_two_point_uniform(self):
        assert abs(predictive_entropy([0.5, 0.5, 0.0, 0.0]) - np.log(2.0)) < 1e-12

    def test_rejects_negative_and_unnormalized(self):
        with pytest.raises(ValueError, match="nonnegative"):
            predictive_entropy([-0.1, 1.1])
        with pytest.raises(ValueError, match="sum to 1"):
            predictive_entropy([0.5, 0.4])
