import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy import stats

from ais import (
    AisContext, AisParams, cma_update, cma_weights, ce_update, elite_count, ledoit_wolf,
    make_strategy, mu_ais_update, mu_sigma_ais_update, multinomial_resample, pmc_update,
)
from core import JointProposal, RolloutBatch, softmax_weights
from errors import AisError, DimensionError


def _ctx(noise, costs, mean=None, cov=None, **params):
    noise = np.atleast_2d(np.asarray(noise, dtype=np.float64))
    n = noise.shape[1]
    mean = np.zeros(n) if mean is None else np.asarray(mean, dtype=np.float64)
    cov = np.eye(n) if cov is None else cov
    proposal = JointProposal.from_cov(mean, cov)
    batch = RolloutBatch(noise, np.asarray(costs, dtype=np.float64), proposal.mean)
    return AisContext(proposal, batch, 1, AisParams(**params))


def _random_ctx(rng, K, n, **params):
    return _ctx(rng.normal(size=(K, n)), rng.uniform(0.0, 5.0, size=K), rng.normal(size=n), **params)


# ---------- params ----------

def test_elite_count_floor():
    assert elite_count(0.125, 20) == 2
    assert elite_count(0.125, 4) == 1
    assert elite_count(1.0, 7) == 7


@pytest.mark.parametrize("bad", [
    {"ais_lambda": 0.0}, {"elite_fraction": 0.0}, {"elite_fraction": 1.5},
    {"cov_estimator": "oas"}, {"smoothing_rate": -0.1}, {"cma_cov_lr": 2.0},
    {"resampling": "systematic"},
])
def test_param_validation(bad):
    with pytest.raises(AisError):
        AisParams(**bad)


def test_unknown_strategy():
    with pytest.raises(AisError):
        make_strategy("nes")


def test_context_checks_dimensions():
    proposal = JointProposal.from_cov(np.zeros(3), np.eye(3))
    batch = RolloutBatch(np.zeros((2, 2)), np.zeros(2), np.zeros(2))
    with pytest.raises(DimensionError):
        AisContext(proposal, batch, 1, AisParams())


# ---------- mu ----------

def test_mu_single_sample():
    ctx = _ctx([[0.4, -1.0]], [2.0], mean=[1.0, 1.0])
    assert_allclose(mu_ais_update(ctx).mean, [1.4, 0.0])


def test_mu_equal_costs_average_noise():
    rng = np.random.default_rng(0)
    noise = rng.normal(size=(6, 3))
    ctx = _ctx(noise, np.full(6, 2.5), mean=[0.1, 0.2, 0.3])
    assert_allclose(mu_ais_update(ctx).mean, ctx.proposal.mean + noise.mean(axis=0), atol=1e-12)


def test_mu_high_temperature_limit():
    rng = np.random.default_rng(1)
    ctx = _random_ctx(rng, 10, 2, ais_lambda=1e9)
    uniform = ctx.proposal.mean + ctx.batch.noise.mean(axis=0)
    assert_allclose(mu_ais_update(ctx).mean, uniform, atol=1e-6)


def test_mu_keeps_covariance():
    ctx = _random_ctx(np.random.default_rng(2), 5, 2)
    assert mu_ais_update(ctx).cov is ctx.proposal.cov


# ---------- mu-sigma ----------

def test_mu_sigma_two_point_variance():
    out = mu_sigma_ais_update(_ctx([[-1.0], [1.0]], [0.0, 0.0]))
    assert out.mean[0] == pytest.approx(0.0)
    assert out.cov[0, 0] == pytest.approx(1.0)


def test_mu_sigma_identical_samples_hit_floor():
    out = mu_sigma_ais_update(_ctx(np.ones((4, 2)), np.full(4, 3.0)))
    assert_allclose(out.mean, [1.0, 1.0])
    assert_allclose(out.cov, 1e-8 * np.eye(2))


def test_mu_sigma_matches_numpy_weighted_average_and_cov():
    rng = np.random.default_rng(3)
    for _ in range(100):
        n = int(rng.integers(1, 5))
        ctx = _random_ctx(rng, 20, n, ais_lambda=float(rng.uniform(0.5, 5.0)))
        w = softmax_weights(ctx.batch.costs, ctx.params.ais_lambda)
        mean = np.average(ctx.samples, axis=0, weights=w)
        cov = np.atleast_2d(np.cov(ctx.samples.T, aweights=w, bias=True))
        out = mu_sigma_ais_update(ctx)
        assert_allclose(out.mean, mean, atol=1e-10)
        assert_allclose(out.cov, cov, atol=1e-10)


def test_mu_sigma_needs_two_samples():
    with pytest.raises(AisError):
        mu_sigma_ais_update(_ctx([[0.5]], [1.0]))


# ---------- ce ----------

def test_ce_elites_by_hand():
    rng = np.random.default_rng(4)
    noise = rng.normal(size=(4, 3))
    ctx = _ctx(noise, [3.0, 1.0, 4.0, 2.0], elite_fraction=0.5, smoothing_rate=0.0)
    v = ctx.samples
    assert_allclose(ce_update(ctx).mean, (v[1] + v[3]) / 2)


def test_ce_full_batch_is_sample_moments():
    rng = np.random.default_rng(5)
    ctx = _random_ctx(rng, 30, 3, elite_fraction=1.0, smoothing_rate=0.0)
    out = ce_update(ctx)
    assert_allclose(out.mean, ctx.samples.mean(axis=0), atol=1e-12)
    assert_allclose(out.cov, np.cov(ctx.samples, rowvar=False, bias=True), atol=1e-12)


def test_ce_full_inertia_keeps_proposal():
    rng = np.random.default_rng(6)
    cov = np.array([[2.0, 0.3], [0.3, 0.5]])
    ctx = _ctx(rng.normal(size=(8, 2)), rng.uniform(size=8), mean=[0.5, -0.5], cov=cov, smoothing_rate=1.0)
    out = ce_update(ctx)
    assert_array_equal(out.mean, ctx.proposal.mean)
    assert_allclose(out.cov, cov)


def test_ce_elites_are_permutation_stable():
    rng = np.random.default_rng(7)
    ctx = _random_ctx(rng, 16, 2, elite_fraction=0.25)
    perm = rng.permutation(16)
    shuffled = _ctx(ctx.batch.noise[perm], ctx.batch.costs[perm], ctx.proposal.mean, elite_fraction=0.25)
    assert_allclose(ce_update(ctx).mean, ce_update(shuffled).mean, atol=1e-12)


def test_ce_ties_keep_index_order():
    ctx = _ctx([[1.0], [2.0], [3.0]], [1.0, 1.0, 1.0], elite_fraction=0.34, smoothing_rate=0.0)
    assert ce_update(ctx).mean[0] == pytest.approx(1.0)


def test_ce_shrinkage_estimator_is_positive_definite():
    rng = np.random.default_rng(8)
    ctx = _random_ctx(rng, 40, 8, cov_estimator="shrinkage", elite_fraction=0.125, smoothing_rate=0.0)
    out = ce_update(ctx)
    assert np.all(np.linalg.eigvalsh(out.cov) > 0)


def test_ce_single_elite_blends_toward_the_best_sample():
    rng = np.random.default_rng(9)
    cov = np.array([[1.0, 0.2], [0.2, 0.6]])
    ctx = _ctx(rng.normal(size=(20, 2)), rng.uniform(size=20), mean=[0.3, -0.1], cov=cov,
               elite_fraction=0.05, smoothing_rate=0.1)
    best = ctx.samples[np.argmin(ctx.batch.costs)]
    out = ce_update(ctx)
    assert_allclose(out.mean, 0.9 * best + 0.1 * ctx.proposal.mean, atol=1e-12)
    assert_allclose(out.cov, 0.1 * cov, atol=1e-12)


# ---------- cma ----------

def test_cma_weights_shape():
    for K in (2, 3, 10, 101):
        w = cma_weights(K)
        assert w.size == K // 2
        assert w.sum() == pytest.approx(1.0)
        assert np.all(np.diff(w) <= 0) and np.all(w > 0)


def test_cma_zero_mean_rate_keeps_mean():
    ctx = _random_ctx(np.random.default_rng(9), 10, 3, cma_mean_lr=0.0)
    assert_array_equal(cma_update(ctx).mean, ctx.proposal.mean)


def test_cma_two_samples_moves_to_better_one():
    ctx = _ctx([[1.0, 0.0], [-1.0, 2.0]], [5.0, 1.0], mean=[0.5, 0.5], cma_mean_lr=1.0)
    assert_allclose(cma_update(ctx).mean, ctx.samples[1])


def test_cma_needs_two_samples():
    with pytest.raises(AisError):
        cma_update(_ctx([[0.5]], [1.0]))


# ---------- pmc ----------

def test_pmc_degenerate_weights_pick_one_sample():
    ctx = _ctx([[1.0, 2.0], [-3.0, 0.5]], [0.0, 1e6], ais_lambda=10.0)
    out = pmc_update(ctx, np.random.default_rng(0))
    assert_array_equal(out.mean, ctx.samples[0])


def test_pmc_is_reproducible():
    ctx = _random_ctx(np.random.default_rng(10), 12, 2)
    a = pmc_update(ctx, np.random.default_rng(42))
    b = pmc_update(ctx, np.random.default_rng(42))
    assert_array_equal(a.mean, b.mean)
    assert a.cov is ctx.proposal.cov


def test_pmc_mean_is_resampled_average():
    ctx = _ctx(np.arange(5.0)[:, None], np.zeros(5))
    idx = multinomial_resample(np.full(5, 0.2), 5, np.random.default_rng(3))
    out = pmc_update(ctx, np.random.default_rng(3))
    assert out.mean[0] == pytest.approx(ctx.samples[idx, 0].mean())


def test_multinomial_frequencies_match_weights():
    w = np.array([0.5, 0.2, 0.15, 0.1, 0.05])
    N = 100_000
    idx = multinomial_resample(w, N, np.random.default_rng(11))
    counts = np.bincount(idx, minlength=w.size)
    assert stats.chisquare(counts, w * N).pvalue > 1e-3


# ---------- all strategies ----------

@pytest.mark.parametrize("name", ["mu", "mu-sigma", "ce", "cma", "pmc"])
def test_large_batch_moves_toward_quadratic_minimum(name):
    rng = np.random.default_rng(12)
    K = 10_000
    for n in (1, 2, 4):
        target = np.linspace(1.0, 2.0, n)
        proposal = JointProposal.from_cov(np.zeros(n), np.eye(n))
        noise = rng.standard_normal((K, n))
        costs = np.sum((noise - target) ** 2, axis=1)
        batch = RolloutBatch(noise, costs, proposal.mean)
        out = make_strategy(name, AisParams(ais_lambda=1.0))(proposal, batch, 1, np.random.default_rng(n))
        before = target @ proposal.solve(target)
        gap = target - out.mean
        assert gap @ proposal.solve(gap) < before
        assert np.all(np.linalg.eigvalsh(out.cov) > 0)


@pytest.mark.parametrize("name", ["mu", "mu-sigma", "ce", "cma", "pmc"])
def test_strategies_are_deterministic(name):
    ctx = _random_ctx(np.random.default_rng(13), 12, 3)
    strategy = make_strategy(name)
    a = strategy(ctx.proposal, ctx.batch, 1, np.random.default_rng(5))
    b = strategy(ctx.proposal, ctx.batch, 1, np.random.default_rng(5))
    assert_array_equal(a.mean, b.mean)
    assert_array_equal(a.cov, b.cov)


def test_ledoit_wolf_with_few_samples():
    rng = np.random.default_rng(14)
    X = rng.normal(size=(5, 10))
    cov, shrink = ledoit_wolf(X - X.mean(axis=0))
    assert 0.0 < shrink <= 1.0
    assert np.all(np.linalg.eigvalsh(cov) > 0)
    assert_allclose(cov, cov.T)
