# ais.py
"""
Adaptive importance sampling: update the proposal N(U', Sigma') from one
scored batch. Five strategies share one call shape,

    strategy(proposal, batch, iteration, rng) -> JointProposal

and keep no state between control steps. Any returned covariance has been
through the positive-definite floor in core.regularized_proposal.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from constants import (
    AIS_CHOICES, CE_ELITE_FRACTION, CE_SMOOTHING_RATE, CMA_COV_LR, CMA_MEAN_LR,
    COV_ESTIMATOR_CHOICES,
)
from core import JointProposal, RolloutBatch, regularized_proposal, softmax_weights
from errors import AisError, DimensionError


@dataclass(frozen=True)
class AisParams:
    ais_lambda: float = 10.0
    elite_fraction: float = CE_ELITE_FRACTION
    cov_estimator: str = "sample"
    smoothing_rate: float = CE_SMOOTHING_RATE
    cma_mean_lr: float = CMA_MEAN_LR
    cma_cov_lr: float = CMA_COV_LR
    resampling: str = "multinomial"

    def __post_init__(self):
        if not self.ais_lambda > 0:
            raise AisError(f"ais_lambda must be positive, got {self.ais_lambda}")
        if not 0.0 < self.elite_fraction <= 1.0:
            raise AisError(f"elite_fraction must lie in (0, 1], got {self.elite_fraction}")
        if self.cov_estimator not in COV_ESTIMATOR_CHOICES:
            raise AisError(f"cov_estimator must be one of {COV_ESTIMATOR_CHOICES}, got '{self.cov_estimator}'")
        for name in ("smoothing_rate", "cma_mean_lr", "cma_cov_lr"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise AisError(f"{name} must lie in [0, 1], got {v}")
        if self.resampling != "multinomial":
            raise AisError(f"only multinomial resampling is supported, got '{self.resampling}'")

    def replace(self, **changes) -> "AisParams":
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class AisContext:
    proposal: JointProposal
    batch: RolloutBatch
    iteration: int
    params: AisParams

    def __post_init__(self):
        if self.batch.noise.shape[1] != self.proposal.dim:
            raise DimensionError(
                f"batch samples have length {self.batch.noise.shape[1]}, proposal has {self.proposal.dim}"
            )

    @property
    def samples(self) -> np.ndarray:
        return self.batch.samples

    @property
    def K(self) -> int:
        return self.batch.size


# ---------- estimators ----------

def elite_count(elite_fraction: float, K: int) -> int:
    return max(1, int(np.floor(elite_fraction * K)))


def rank_order(costs) -> np.ndarray:
    """Sample indices by ascending cost; equal costs keep index order."""
    return np.argsort(np.asarray(costs), kind="stable")


def weighted_moments(samples, weights):
    """Weighted mean and (normalised-weight) covariance of (K, n) samples."""
    w = np.asarray(weights, dtype=np.float64)
    mean = w @ samples
    diff = samples - mean
    return mean, (w[:, None] * diff).T @ diff


def ledoit_wolf(centered) -> tuple[np.ndarray, float]:
    """
    Ledoit-Wolf shrinkage of the sample covariance toward mu*I, mu = trace/n.
    ``centered`` is (N, n) with the mean already removed. Returns (cov, shrinkage).
    """
    X = np.asarray(centered, dtype=np.float64)
    N, p = X.shape
    emp = X.T @ X / N
    mu = np.trace(emp) / p
    X2 = X * X
    beta_ = np.sum(X2.T @ X2)
    delta_ = np.sum(emp * emp)
    beta = (beta_ / N - delta_) / (p * N)
    delta = (delta_ - 2.0 * mu * np.trace(emp) + p * mu * mu) / p
    if delta <= 0.0:
        return emp, 0.0
    shrink = float(np.clip(beta / delta, 0.0, 1.0))
    return (1.0 - shrink) * emp + shrink * mu * np.eye(p), shrink


def elite_covariance(elites, mean, estimator: str) -> np.ndarray:
    diff = elites - mean
    if estimator == "shrinkage" and elites.shape[0] > 1:
        return ledoit_wolf(diff)[0]
    return diff.T @ diff / elites.shape[0]


def cma_weights(K: int) -> np.ndarray:
    """Positive log-rank recombination weights over the best floor(K/2) samples."""
    mu_w = max(1, K // 2)
    raw = np.log(mu_w + 1.0) - np.log(np.arange(1, mu_w + 1))
    return raw / raw.sum()


def multinomial_resample(weights, size: int, rng: np.random.Generator) -> np.ndarray:
    cdf = np.cumsum(np.asarray(weights, dtype=np.float64))
    cdf /= cdf[-1]
    idx = np.searchsorted(cdf, rng.random(size), side="right")
    return np.minimum(idx, cdf.size - 1)


# ---------- strategies ----------

def mu_ais_update(ctx: AisContext) -> JointProposal:
    w = softmax_weights(ctx.batch.costs, ctx.params.ais_lambda)
    return ctx.proposal.with_mean(ctx.proposal.mean + w @ ctx.batch.noise)


def mu_sigma_ais_update(ctx: AisContext) -> JointProposal:
    if ctx.K < 2:
        raise AisError(f"mean-and-covariance matching needs K >= 2, got K={ctx.K}")
    w = softmax_weights(ctx.batch.costs, ctx.params.ais_lambda)
    mean, cov = weighted_moments(ctx.samples, w)
    return regularized_proposal(mean, cov, ctx.proposal.block)


def ce_update(ctx: AisContext) -> JointProposal:
    p = ctx.params
    elites = ctx.samples[rank_order(ctx.batch.costs)[:elite_count(p.elite_fraction, ctx.K)]]
    mean_e = elites.mean(axis=0)
    cov_e = elite_covariance(elites, mean_e, p.cov_estimator)
    a = p.smoothing_rate
    mean = (1.0 - a) * mean_e + a * ctx.proposal.mean
    cov = (1.0 - a) * cov_e + a * ctx.proposal.cov
    return regularized_proposal(mean, cov, ctx.proposal.block)


def cma_update(ctx: AisContext) -> JointProposal:
    if ctx.K < 2:
        raise AisError(f"CMA update needs K >= 2, got K={ctx.K}")
    p = ctx.params
    w = cma_weights(ctx.K)
    old = ctx.proposal.mean
    y = ctx.samples[rank_order(ctx.batch.costs)[:w.size]] - old
    mean = old + p.cma_mean_lr * (w @ y)
    # rank-mu estimate is taken about the old mean
    rank_mu = (w[:, None] * y).T @ y
    cov = (1.0 - p.cma_cov_lr) * ctx.proposal.cov + p.cma_cov_lr * rank_mu
    return regularized_proposal(mean, cov, ctx.proposal.block)


def pmc_update(ctx: AisContext, rng: np.random.Generator) -> JointProposal:
    w = softmax_weights(ctx.batch.costs, ctx.params.ais_lambda)
    idx = multinomial_resample(w, ctx.K, rng)
    return ctx.proposal.with_mean(ctx.samples[idx].mean(axis=0))


_UPDATES: dict[str, Callable] = {
    "mu": lambda ctx, rng: mu_ais_update(ctx),
    "mu-sigma": lambda ctx, rng: mu_sigma_ais_update(ctx),
    "ce": lambda ctx, rng: ce_update(ctx),
    "cma": lambda ctx, rng: cma_update(ctx),
    "pmc": pmc_update,
}


class AisStrategy:
    """A named update rule bound to its parameter set."""

    def __init__(self, name: str, params: AisParams | None = None):
        if name not in _UPDATES:
            raise AisError(f"Unknown AIS strategy '{name}'. Choose from {', '.join(AIS_CHOICES)}")
        self.name = name
        self.params = params or AisParams()
        self._update = _UPDATES[name]

    def __call__(self, proposal: JointProposal, batch: RolloutBatch, iteration: int,
                 rng: np.random.Generator) -> JointProposal:
        return self._update(AisContext(proposal, batch, iteration, self.params), rng)

    def __repr__(self) -> str:
        return f"AisStrategy({self.name!r})"


def make_strategy(name: str, params: AisParams | None = None) -> AisStrategy:
    return AisStrategy(name, params)
