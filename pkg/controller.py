# controller.py
"""
Sampling MPC over a joint Gaussian on the whole control sequence.

Each control step resets the proposal to (U, Sigma), then runs L rounds of
sample -> roll out -> score, adapting the proposal between rounds with an AIS
strategy. The final importance-weighted update uses the last round's batch
and the controller temperature. With L = 1 the step is plain MPPI.

Random streams per step are addressed as step_stream.child(l).child(0) for
the sample noise of round l and step_stream.child(l).child(1) for any
randomness the AIS strategy needs.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ais import AisParams, AisStrategy
from constants import DEFAULT_TAIL_INIT, TAIL_INIT_CHOICES
from core import (
    ControlPlan, CostParams, JointProposal, RngStream, RolloutBatch,
    assemble_block_covariance, effective_sample_size, sample_noise, softmax_weights,
)
from environments import Environment
from errors import AisError, CovarianceError, DimensionError, DynamicsError
from input_shaping import InputShaper

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ControllerConfig:
    K: int
    L: int
    T: int
    cost_params: CostParams
    base_cov: JointProposal
    ais_params: AisParams = field(default_factory=AisParams)
    tail_init: str = DEFAULT_TAIL_INIT
    tail_value: float | None = None
    smoothing: float = 0.0

    def __post_init__(self):
        if self.K < 1 or self.L < 1 or self.T < 1:
            raise ValueError(f"K, L and T must all be >= 1, got K={self.K}, L={self.L}, T={self.T}")
        if self.base_cov.dim % self.T:
            raise DimensionError(f"base covariance size {self.base_cov.dim} is not a multiple of T={self.T}")
        if self.tail_init not in TAIL_INIT_CHOICES:
            raise ValueError(f"tail_init must be one of {TAIL_INIT_CHOICES}, got '{self.tail_init}'")
        if self.tail_init == "constant" and self.tail_value is None:
            raise ValueError("tail_init 'constant' needs a tail_value")

    @classmethod
    def from_noise_std(cls, K: int, L: int, T: int, noise_std, lam: float, alpha: float = 0.0,
                       **kw) -> "ControllerConfig":
        """Block-diagonal Sigma with diag(noise_std**2) on every step."""
        std = np.atleast_1d(np.asarray(noise_std, dtype=np.float64))
        m = std.size
        cov = assemble_block_covariance([np.diag(std**2)] * T)
        base = JointProposal.from_cov(np.zeros(m * T), cov, block=m)
        return cls(K, L, T, CostParams(lam, alpha), base, **kw)

    @property
    def control_dim(self) -> int:
        return self.base_cov.dim // self.T

    @property
    def effective_samples(self) -> int:
        return self.K * self.L


@dataclass(frozen=True)
class IterationStats:
    iteration: int
    min_cost: float
    mean_cost: float
    ess: float


@dataclass(frozen=True, eq=False)
class StepResult:
    command: np.ndarray
    updated_plan: ControlPlan
    optimized_plan: ControlPlan   # before the shift; command is its u_0
    diagnostics: tuple[IterationStats, ...] = ()


# ---------- rollouts ----------

def rollout_batch(env: Environment, state, samples, shaper: InputShaper, filt=None):
    """
    Propagate K raw control sequences (K, m*T) from one start state.

    g is applied to every raw input before the dynamics; a sample that hits a
    terminal state stops accruing reward and its state is frozen. Returns
    (trajectories (K, T+1, state_dim), costs (K,)) where cost = -reward.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    K, n = samples.shape
    m = shaper.bounds.shape[0]
    if n % m:
        raise DimensionError(f"sequence length {n} is not a multiple of control dim {m}")
    T = n // m
    raw = samples.reshape(K, T, m)
    x = np.repeat(np.asarray(state, dtype=np.float64)[None, :], K, axis=0)
    traj = np.empty((K, T + 1, x.shape[1]))
    traj[:, 0] = x
    alive = np.ones(K, dtype=bool)
    cost = np.zeros(K)
    prev = None if filt is None else np.broadcast_to(np.asarray(filt, dtype=np.float64), (K, m))
    for t in range(T):
        u, prev = shaper.apply(raw[:, t], prev)
        try:
            nxt, reward, done = env.batch_step(x, u)
        except DynamicsError as e:
            raise DynamicsError(t, e.substep, e.car) from e
        if not np.all(np.isfinite(nxt[alive])):
            raise DynamicsError(t)
        cost -= np.where(alive, reward, 0.0)
        x = np.where(alive[:, None], nxt, x)
        alive &= ~done
        traj[:, t + 1] = x
    cost -= env.terminal_reward(x)
    return traj, cost


def rollout(env: Environment, state, plan_mean, noise, shaper: InputShaper | None = None, filt=None):
    """Single-sequence rollout of plan_mean + noise -> (trajectory (T+1, state_dim), state cost)."""
    shaper = shaper or InputShaper(env.bounds)
    v = np.asarray(plan_mean, dtype=np.float64) + np.asarray(noise, dtype=np.float64)
    traj, cost = rollout_batch(env, state, v[None, :], shaper, filt)
    return traj[0], float(cost[0])


# ---------- scoring and update ----------

def trajectory_cost(state_cost, U_prime, U, noise, base_cov_inv, cost_params: CostParams) -> float:
    """s = c(X) + phi(X) + gamma * U'^T Sigma^{-1} (eps + U' - U)."""
    U_prime, U, noise = (np.asarray(a, dtype=np.float64) for a in (U_prime, U, noise))
    inv = np.atleast_2d(np.asarray(base_cov_inv, dtype=np.float64))
    n = U.shape[0]
    if U_prime.shape != (n,) or noise.shape != (n,) or inv.shape != (n, n):
        raise DimensionError(
            f"expected vectors of length {n} and an {n}x{n} inverse, got "
            f"{U_prime.shape}, {noise.shape}, {inv.shape}"
        )
    return float(state_cost + cost_params.gamma * U_prime @ inv @ (noise + U_prime - U))


def control_costs(U_prime, U, noise, base: JointProposal, gamma: float) -> np.ndarray:
    """Batched control term gamma * U'^T Sigma^{-1} (eps_k + U' - U) using the cached factor."""
    if gamma == 0.0:
        return np.zeros(noise.shape[0])
    a = base.solve(U_prime)
    return gamma * ((noise + (U_prime - U)) @ a)


def control_update(batch: RolloutBatch, plan: ControlPlan, U_prime, lam: float) -> ControlPlan:
    """U_new = U + sum_k w_k (eps_k + U' - U)."""
    U_prime = np.asarray(U_prime, dtype=np.float64)
    if U_prime.shape != plan.data.shape or batch.noise.shape[1] != plan.data.shape[0]:
        raise DimensionError(f"batch and U' must have length {plan.data.shape[0]}")
    w = softmax_weights(batch.costs, lam)
    return plan.with_data(plan.data + w @ (batch.noise + (U_prime - plan.data)))


def receding_shift(plan: ControlPlan, tail_init: str = DEFAULT_TAIL_INIT, value=None) -> ControlPlan:
    m, d = plan.dim, plan.data
    if tail_init == "repeat":
        tail = d[-m:]
    elif tail_init == "zero":
        tail = np.zeros(m)
    elif tail_init == "constant":
        if value is None:
            raise ValueError("tail_init 'constant' needs a value")
        tail = np.broadcast_to(np.asarray(value, dtype=np.float64), (m,))
    else:
        raise ValueError(f"tail_init must be one of {TAIL_INIT_CHOICES}, got '{tail_init}'")
    return plan.with_data(np.concatenate([d[m:], tail]))


def _stats(iteration: int, costs, lam: float) -> IterationStats:
    w = softmax_weights(costs, lam)
    return IterationStats(iteration, float(np.min(costs)), float(np.mean(costs)), effective_sample_size(w))


def _check_dims(env: Environment, plan: ControlPlan, config: ControllerConfig):
    if plan.dim != env.control_dim or plan.horizon != config.T or config.control_dim != plan.dim:
        raise DimensionError(
            f"plan (T={plan.horizon}, m={plan.dim}) does not match controller T={config.T}, "
            f"m={config.control_dim} and environment m={env.control_dim}"
        )


def _finish(plan: ControlPlan, config: ControllerConfig, stats) -> StepResult:
    command = np.array(plan.step(0))
    shifted = receding_shift(plan, config.tail_init, config.tail_value)
    return StepResult(command, shifted, plan, tuple(stats))


# ---------- steps ----------

def mpopi_step(env: Environment, state, plan: ControlPlan, config: ControllerConfig,
               strategy: AisStrategy, rng: RngStream, filt=None) -> StepResult:
    """One control step: L sample/score rounds with AIS between them, then the weighted update."""
    _check_dims(env, plan, config)
    shaper = InputShaper(plan.bounds, config.smoothing)
    base = config.base_cov
    lam, gamma = config.cost_params.lam, config.cost_params.gamma
    U = plan.data
    proposal = base.with_mean(U)
    stats = []
    batch = None
    for ell in range(config.L):
        stream = rng.child(ell)
        noise = sample_noise(proposal.chol, config.K, stream.child(0))
        _, state_cost = rollout_batch(env, state, proposal.mean + noise, shaper, filt)
        costs = state_cost + control_costs(proposal.mean, U, noise, base, gamma)
        batch = RolloutBatch(noise, costs, proposal.mean)
        stats.append(_stats(ell + 1, costs, lam))
        if ell < config.L - 1:
            try:
                proposal = strategy(proposal, batch, ell + 1, stream.child(1).generator())
            except (CovarianceError, AisError) as e:
                logger.warning("AIS %s failed at iteration %d, keeping last proposal: %s",
                               strategy.name, ell + 1, e)
    return _finish(control_update(batch, plan, batch.sampled_mean, lam), config, stats)


def mppi_step(env: Environment, state, plan: ControlPlan, config: ControllerConfig,
              rng: RngStream, filt=None) -> StepResult:
    """Reference MPPI: K samples from the fixed Sigma around U, update U + sum_k w_k eps_k."""
    _check_dims(env, plan, config)
    shaper = InputShaper(plan.bounds, config.smoothing)
    base = config.base_cov
    lam, gamma = config.cost_params.lam, config.cost_params.gamma
    U = plan.data
    noise = sample_noise(base.chol, config.K, rng.child(0).child(0))
    _, state_cost = rollout_batch(env, state, U + noise, shaper, filt)
    costs = state_cost + (gamma * (noise @ base.solve(U)) if gamma != 0.0 else 0.0)
    w = softmax_weights(costs, lam)
    new = plan.with_data(U + w @ noise)
    return _finish(new, config, [_stats(1, costs, lam)])


class Controller:
    """
    Receding-horizon loop state for one episode: the rolling plan and the
    input filter of the executed commands.
    """

    def __init__(self, env: Environment, config: ControllerConfig, algo: str = "mpopi",
                 strategy: AisStrategy | None = None):
        if algo == "mppi" and config.L != 1:
            raise ValueError(f"MPPI runs a single sampling round, got L={config.L}")
        if algo == "mpopi" and strategy is None:
            raise ValueError("MPOPI needs an AIS strategy")
        self.env = env
        self.config = config
        self.algo = algo
        self.strategy = strategy
        self.shaper = InputShaper(env.bounds, config.smoothing)
        self.reset()

    def reset(self):
        self.plan = ControlPlan.filled(self.config.T, self.env.bounds, 0.0)
        self.filt = None

    def act(self, state, rng: RngStream):
        """Optimise, advance the plan, and return (shaped command, StepResult)."""
        if self.algo == "mppi":
            result = mppi_step(self.env, state, self.plan, self.config, rng, self.filt)
        else:
            result = mpopi_step(self.env, state, self.plan, self.config, self.strategy, rng, self.filt)
        self.plan = result.updated_plan
        applied, self.filt = self.shaper.apply(result.command, self.filt)
        return applied, result
