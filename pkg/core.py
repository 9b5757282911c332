# core.py
"""
Joint-Gaussian numerics over a whole control sequence.

A control sequence of T steps with m channels is one vector of length n = mT.
Candidate sequences are drawn from N(U, Sigma) with a single covariance over
the whole horizon; the block-diagonal case (one m x m block per step) mirrors
per-step MPPI noise and gets a per-block Cholesky fast path.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy import linalg

from constants import REGULARIZATION_DOUBLINGS, REGULARIZATION_SCALE, SYMMETRY_TOL
from errors import CovarianceError, DimensionError, NonFiniteCostError

logger = logging.getLogger(__name__)

Array = NDArray[np.float64]


def _frozen(a) -> Array:
    out = np.array(a, dtype=np.float64)
    out.flags.writeable = False
    return out


# ---------- random streams ----------

@dataclass(frozen=True)
class RngStream:
    """
    Counter-addressed random streams derived from one master seed.

    ``stream.child(t, l).generator(k)`` always yields the same generator for
    the same (seed, t, l, k), whatever order or thread asks for it.
    """
    seed: int
    path: tuple[int, ...] = ()

    def child(self, *keys: int) -> "RngStream":
        return RngStream(self.seed, self.path + tuple(int(k) for k in keys))

    def generator(self, *keys: int) -> np.random.Generator:
        seq = np.random.SeedSequence(self.seed, spawn_key=self.path + tuple(int(k) for k in keys))
        return np.random.default_rng(seq)

    def derive_seed(self, *keys: int) -> int:
        """64-bit seed for an isolated sub-experiment (e.g. one trial)."""
        seq = np.random.SeedSequence(self.seed, spawn_key=self.path + tuple(int(k) for k in keys))
        lo, hi = seq.generate_state(2, dtype=np.uint32)
        return int(hi) << 32 | int(lo)


# ---------- domain types ----------

@dataclass(frozen=True)
class CostParams:
    lam: float
    alpha: float = 0.0
    gamma: float = field(init=False)

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        object.__setattr__(self, "gamma", self.lam * (1.0 - self.alpha))


@dataclass(frozen=True, eq=False)
class JointProposal:
    """N(mean, cov) over the whole control sequence, with its Cholesky factor cached."""
    mean: Array
    cov: Array
    chol: Array
    block: int | None = None

    @classmethod
    def from_cov(cls, mean, cov, block: int | None = None) -> "JointProposal":
        mean = np.asarray(mean, dtype=np.float64)
        cov = np.asarray(cov, dtype=np.float64)
        n = mean.shape[0]
        if mean.ndim != 1 or cov.shape != (n, n):
            raise DimensionError(f"mean of length {n} needs an {n}x{n} covariance, got {cov.shape}")
        if not np.allclose(cov, cov.T, rtol=0.0, atol=SYMMETRY_TOL):
            raise CovarianceError("covariance is not symmetric")
        return cls(_frozen(mean), _frozen(cov), _frozen(cholesky_factor(cov, block)), block)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def with_mean(self, mean) -> "JointProposal":
        mean = np.asarray(mean, dtype=np.float64)
        if mean.shape != self.mean.shape:
            raise DimensionError(f"expected mean of length {self.dim}, got {mean.shape}")
        return JointProposal(_frozen(mean), self.cov, self.chol, self.block)

    def solve(self, rhs) -> Array:
        """cov^{-1} @ rhs via the cached factor."""
        return linalg.cho_solve((self.chol, True), np.asarray(rhs, dtype=np.float64))

    def inverse(self) -> Array:
        return self.solve(np.eye(self.dim))


@dataclass(frozen=True, eq=False)
class ControlPlan:
    """Rolling commanded sequence, stored flat: u_t = data[t*m:(t+1)*m]."""
    horizon: int
    dim: int
    data: Array
    bounds: Array  # (m, 2) per-channel [lo, hi]

    def __post_init__(self):
        if self.horizon < 1 or self.dim < 1:
            raise DimensionError(f"horizon and dim must be positive, got T={self.horizon}, m={self.dim}")
        if self.data.shape != (self.horizon * self.dim,):
            raise DimensionError(
                f"plan data must have length m*T = {self.horizon * self.dim}, got {self.data.shape}"
            )
        if self.bounds.shape != (self.dim, 2):
            raise DimensionError(f"bounds must be ({self.dim}, 2), got {self.bounds.shape}")

    @classmethod
    def filled(cls, horizon: int, bounds, value=None) -> "ControlPlan":
        bounds = _frozen(np.atleast_2d(bounds))
        m = bounds.shape[0]
        u = np.zeros(m) if value is None else np.broadcast_to(np.asarray(value, dtype=np.float64), (m,))
        return cls(horizon, m, _frozen(np.tile(u, horizon)), bounds)

    def with_data(self, data) -> "ControlPlan":
        return ControlPlan(self.horizon, self.dim, _frozen(data), self.bounds)

    def step(self, t: int) -> Array:
        return self.data[t * self.dim:(t + 1) * self.dim]

    def as_matrix(self) -> Array:
        return self.data.reshape(self.horizon, self.dim)


@dataclass(frozen=True, eq=False)
class RolloutBatch:
    noise: Array         # (K, n)
    costs: Array         # (K,)
    sampled_mean: Array  # U' that generated the batch

    def __post_init__(self):
        if self.noise.ndim != 2 or self.noise.shape[0] < 1:
            raise DimensionError(f"noise must be (K, n) with K >= 1, got {self.noise.shape}")
        if self.costs.shape != (self.noise.shape[0],):
            raise DimensionError(f"need one cost per sample, got {self.costs.shape}")

    @property
    def size(self) -> int:
        return self.noise.shape[0]

    @property
    def samples(self) -> Array:
        """Absolute candidate sequences v_k = U' + eps_k."""
        return self.sampled_mean[None, :] + self.noise


# ---------- factorisation ----------

def is_block_diagonal(cov: Array, block: int) -> bool:
    n = cov.shape[0]
    if block < 1 or n % block:
        return False
    idx = np.arange(n) // block
    off = idx[:, None] != idx[None, :]
    return not np.any(cov[off])


def cholesky_factor(cov: Array, block: int | None = None) -> Array:
    """Lower Cholesky factor; per-block when cov is block-diagonal with the given block size."""
    try:
        if block and is_block_diagonal(cov, block):
            n = cov.shape[0]
            blocks = [
                linalg.cholesky(cov[i:i + block, i:i + block], lower=True)
                for i in range(0, n, block)
            ]
            return linalg.block_diag(*blocks)
        return linalg.cholesky(cov, lower=True)
    except linalg.LinAlgError as e:
        raise CovarianceError(f"covariance is not positive definite: {e}") from e


def regularize_covariance(cov, block: int | None = None) -> tuple[Array, Array]:
    """
    Symmetrise and, if Cholesky fails, add delta*I with
    delta = 1e-8 * trace/n, doubling up to three times.
    Returns (cov, chol).
    """
    cov = np.asarray(cov, dtype=np.float64)
    cov = 0.5 * (cov + cov.T)
    try:
        return cov, cholesky_factor(cov, block)
    except CovarianceError:
        pass
    n = cov.shape[0]
    trace = float(np.trace(cov))
    delta = REGULARIZATION_SCALE * (trace / n if trace > 0 else 1.0)
    for _ in range(REGULARIZATION_DOUBLINGS + 1):
        fixed = cov + delta * np.eye(n)
        try:
            return fixed, cholesky_factor(fixed, block)
        except CovarianceError:
            delta *= 2.0
    raise CovarianceError(f"covariance still not positive definite after regularisation (delta={delta / 2:g})")


def regularized_proposal(mean, cov, block: int | None = None) -> JointProposal:
    cov, chol = regularize_covariance(cov, block)
    return JointProposal(_frozen(mean), _frozen(cov), _frozen(chol), block)


# ---------- operations ----------

def assemble_block_covariance(per_step) -> Array:
    """Block-diagonal joint covariance with Sigma_t as the t-th diagonal block."""
    blocks = [np.atleast_2d(np.asarray(b, dtype=np.float64)) for b in per_step]
    if not blocks:
        raise DimensionError("need at least one per-step covariance")
    m = blocks[0].shape[0]
    for t, b in enumerate(blocks):
        if b.shape != (m, m):
            raise DimensionError(f"block {t} has shape {b.shape}, expected ({m}, {m})")
        if not np.allclose(b, b.T, rtol=0.0, atol=SYMMETRY_TOL):
            raise CovarianceError(f"block {t} is not symmetric")
        try:
            linalg.cholesky(b, lower=True)
        except linalg.LinAlgError as e:
            raise CovarianceError(f"block {t} is not positive definite") from e
    return linalg.block_diag(*blocks)


def sample_noise(chol, K: int, stream: RngStream) -> Array:
    """K draws eps_k = chol @ z_k, z_k from the k-th substream of ``stream``."""
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    chol = np.asarray(chol, dtype=np.float64)
    n = chol.shape[0]
    z = np.empty((K, n))
    for k in range(K):
        z[k] = stream.generator(k).standard_normal(n)
    return z @ chol.T


def log_density(proposal: JointProposal, v) -> float:
    v = np.asarray(v, dtype=np.float64)
    if v.shape != proposal.mean.shape:
        raise DimensionError(f"expected vector of length {proposal.dim}, got {v.shape}")
    z = linalg.solve_triangular(proposal.chol, v - proposal.mean, lower=True)
    log_det = 2.0 * np.sum(np.log(np.diag(proposal.chol)))
    return -0.5 * (proposal.dim * np.log(2.0 * np.pi) + log_det + z @ z)


def softmax_weights(costs, lam: float) -> Array:
    """Importance weights exp(-(s_k - rho)/lam)/eta with rho = min cost."""
    costs = np.asarray(costs, dtype=np.float64)
    if costs.ndim != 1 or costs.size < 1:
        raise DimensionError(f"costs must be a non-empty vector, got shape {costs.shape}")
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    bad = np.flatnonzero(~np.isfinite(costs))
    if bad.size:
        raise NonFiniteCostError(int(bad[0]), float(costs[bad[0]]))
    rho = costs.min()
    w = np.exp(-(costs - rho) / lam)
    return w / w.sum()


def effective_sample_size(weights) -> float:
    w = np.asarray(weights, dtype=np.float64)
    return float(1.0 / np.sum(w * w))
