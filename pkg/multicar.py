# multicar.py
"""
N cars on one track, controlled as a single plant with 2*N inputs per step.

Reward = sum of single-car rewards
         - 11000 * [any pair closer than 4 m]
         - sum over pairs of the center-to-center distance.
"""
from __future__ import annotations

import logging

import numpy as np

from car_model import (
    STATE_DIM, X, Y, CarEpisode, CarParams, car_bounds, car_rewards, integrate, start_state,
)
from constants import CAR_START_SPEED, MULTICAR_START_GAP, PROXIMITY_PENALTY, PROXIMITY_RADIUS
from environments import Environment, StepOutcome
from errors import DynamicsError
from track import Track

logger = logging.getLogger(__name__)


def pair_terms(positions: np.ndarray):
    """positions (K, N, 2) -> (sum of pairwise distances (K,), any pair within radius (K,))."""
    diff = positions[:, :, None, :] - positions[:, None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    iu = np.triu_indices(positions.shape[1], k=1)
    pair = dist[:, iu[0], iu[1]]
    return pair.sum(axis=1), np.any(pair < PROXIMITY_RADIUS, axis=1)


def multicar_rewards(states: np.ndarray, n_cars: int, track: Track):
    """states (K, 7N) -> (reward (K,), per-car over_beta (K, N), per-car off (K, N), s (K, N))."""
    k = states.shape[0]
    cars = states.reshape(k * n_cars, STATE_DIM)
    reward, over_beta, off, _, s = car_rewards(cars, track)
    pos = cars[:, [X, Y]].reshape(k, n_cars, 2)
    dist_sum, close = pair_terms(pos)
    total = reward.reshape(k, n_cars).sum(axis=1) - PROXIMITY_PENALTY * close - dist_sum
    shape = (k, n_cars)
    return total, over_beta.reshape(shape), off.reshape(shape), s.reshape(shape)


def _integrate_cars(states, actions, n_cars, params, step):
    k = states.shape[0]
    cars = states.reshape(k * n_cars, STATE_DIM)
    acts = actions.reshape(k * n_cars, 2)
    try:
        return integrate(cars, acts, params, step).reshape(k, n_cars * STATE_DIM)
    except DynamicsError:
        # find the offending car for the error message
        for i in range(n_cars):
            try:
                integrate(states.reshape(k, n_cars, STATE_DIM)[:, i], actions.reshape(k, n_cars, 2)[:, i], params, step)
            except DynamicsError as e:
                raise DynamicsError(step, e.substep, car=i) from e
        raise


def multicar_step(states, actions, track: Track, params: CarParams | None = None, step: int = 0) -> StepOutcome:
    """Pure step of N cars: states (N, 7) or flat (7N,), actions (2N,)."""
    p = params or CarParams()
    flat = np.asarray(states, dtype=np.float64).reshape(1, -1)
    n_cars = flat.shape[1] // STATE_DIM
    if n_cars < 2:
        raise ValueError(f"multi-car step needs at least 2 cars, got {n_cars}")
    actions = np.asarray(actions, dtype=np.float64).reshape(1, -1)
    if actions.shape[1] != 2 * n_cars:
        raise ValueError(f"expected {2 * n_cars} actions for {n_cars} cars, got {actions.shape[1]}")
    nxt = _integrate_cars(flat, actions, n_cars, p, step)
    reward, over_beta, off, s = multicar_rewards(nxt, n_cars, track)
    return StepOutcome(
        state=nxt[0], reward=float(reward[0]), violated_beta=bool(over_beta.any()),
        off_track=bool(off.any()), progress=float(s.min()),
    )


class MultiCarEnv(Environment):
    name = "multicar"

    def __init__(self, track: Track, n_cars: int, params: CarParams | None = None,
                 laps_required: int = 1, max_steps: int = 3000,
                 start_speed: float = CAR_START_SPEED, gap: float = MULTICAR_START_GAP):
        if n_cars < 2:
            raise ValueError(f"multi-car environment needs at least 2 cars, got {n_cars}")
        self.track = track
        self.n_cars = n_cars
        self.control_dim = 2 * n_cars
        self.params = params or CarParams()
        self.laps_required = laps_required
        self.max_steps = max_steps
        self.start_speed = start_speed
        self.gap = gap
        self.episodes: list[CarEpisode] = []

    @property
    def bounds(self) -> np.ndarray:
        return np.tile(car_bounds(self.params), (self.n_cars, 1))

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        self.episodes = [
            CarEpisode(self.track, self.laps_required, self.max_steps, self.params.control_dt, -i * self.gap)
            for i in range(self.n_cars)
        ]
        # car i starts i gaps behind the line so every car crosses it forward
        starts = [start_state(self.track, -i * self.gap, self.start_speed) for i in range(self.n_cars)]
        return np.concatenate(starts)

    def step(self, state, action) -> StepOutcome:
        step = self.episodes[0].steps
        out = multicar_step(state, action, self.track, self.params, step)
        nxt = out.state.reshape(1, -1)
        _, over_beta, off, s = multicar_rewards(nxt, self.n_cars, self.track)
        reasons = [ep.update(float(s[0, i]), bool(over_beta[0, i]), bool(off[0, i]))
                   for i, ep in enumerate(self.episodes)]
        failed = [(i, r) for i, r in enumerate(reasons) if r in ("beta limit", "off track", "step cap")]
        laps = min(ep.laps for ep in self.episodes)
        if failed:
            i, why = failed[0]
            reason = f"car {i}: {why}"
            logger.info("multi-car episode ended at step %d: %s", step + 1, reason)
        elif laps >= self.laps_required:
            reason = "laps"
        else:
            reason = ""
        return StepOutcome(
            state=out.state, reward=out.reward, violated_beta=out.violated_beta,
            off_track=out.off_track, done=bool(reason), progress=out.progress,
            laps=laps, reason=reason,
        )

    def batch_step(self, states, actions):
        nxt = _integrate_cars(states, actions, self.n_cars, self.params, 0)
        reward, *_ = multicar_rewards(nxt, self.n_cars, self.track)
        return nxt, reward, np.zeros(states.shape[0], dtype=bool)
