# mountain_car.py
"""
Continuous-action MountainCar.

    v' = clip(v + P*a - G*cos(3x), -vmax, vmax)
    x' = clip(x + v', xmin, xmax)      (v' >= 0 at the left wall)

Reward per step: -1 + |v'| + 100000 * [x' >= goal and v' > 0].
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from constants import (
    MC_ACTION_MAX, MC_GOAL, MC_GOAL_BONUS, MC_GRAVITY, MC_MAX_STEPS,
    MC_POS_MAX, MC_POS_MIN, MC_POWER, MC_START_RANGE, MC_VEL_MAX,
)
from environments import Environment, StepOutcome


@dataclass(frozen=True)
class MountainCarState:
    x: float
    v: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.v])

    @classmethod
    def from_array(cls, a) -> "MountainCarState":
        return cls(float(a[0]), float(a[1]))


def _propagate(x, v, a):
    v = np.clip(v + MC_POWER * a - MC_GRAVITY * np.cos(3.0 * x), -MC_VEL_MAX, MC_VEL_MAX)
    x = x + v
    at_wall = x <= MC_POS_MIN
    x = np.clip(x, MC_POS_MIN, MC_POS_MAX)
    v = np.where(at_wall, np.maximum(v, 0.0), v)
    goal = (x >= MC_GOAL) & (v > 0.0)
    reward = -1.0 + np.abs(v) + MC_GOAL_BONUS * goal
    return x, v, reward, goal


def mountaincar_step(state: MountainCarState, action: float, step_index: int | None = None):
    """One step; ``done`` on reaching the goal, or at the step cap when step_index is given."""
    a = float(np.clip(action, -MC_ACTION_MAX, MC_ACTION_MAX))
    x, v, reward, goal = _propagate(state.x, state.v, a)
    done = bool(goal)
    if step_index is not None and step_index + 1 >= MC_MAX_STEPS:
        done = True
    return MountainCarState(float(x), float(v)), float(reward), done


class MountainCarEnv(Environment):
    name = "mountaincar"
    control_dim = 1

    def __init__(self, max_steps: int = MC_MAX_STEPS, start=None):
        self.max_steps = max_steps
        self.start = start
        self.steps = 0

    @property
    def bounds(self) -> np.ndarray:
        return np.array([[-MC_ACTION_MAX, MC_ACTION_MAX]])

    @property
    def metric(self) -> str:
        return "steps"

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        self.steps = 0
        x0 = self.start if self.start is not None else rng.uniform(*MC_START_RANGE)
        return np.array([x0, 0.0])

    def step(self, state, action) -> StepOutcome:
        s, reward, goal = mountaincar_step(MountainCarState.from_array(state), float(np.ravel(action)[0]))
        self.steps += 1
        reason = "goal" if goal else ("step cap" if self.steps >= self.max_steps else "")
        return StepOutcome(
            state=s.as_array(), reward=reward, done=bool(reason),
            progress=s.x, laps=int(goal), reason=reason,
        )

    def batch_step(self, states, actions):
        a = np.clip(actions[:, 0], -MC_ACTION_MAX, MC_ACTION_MAX)
        x, v, reward, goal = _propagate(states[:, 0], states[:, 1], a)
        return np.stack([x, v], axis=1), reward, goal
