# environments.py
"""
Plant interface shared by the controller and the harness.

States are flat float arrays so K rollouts can be propagated as one (K, n)
array. ``batch_step`` is pure (state in, state out); ``step`` advances one
executed control step and updates the environment's episode monitor, so each
trial owns its own environment object.
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from constants import CAR_MAX_STEPS, MC_MAX_STEPS


@dataclass(frozen=True, eq=False)
class StepOutcome:
    state: np.ndarray
    reward: float
    violated_beta: bool = False
    off_track: bool = False
    done: bool = False
    progress: float = 0.0
    laps: int = 0
    reason: str = ""   # which termination rule fired, "" while running


class Environment(ABC):
    name: str = ""
    control_dim: int = 1
    laps_required: int = 1

    @property
    @abstractmethod
    def bounds(self) -> np.ndarray:
        """(m, 2) actuator bounds used by g."""

    @abstractmethod
    def reset(self, rng: np.random.Generator) -> np.ndarray:
        """Start an episode; returns the initial state array."""

    @abstractmethod
    def step(self, state: np.ndarray, action: np.ndarray) -> StepOutcome:
        """Execute one shaped command and update the episode monitor."""

    @abstractmethod
    def batch_step(self, states: np.ndarray, actions: np.ndarray):
        """(K, n), (K, m) -> (next states, rewards (K,), done mask (K,))."""

    def terminal_reward(self, states: np.ndarray) -> np.ndarray:
        return np.zeros(states.shape[0])

    @property
    def metric(self) -> str:
        """Column the sweep summary plots for this environment."""
        return "total_reward"


def make_environment(config) -> Environment:
    """Build a fresh environment for one trial from an ExperimentConfig."""
    from car_model import CarEnv, CarParams
    from mountain_car import MountainCarEnv
    from multicar import MultiCarEnv
    from track import make_track

    if config.env == "mountaincar":
        return MountainCarEnv(config.max_steps or MC_MAX_STEPS)
    track = make_track(config.track, require_closed=True)
    params = CarParams()
    if config.env == "car":
        return CarEnv(track, params, laps_required=config.laps, max_steps=config.max_steps or CAR_MAX_STEPS)
    if config.env == "multicar":
        return MultiCarEnv(track, config.n_cars, params, laps_required=config.laps, max_steps=config.max_steps or CAR_MAX_STEPS)
    raise ValueError(f"Unknown environment '{config.env}'")
