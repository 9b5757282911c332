import numpy as np
import pytest

from environments import Environment, StepOutcome
from track import build_track


class NullEnv(Environment):
    """F(x, u) = x, zero reward: every sequence costs nothing."""
    name = "null"

    def __init__(self, control_dim=1, bound=1e9):
        self.control_dim = control_dim
        self._bounds = np.tile([-bound, bound], (control_dim, 1))

    @property
    def bounds(self):
        return self._bounds

    def reset(self, rng):
        return np.zeros(1)

    def step(self, state, action):
        return StepOutcome(state=np.array(state), reward=0.0)

    def batch_step(self, states, actions):
        return states.copy(), np.zeros(states.shape[0]), np.zeros(states.shape[0], dtype=bool)


class QuadraticEnv(Environment):
    """Integrator x' = x + u with reward -(x - target)^2."""
    name = "quadratic"
    control_dim = 1

    def __init__(self, target=1.0):
        self.target = target

    @property
    def bounds(self):
        return np.array([[-5.0, 5.0]])

    def reset(self, rng):
        return np.zeros(1)

    def step(self, state, action):
        x = state + action
        return StepOutcome(state=x, reward=float(-(x[0] - self.target) ** 2))

    def batch_step(self, states, actions):
        x = states + actions
        return x, -(x[:, 0] - self.target) ** 2, np.zeros(states.shape[0], dtype=bool)


class BlowUpEnv(NullEnv):
    """Counts up by one per step and returns NaN once the count reaches 3."""

    def batch_step(self, states, actions):
        nxt = states + 1.0
        nxt[nxt >= 3.0] = np.nan
        return nxt, np.zeros(states.shape[0]), np.zeros(states.shape[0], dtype=bool)


@pytest.fixture
def null_env():
    return NullEnv()


@pytest.fixture
def quadratic_env():
    return QuadraticEnv()


@pytest.fixture
def circle_track():
    """Counter-clockwise circle of radius 50 m, 720 points, half width 5 m."""
    theta = np.linspace(0.0, 2.0 * np.pi, 720, endpoint=False)
    pts = np.column_stack([50.0 * np.cos(theta), 50.0 * np.sin(theta), np.full(theta.size, 5.0)])
    return build_track(pts, require_closed=True)


@pytest.fixture
def straight_track():
    """Open straight along +x, 100 m long, half width 4 m."""
    x = np.linspace(0.0, 100.0, 11)
    return build_track(np.column_stack([x, np.zeros_like(x), np.full_like(x, 4.0)]))
