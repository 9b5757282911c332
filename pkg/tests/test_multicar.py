from itertools import combinations

import numpy as np
import pytest

from car_model import STATE_DIM, car_rewards
from errors import DynamicsError
from multicar import MultiCarEnv, multicar_rewards, multicar_step, pair_terms


def _cars(*positions, speed=10.0):
    rows = [[x, y, 0.0, speed, 0.0, 0.0, 0.0] for x, y in positions]
    return np.array(rows, dtype=np.float64).reshape(1, -1)


def test_two_cars_far_apart(straight_track):
    reward, *_ = multicar_rewards(_cars((0.0, 0.0), (100.0, 0.0)), 2, straight_track)
    assert reward[0] == pytest.approx(20.0 + 20.0 - 0.0 - 100.0)


def test_close_pair_penalty(straight_track):
    reward, *_ = multicar_rewards(_cars((50.0, 0.0), (53.0, 0.0)), 2, straight_track)
    assert reward[0] == pytest.approx(40.0 - 11000.0 - 3.0)


def test_penalty_counts_once_for_many_close_pairs(straight_track):
    reward, *_ = multicar_rewards(_cars((50.0, 0.0), (51.0, 0.0), (52.0, 0.0)), 3, straight_track)
    assert reward[0] == pytest.approx(60.0 - 11000.0 - (1.0 + 2.0 + 1.0))


def test_matches_brute_force_on_random_configurations(circle_track):
    rng = np.random.default_rng(0)
    for _ in range(200):
        n = int(rng.integers(2, 5))
        states = np.zeros((n, STATE_DIM))
        states[:, :2] = rng.uniform(-60, 60, size=(n, 2))
        states[:, 2] = rng.uniform(-np.pi, np.pi, n)
        states[:, 3] = rng.uniform(0, 40, n)
        states[:, 4] = rng.uniform(-5, 5, n)
        individual, *_ = car_rewards(states, circle_track)
        expected = individual.sum()
        close = False
        for i, j in combinations(range(n), 2):
            dist = np.hypot(*(states[i, :2] - states[j, :2]))
            expected -= dist
            close |= dist < 4.0
        expected -= 11000.0 * close
        reward, *_ = multicar_rewards(states.reshape(1, -1), n, circle_track)
        assert reward[0] == pytest.approx(expected, abs=1e-9, rel=1e-12)


def test_pair_terms_batched():
    pos = np.array([[[0.0, 0.0], [3.0, 4.0]], [[0.0, 0.0], [30.0, 40.0]]])
    total, close = pair_terms(pos)
    np.testing.assert_allclose(total, [5.0, 50.0])
    assert close.tolist() == [False, False]


def test_action_space_is_two_per_car(circle_track):
    env = MultiCarEnv(circle_track, 2)
    assert env.control_dim == 4
    assert env.bounds.shape == (4, 2)
    assert MultiCarEnv(circle_track, 4).control_dim == 8


def test_input_validation(circle_track):
    with pytest.raises(ValueError):
        MultiCarEnv(circle_track, 1)
    with pytest.raises(ValueError):
        multicar_step(_cars((50.0, 0.0)), np.zeros(2), circle_track)
    with pytest.raises(ValueError):
        multicar_step(_cars((50.0, 0.0), (0.0, 50.0)), np.zeros(3), circle_track)


def test_staggered_start(circle_track):
    env = MultiCarEnv(circle_track, 3)
    state = env.reset(np.random.default_rng(0)).reshape(3, STATE_DIM)
    _, s = circle_track.project(state[:, :2])[:2]
    assert s[0] == pytest.approx(0.0, abs=1e-6)
    assert s[1] == pytest.approx(circle_track.length - 10.0, abs=1e-3)
    assert s[2] == pytest.approx(circle_track.length - 20.0, abs=1e-3)
    assert [ep.laps for ep in env.episodes] == [0, -1, -1]


def test_episode_ends_when_any_car_fails(circle_track):
    env = MultiCarEnv(circle_track, 2, max_steps=1000)
    state = env.reset(np.random.default_rng(0))
    # car 1 leaves the track sideways
    state[STATE_DIM + 4] = 40.0
    state[STATE_DIM + 3] = 0.0
    for _ in range(30):
        out = env.step(state, np.zeros(4))
        state = out.state
        if out.done:
            break
    assert out.done
    assert out.reason.startswith("car 1:")
    assert out.off_track or out.violated_beta


def test_dynamics_error_names_the_car(circle_track):
    states = _cars((50.0, 0.0), (0.0, 50.0))
    states[0, STATE_DIM + 3] = np.nan
    with pytest.raises(DynamicsError) as err:
        multicar_step(states, np.zeros(4), circle_track, step=4)
    assert err.value.car == 1
    assert err.value.step == 4
