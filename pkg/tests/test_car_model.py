import numpy as np
import pytest
from numpy.testing import assert_allclose

from car_model import (
    STATE_DIM, VX, VY, Y, CarEnv, CarEpisode, CarParams, CarState, car_bounds, car_rewards,
    car_step, fiala_lateral_force, integrate,
)
from errors import DynamicsError


def _state(x=0.0, y=0.0, yaw=0.0, vx=10.0, vy=0.0, r=0.0, steer=0.0):
    return np.array([[x, y, yaw, vx, vy, r, steer]], dtype=np.float64)


# ---------- rewards ----------

def test_centerline_reward(straight_track):
    reward, over_beta, off, d, _ = car_rewards(_state(x=50.0), straight_track)
    assert reward[0] == pytest.approx(20.0)
    assert not over_beta[0] and not off[0]
    assert d[0] == 0.0


def test_outside_boundary_penalty(straight_track):
    reward, _, off, _, _ = car_rewards(_state(x=50.0, y=10.0), straight_track)
    assert off[0]
    assert reward[0] == pytest.approx(20.0 - 10.0 - 1e6)


def test_sideslip_penalty(straight_track):
    reward, over_beta, _, _, _ = car_rewards(_state(x=50.0, vx=5.0, vy=6.0), straight_track)
    assert over_beta[0]
    assert reward[0] == pytest.approx(2.0 * np.hypot(5.0, 6.0) - 5000.0)


# ---------- dynamics ----------

def test_straight_line_stays_straight():
    p = CarParams()
    s = _state(vx=8.0)
    for _ in range(100):
        s = integrate(s, np.array([[0.0, 0.4]]), p)
    assert abs(s[0, Y]) < 1e-3
    assert s[0, VX] > 8.0


def test_coasting_never_gains_speed():
    p = CarParams()
    s = _state(vx=25.0)
    speeds = [25.0]
    for _ in range(60):
        s = integrate(s, np.zeros((1, 2)), p)
        speeds.append(float(np.hypot(s[0, VX], s[0, VY])))
    assert np.all(np.diff(speeds) <= 1e-12)
    assert speeds[-1] > 0.0


def test_halving_the_substep_barely_moves_the_state():
    coarse = CarParams()
    fine = coarse.replace(substep_dt=0.005)
    assert fine.substeps == 20
    s = _state(vx=30.0, vy=0.2, r=0.05, steer=0.01)
    a = np.array([[0.02, 0.3]])
    out_c, out_f = integrate(s, a, coarse)[0], integrate(s, a, fine)[0]
    assert_allclose(out_f, out_c, rtol=0.01, atol=0.01)


def test_steering_is_rate_limited_and_clamped():
    p = CarParams()
    s = integrate(_state(), np.array([[3.0, 0.0]]), p)
    assert s[0, -1] == pytest.approx(p.steer_rate_max * p.control_dt)
    for _ in range(4):
        s = integrate(s, np.array([[3.0, 0.0]]), p)
    assert s[0, -1] == pytest.approx(p.steer_max)


def test_top_speed_reaches_highway_scale():
    p = CarParams()
    s = _state(vx=30.0)
    for _ in range(600):
        s = integrate(s, np.array([[0.0, 1.0]]), p)
    assert s[0, VX] >= 39.0


def test_non_finite_state_raises_with_substep():
    with pytest.raises(DynamicsError) as err:
        integrate(_state(vx=np.nan), np.zeros((1, 2)), CarParams(), step=7)
    assert err.value.step == 7
    assert err.value.substep == 0


def test_fiala_force_saturates():
    f_max = 5000.0
    big = fiala_lateral_force(np.array([0.5, -0.5]), 100000.0, f_max)
    assert_allclose(big, [-f_max, f_max])
    small = fiala_lateral_force(np.array([1e-4]), 100000.0, f_max)
    assert small[0] == pytest.approx(-10.0, rel=1e-3)


def test_bounds():
    p = CarParams()
    assert_allclose(car_bounds(p), [[-p.steer_max, p.steer_max], [-1.0, 1.0]])


def test_car_step_matches_batched_rewards(circle_track):
    s = CarState((50.0, 0.0), np.pi / 2, 12.0, 0.0, 0.0, 0.0)
    out = car_step(s, (0.1, 0.2), circle_track)
    nxt = integrate(s.as_array()[None, :], np.array([[0.1, 0.2]]), CarParams())
    reward, *_ = car_rewards(nxt, circle_track)
    assert out.reward == pytest.approx(reward[0])
    assert out.state.shape == (STATE_DIM,)


# ---------- episodes ----------

def test_beta_limit_ends_after_five_seconds(circle_track):
    episode = CarEpisode(circle_track, laps_required=2, max_steps=1000)
    for step in range(1, 60):
        reason = episode.update(100.0, True, False)
        if reason:
            break
    assert reason == "beta limit"
    assert 50 <= step <= 52
    assert episode.beta_violation and not episode.track_violation


def test_off_track_ends_after_one_second(circle_track):
    episode = CarEpisode(circle_track, laps_required=2, max_steps=1000)
    for step in range(1, 30):
        reason = episode.update(100.0, False, True)
        if reason:
            break
    assert reason == "off track"
    assert 10 <= step <= 12


def test_violation_timer_resets_when_back_in_bounds(circle_track):
    episode = CarEpisode(circle_track, laps_required=2, max_steps=1000)
    for _ in range(40):
        for off in (True,) * 8 + (False,):
            assert episode.update(100.0, False, off) == ""
    assert episode.track_violation


def test_step_cap(circle_track):
    episode = CarEpisode(circle_track, laps_required=2, max_steps=3)
    assert [episode.update(100.0, False, False) for _ in range(3)] == ["", "", "step cap"]


def test_lap_completion(circle_track):
    episode = CarEpisode(circle_track, laps_required=1, max_steps=1000)
    L = circle_track.length
    reasons = [episode.update(s, False, False) for s in (1.0, 50.0, 150.0, 250.0, L - 2.0, 1.5)]
    assert reasons[-1] == "laps" and episode.laps == 1
    assert all(r == "" for r in reasons[:-1])


def test_env_reset_and_step(circle_track):
    env = CarEnv(circle_track, max_steps=5)
    state = env.reset(np.random.default_rng(0))
    assert_allclose(state[:2], [50.0, 0.0], atol=1e-9)
    assert state[VX] == pytest.approx(8.0)
    assert env.control_dim == 2 and env.metric == "total_reward"
    for _ in range(5):
        out = env.step(state, np.zeros(2))
        state = out.state
    assert out.done and out.reason == "step cap"
    assert not out.off_track
