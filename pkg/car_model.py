# car_model.py
"""
Dynamic single-track (bicycle) car with Fiala brush-tire lateral forces.

State vector layout (also the column order of batched (K, 7) arrays):
    x, y [m], yaw [rad], vx, vy [m/s body frame], yaw_rate [rad/s], steer [rad]
Action: (steer command [rad], throttle/brake command in [-1, 1]).

Throttle drives the rear axle, power-limited at speed; braking is split
front/rear and fades out near standstill. Rear and front lateral capacity is
derated by the longitudinal force they carry (friction circle). Integration is
explicit Euler at the substep rate.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields

import numpy as np

from constants import (
    BETA_LIMIT_DEG, BETA_LIMIT_TIME, BETA_PENALTY, CAR_PARAMS, CAR_START_SPEED,
    CONTROL_DT, GRAVITY, OFF_TRACK_TIME, SPEED_WEIGHT, SUBSTEP_DT, THROTTLE_BOUNDS,
    TRACK_PENALTY,
)
from environments import Environment, StepOutcome
from errors import DynamicsError
from track import LapCounter, Track

logger = logging.getLogger(__name__)

STATE_DIM = 7
X, Y, YAW, VX, VY, YAW_RATE, STEER = range(STATE_DIM)


@dataclass(frozen=True)
class CarParams:
    mass: float = CAR_PARAMS["mass"]
    yaw_inertia: float = CAR_PARAMS["yaw_inertia"]
    a: float = CAR_PARAMS["a"]
    b: float = CAR_PARAMS["b"]
    c_front: float = CAR_PARAMS["c_front"]
    c_rear: float = CAR_PARAMS["c_rear"]
    mu_front: float = CAR_PARAMS["mu_front"]
    mu_rear: float = CAR_PARAMS["mu_rear"]
    drive_force_max: float = CAR_PARAMS["drive_force_max"]
    brake_force_max: float = CAR_PARAMS["brake_force_max"]
    power_max: float = CAR_PARAMS["power_max"]
    brake_front_share: float = CAR_PARAMS["brake_front_share"]
    drag: float = CAR_PARAMS["drag"]
    rolling: float = CAR_PARAMS["rolling"]
    steer_max: float = CAR_PARAMS["steer_max"]
    steer_rate_max: float = CAR_PARAMS["steer_rate_max"]
    vx_slip_floor: float = CAR_PARAMS["vx_slip_floor"]
    control_dt: float = CONTROL_DT
    substep_dt: float = SUBSTEP_DT
    fz_front: float = field(init=False)
    fz_rear: float = field(init=False)

    def __post_init__(self):
        wheelbase = self.a + self.b
        object.__setattr__(self, "fz_front", self.mass * GRAVITY * self.b / wheelbase)
        object.__setattr__(self, "fz_rear", self.mass * GRAVITY * self.a / wheelbase)

    @property
    def substeps(self) -> int:
        return max(1, int(round(self.control_dt / self.substep_dt)))

    def replace(self, **changes) -> "CarParams":
        kw = {f.name: getattr(self, f.name) for f in fields(self) if f.init}
        kw.update(changes)
        return CarParams(**kw)


@dataclass(frozen=True)
class CarState:
    pos: tuple[float, float]
    yaw: float
    vx: float
    vy: float
    yaw_rate: float
    steer: float

    def as_array(self) -> np.ndarray:
        return np.array([self.pos[0], self.pos[1], self.yaw, self.vx, self.vy, self.yaw_rate, self.steer])

    @classmethod
    def from_array(cls, a) -> "CarState":
        return cls((float(a[X]), float(a[Y])), float(a[YAW]), float(a[VX]), float(a[VY]),
                   float(a[YAW_RATE]), float(a[STEER]))

    @property
    def speed(self) -> float:
        return float(np.hypot(self.vx, self.vy))


def car_bounds(params: CarParams) -> np.ndarray:
    return np.array([[-params.steer_max, params.steer_max], list(THROTTLE_BOUNDS)])


def fiala_lateral_force(alpha, c_alpha, f_max):
    """Brush-tire lateral force: cubic in tan(alpha) up to full sliding, then -f_max*sign(alpha)."""
    tan_a = np.tan(alpha)
    alpha_sl = np.arctan(3.0 * f_max / c_alpha)
    linear = (-c_alpha * tan_a
              + c_alpha**2 / (3.0 * f_max) * np.abs(tan_a) * tan_a
              - c_alpha**3 / (27.0 * f_max**2) * tan_a**3)
    return np.where(np.abs(alpha) < alpha_sl, linear, -f_max * np.sign(alpha))


def _derate(f_max, fx):
    return np.sqrt(np.maximum(f_max**2 - fx**2, (0.1 * f_max) ** 2))


def longitudinal_forces(vx, throttle, p: CarParams):
    """(front, rear) longitudinal tire forces for a throttle/brake command."""
    drive_cap = np.minimum(p.drive_force_max, p.power_max / np.maximum(vx, 1.0))
    drive = np.maximum(throttle, 0.0) * drive_cap
    brake = np.minimum(throttle, 0.0) * p.brake_force_max * np.tanh(np.maximum(vx, 0.0))
    fx_f = p.brake_front_share * brake
    fx_r = drive + (1.0 - p.brake_front_share) * brake
    lim_f, lim_r = 0.95 * p.mu_front * p.fz_front, 0.95 * p.mu_rear * p.fz_rear
    return np.clip(fx_f, -lim_f, lim_f), np.clip(fx_r, -lim_r, lim_r)


def single_track_derivatives(s: np.ndarray, throttle, p: CarParams) -> np.ndarray:
    """Time derivative of (K, 7) states; steering enters through s[:, STEER]."""
    yaw, vx, vy, r, delta = s[:, YAW], s[:, VX], s[:, VY], s[:, YAW_RATE], s[:, STEER]
    vx_eff = np.maximum(vx, p.vx_slip_floor)
    alpha_f = np.arctan2(vy + p.a * r, vx_eff) - delta
    alpha_r = np.arctan2(vy - p.b * r, vx_eff)
    fx_f, fx_r = longitudinal_forces(vx, throttle, p)
    fy_f = fiala_lateral_force(alpha_f, p.c_front, _derate(p.mu_front * p.fz_front, fx_f))
    fy_r = fiala_lateral_force(alpha_r, p.c_rear, _derate(p.mu_rear * p.fz_rear, fx_r))
    resist = p.drag * vx * np.abs(vx) + p.rolling * p.mass * GRAVITY * np.tanh(vx / 0.5)
    cos_d, sin_d = np.cos(delta), np.sin(delta)
    front_lat = fx_f * sin_d + fy_f * cos_d
    out = np.zeros_like(s)
    out[:, X] = vx * np.cos(yaw) - vy * np.sin(yaw)
    out[:, Y] = vx * np.sin(yaw) + vy * np.cos(yaw)
    out[:, YAW] = r
    out[:, VX] = (fx_r + fx_f * cos_d - fy_f * sin_d - resist) / p.mass + r * vy
    out[:, VY] = (fy_r + front_lat) / p.mass - r * vx
    out[:, YAW_RATE] = (p.a * front_lat - p.b * fy_r) / p.yaw_inertia
    return out


def integrate(states, actions, p: CarParams, step: int = 0) -> np.ndarray:
    """Advance (K, 7) states through one control period of Euler substeps."""
    s = np.array(states, dtype=np.float64, copy=True)
    steer_cmd = np.clip(actions[:, 0], -p.steer_max, p.steer_max)
    throttle = np.clip(actions[:, 1], *THROTTLE_BOUNDS)
    dt = p.control_dt / p.substeps
    max_turn = p.steer_rate_max * dt
    for sub in range(p.substeps):
        s[:, STEER] += np.clip(steer_cmd - s[:, STEER], -max_turn, max_turn)
        s += dt * single_track_derivatives(s, throttle, p)
        if not np.all(np.isfinite(s)):
            raise DynamicsError(step, substep=sub)
    return s


def sideslip(states) -> np.ndarray:
    return np.arctan2(states[:, VY], states[:, VX])


def car_rewards(states, track: Track):
    """Per-row reward plus (beta over limit, outside track, d, s)."""
    d, s, inside = track.project(states[:, [X, Y]])
    speed = np.hypot(states[:, VX], states[:, VY])
    over_beta = np.abs(sideslip(states)) > np.deg2rad(BETA_LIMIT_DEG)
    off = ~inside
    reward = SPEED_WEIGHT * speed - np.abs(d) - BETA_PENALTY * over_beta - TRACK_PENALTY * off
    return reward, over_beta, off, d, s


def car_step(state: CarState, action, track: Track, params: CarParams | None = None, step: int = 0) -> StepOutcome:
    """Pure single-car step; termination rules live in CarEpisode."""
    p = params or CarParams()
    nxt = integrate(state.as_array()[None, :], np.asarray(action, dtype=np.float64).reshape(1, 2), p, step)
    reward, over_beta, off, _, s = car_rewards(nxt, track)
    return StepOutcome(
        state=nxt[0], reward=float(reward[0]), violated_beta=bool(over_beta[0]),
        off_track=bool(off[0]), progress=float(s[0]),
    )


class CarEpisode:
    """Episode monitor: laps, beta-over-limit time, off-track time, step cap."""

    def __init__(self, track: Track, laps_required: int, max_steps: int, dt: float = CONTROL_DT,
                 start_s: float = 0.0):
        self.laps_required = laps_required
        self.max_steps = max_steps
        self.dt = dt
        self.counter = LapCounter(track.length, start_s=start_s)
        self.steps = 0
        self.beta_time = 0.0
        self.off_time = 0.0
        self.beta_violation = False
        self.track_violation = False

    def update(self, s: float, over_beta: bool, off: bool) -> str:
        """Record one control step; returns the termination reason or ''."""
        self.steps += 1
        laps = self.counter.update(s)
        self.beta_time = self.beta_time + self.dt if over_beta else 0.0
        self.off_time = self.off_time + self.dt if off else 0.0
        self.beta_violation |= over_beta
        self.track_violation |= off
        if laps >= self.laps_required:
            return "laps"
        if self.beta_time > BETA_LIMIT_TIME:
            return "beta limit"
        if self.off_time > OFF_TRACK_TIME:
            return "off track"
        if self.steps >= self.max_steps:
            return "step cap"
        return ""

    @property
    def laps(self) -> int:
        return self.counter.laps


def start_state(track: Track, s0: float, speed: float) -> np.ndarray:
    pos, heading = track.pose_at(s0)
    return CarState((float(pos[0]), float(pos[1])), heading, speed, 0.0, 0.0, 0.0).as_array()


class CarEnv(Environment):
    name = "car"
    control_dim = 2

    def __init__(self, track: Track, params: CarParams | None = None, laps_required: int = 1,
                 max_steps: int = 3000, start_speed: float = CAR_START_SPEED):
        self.track = track
        self.params = params or CarParams()
        self.laps_required = laps_required
        self.max_steps = max_steps
        self.start_speed = start_speed
        self.episode = CarEpisode(track, laps_required, max_steps, self.params.control_dt)

    @property
    def bounds(self) -> np.ndarray:
        return car_bounds(self.params)

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        self.episode = CarEpisode(self.track, self.laps_required, self.max_steps, self.params.control_dt)
        return start_state(self.track, 0.0, self.start_speed)

    def step(self, state, action) -> StepOutcome:
        out = car_step(CarState.from_array(state), action, self.track, self.params, self.episode.steps)
        reason = self.episode.update(out.progress, out.violated_beta, out.off_track)
        if reason and reason != "laps":
            logger.info("car episode ended at step %d: %s", self.episode.steps, reason)
        return StepOutcome(
            state=out.state, reward=out.reward, violated_beta=out.violated_beta,
            off_track=out.off_track, done=bool(reason), progress=out.progress,
            laps=self.episode.laps, reason=reason,
        )

    def batch_step(self, states, actions):
        nxt = integrate(states, actions, self.params)
        reward, *_ = car_rewards(nxt, self.track)
        return nxt, reward, np.zeros(states.shape[0], dtype=bool)
