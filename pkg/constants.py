# constants.py
from pathlib import Path

# === Bundled data (next to cli.py) ===
HERE = Path(__file__).resolve().parent
PRESETS_DIR = HERE / "presets"
TRACKS_DIR = HERE / "tracks"
PRESET_SUFFIX = ".cfg"
DEFAULT_TRACK = "loop_200.track"
APP_TITLE = "Sampling MPC Benchmark Results"

# === MountainCar (continuous action variant) ===
MC_POS_MIN = -1.2
MC_POS_MAX = 0.6
MC_VEL_MAX = 0.07
MC_GOAL = 0.5
MC_POWER = 0.001
MC_GRAVITY = 0.0025
MC_ACTION_MAX = 1.0
MC_START_RANGE = (-0.6, -0.4)
MC_MAX_STEPS = 200
MC_GOAL_BONUS = 100000.0

# === Single-track car (full-scale experimental sedan) ===
GRAVITY = 9.81
CAR_PARAMS = {
    "mass": 1800.0,           # kg
    "yaw_inertia": 2900.0,    # kg m^2
    "a": 1.35,                # CG to front axle, m
    "b": 1.45,                # CG to rear axle, m
    "c_front": 160000.0,      # cornering stiffness, N/rad
    "c_rear": 180000.0,
    "mu_front": 1.05,
    "mu_rear": 1.0,
    "drive_force_max": 7000.0,  # N at full throttle
    "brake_force_max": 15000.0,
    "power_max": 150000.0,      # W, caps drive force at speed
    "brake_front_share": 0.6,
    "drag": 0.45,               # N per (m/s)^2
    "rolling": 0.015,           # fraction of weight
    "steer_max": 0.5,           # rad
    "steer_rate_max": 1.5,      # rad/s
    "vx_slip_floor": 1.0,       # m/s, slip angles use max(vx, floor)
}
CONTROL_DT = 0.1   # 10 Hz commands
SUBSTEP_DT = 0.01  # 100 Hz dynamics
CAR_START_SPEED = 8.0
THROTTLE_BOUNDS = (-1.0, 1.0)

# === Racing rewards ===
SPEED_WEIGHT = 2.0
BETA_LIMIT_DEG = 45.0
BETA_PENALTY = 5000.0
TRACK_PENALTY = 1000000.0
BETA_LIMIT_TIME = 5.0      # s over the beta limit before termination
OFF_TRACK_TIME = 1.0       # s outside the boundary before termination
LAP_HYSTERESIS = 5.0       # m
PROXIMITY_RADIUS = 4.0     # m
PROXIMITY_PENALTY = 11000.0
MULTICAR_START_GAP = 10.0  # m of arclength between staggered starts
CLOSED_TRACK_TOL = 1.0     # m
PROJECTION_NEIGHBOURS = 16  # centerline vertices queried per point before the exact fallback

# === Numerics ===
SYMMETRY_TOL = 1e-10
REGULARIZATION_SCALE = 1e-8
REGULARIZATION_DOUBLINGS = 3

# === Controller / AIS defaults ===
DEFAULT_TAIL_INIT = "repeat"
TAIL_INIT_CHOICES = ("repeat", "zero", "constant")
AIS_CHOICES = ("mu", "mu-sigma", "ce", "cma", "pmc")
ALGO_CHOICES = ("mppi", "mpopi")
ENV_CHOICES = ("mountaincar", "car", "multicar")
EXECUTOR_CHOICES = ("thread", "process")
CE_ELITE_FRACTION = 0.125
CE_SMOOTHING_RATE = 0.5
COV_ESTIMATOR_CHOICES = ("sample", "shrinkage")
CMA_MEAN_LR = 1.0
CMA_COV_LR = 0.5
AIS_LAMBDA_FACTOR = 10.0

# === Experiment defaults ===
CAR_MAX_STEPS = 3000       # 300 s at 10 Hz
DEFAULT_NOISE_STD = {       # per car channel: (steer rad, throttle) or (force,)
    "mountaincar": (1.0,),
    "car": (0.15, 0.5),
    "multicar": (0.15, 0.5),
}
CONFIG_USED = "config.used.cfg"

# === Results ===
CI_Z = 1.96
TRIALS_CSV = "trials.csv"
SUMMARY_CSV = "summary.csv"
GNUPLOT_DAT = "summary.gnuplot.dat"
PAIRED_CSV = "paired.csv"
DIAGNOSTICS_CSV = "diagnostics.csv"
RESULTS_XLSX = "results.xlsx"
TRIAL_COLUMNS = [
    "trial", "seed", "env", "algo", "ais", "K", "L", "T", "effective_samples",
    "total_reward", "steps", "laps", "beta_violation", "track_violation",
    "wall_time_s", "fail_reason",
]
SUMMARY_COLUMNS = [
    "algo", "ais", "K", "L", "effective_samples", "trials",
    "mean_reward", "ci_reward", "mean_steps", "ci_steps", "completion_rate",
]

# Viewer palette
PRIMARY = "#0f766e"     # teal-700
PRIMARY_HOVER = "#115e59"
ACCENT = "#f59e0b"      # amber-500
TEXT = "#0f172a"
BORDER = "#cbd5e1"
RING = "rgba(15, 118, 110, 0.35)"
APP_HEADER_HTML = """
<div class="app-header">
<div class="app-title">Sampling MPC Benchmark Results</div>
<div class="app-subtitle">Point at an output directory written by <code>cli.py run|sweep|compare</code>.</div>
</div>
"""
