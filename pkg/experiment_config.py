# experiment_config.py
"""
Experiment configuration: flat ``key = value`` files with CLI overrides.

Load order is defaults -> config file (path or bundled preset name) ->
command-line flags; later sources win. Every value is validated once the
layers are merged, so a bad preset and a bad flag fail the same way.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from ais import AisParams, AisStrategy, make_strategy
from constants import (
    AIS_CHOICES, AIS_LAMBDA_FACTOR, ALGO_CHOICES, CE_ELITE_FRACTION, CE_SMOOTHING_RATE,
    CMA_COV_LR, CMA_MEAN_LR, COV_ESTIMATOR_CHOICES, DEFAULT_NOISE_STD, DEFAULT_TAIL_INIT,
    DEFAULT_TRACK, ENV_CHOICES, EXECUTOR_CHOICES, PRESET_SUFFIX, PRESETS_DIR, TAIL_INIT_CHOICES,
)
from controller import ControllerConfig
from errors import AisError, ConfigError, CovarianceError, DimensionError
from io_utils import FileIO

logger = logging.getLogger(__name__)

# file key -> dataclass field, where they differ
KEY_ALIASES = {"lambda": "lam"}
_FIELD_KEYS = {v: k for k, v in KEY_ALIASES.items()}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


@dataclass(frozen=True)
class ExperimentConfig:
    env: str = "mountaincar"
    n_cars: int = 2
    algo: str = "mpopi"
    ais: str = "ce"
    samples: int = 20
    iters: int = 1
    horizon: int = 60
    lam: float = 1.0
    alpha: float = 0.0
    ais_lambda: float | None = None
    noise_std: tuple[float, ...] = ()
    tail_init: str = DEFAULT_TAIL_INIT
    tail_value: float | None = None
    smoothing: float = 0.0
    elite_fraction: float = CE_ELITE_FRACTION
    cov_estimator: str = "sample"
    smoothing_rate: float = CE_SMOOTHING_RATE
    cma_mean_lr: float = CMA_MEAN_LR
    cma_cov_lr: float = CMA_COV_LR
    trials: int = 10
    seed: int = 0
    track: str = DEFAULT_TRACK
    laps: int = 1
    max_steps: int = 0          # 0 = environment default
    out: str = "results"
    threads: int = 1
    executor: str = "thread"   # "process" runs trials in worker processes
    levels: tuple[tuple[int, int], ...] = field(default_factory=tuple)
    record_steps: bool = False
    wall_clock: bool = True
    excel: bool = False

    # ----- derived -----
    @property
    def K(self) -> int:
        return self.samples

    @property
    def L(self) -> int:
        return self.iters

    @property
    def effective_samples(self) -> int:
        return self.samples * self.iters

    @property
    def resolved_ais_lambda(self) -> float:
        return self.ais_lambda if self.ais_lambda is not None else AIS_LAMBDA_FACTOR * self.lam

    @property
    def ais_label(self) -> str:
        return "none" if self.algo == "mppi" else self.ais

    @property
    def channel_std(self) -> tuple[float, ...]:
        """Noise std per car channel (environment default when not configured)."""
        return self.noise_std or DEFAULT_NOISE_STD[self.env]

    def sweep_levels(self) -> list[tuple[int, int]]:
        return list(self.levels) or [(self.samples, self.iters)]

    def with_level(self, K: int, L: int) -> "ExperimentConfig":
        return replace(self, samples=K, iters=L)

    def replace(self, **changes) -> "ExperimentConfig":
        return validate(replace(self, **changes))

    # ----- builders -----
    def ais_params(self) -> AisParams:
        try:
            return AisParams(
                ais_lambda=self.resolved_ais_lambda, elite_fraction=self.elite_fraction,
                cov_estimator=self.cov_estimator, smoothing_rate=self.smoothing_rate,
                cma_mean_lr=self.cma_mean_lr, cma_cov_lr=self.cma_cov_lr,
            )
        except AisError as e:
            raise ConfigError(str(e)) from e

    def strategy(self) -> AisStrategy | None:
        return None if self.algo == "mppi" else make_strategy(self.ais, self.ais_params())

    def controller_config(self, control_dim: int) -> ControllerConfig:
        std = self.channel_std
        if control_dim % len(std):
            raise ConfigError(f"noise_std has {len(std)} entries; control dimension is {control_dim}")
        per_step = std * (control_dim // len(std))
        try:
            return ControllerConfig.from_noise_std(
                self.samples, self.iters, self.horizon, per_step, self.lam, self.alpha,
                ais_params=self.ais_params(), tail_init=self.tail_init,
                tail_value=self.tail_value, smoothing=self.smoothing,
            )
        except (CovarianceError, DimensionError) as e:
            raise ConfigError(f"bad controller settings: {e}") from e

    def to_text(self) -> str:
        """Serialise back to the key = value format (provenance file)."""
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None or v == ():
                continue
            lines.append(f"{_FIELD_KEYS.get(f.name, f.name)} = {_format_value(v)}")
        return "\n".join(lines) + "\n"


# ---------- parsing ----------

def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple) and v and isinstance(v[0], tuple):
        return ", ".join(f"{k}x{l}" for k, l in v)
    if isinstance(v, tuple):
        return ", ".join(repr(x) for x in v)
    return str(v)


def parse_levels(text: str) -> tuple[tuple[int, int], ...]:
    """'20x1, 20x2, 40x1' -> ((20, 1), (20, 2), (40, 1)). A bare '40' means 40x1."""
    out = []
    for item in str(text).replace(";", ",").split(","):
        item = item.strip().lower()
        if not item:
            continue
        k, _, l = item.partition("x")
        try:
            out.append((int(k), int(l) if l else 1))
        except ValueError:
            raise ConfigError(f"bad level '{item}', expected KxL such as 20x3") from None
    return tuple(out)


def _coerce(key: str, name: str, raw):
    default = ExperimentConfig.__dataclass_fields__[name].type
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    try:
        if name == "levels":
            return parse_levels(text)
        if name == "noise_std":
            return tuple(float(x) for x in text.split(",") if x.strip())
        if name in ("ais_lambda", "tail_value"):
            return None if text.lower() in ("", "none", "auto") else float(text)
        if "bool" in default:
            low = text.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(text)
        if "int" in default:
            return int(text)
        if "float" in default:
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"bad value for '{key}': {raw!r}") from None


def parse_config_text(text: str, path: str = "") -> dict:
    """Parse key = value lines ('#' comments) into typed field values."""
    where = path or "<config>"
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"{where}:{lineno}: expected 'key = value', got {line!r}")
        values.update(normalize_overrides({key: raw}, f"{where}:{lineno}: "))
    return values


def normalize_overrides(overrides: dict, where: str = "") -> dict:
    """Map file/flag keys to field names and coerce string values."""
    names = {f.name for f in fields(ExperimentConfig)}
    out = {}
    for key, raw in overrides.items():
        if raw is None:
            continue
        k = key.strip().replace("-", "_")
        name = KEY_ALIASES.get(k, k)
        if name not in names:
            raise ConfigError(f"{where}unknown config key '{key}'")
        out[name] = _coerce(key, name, raw)
    return out


def resolve_config_path(spec) -> Path:
    """Config path, or the name of a bundled preset (with or without .cfg)."""
    p = Path(spec)
    if p.exists():
        return p
    preset = PRESETS_DIR / (p.name if p.suffix == PRESET_SUFFIX else p.name + PRESET_SUFFIX)
    if preset.exists():
        return preset
    raise ConfigError(f"config '{spec}' is neither a file nor a bundled preset in {PRESETS_DIR}")


def list_presets() -> list[str]:
    return sorted(p.stem for p in PRESETS_DIR.glob(f"*{PRESET_SUFFIX}"))


def load_config(spec=None, overrides: dict | None = None) -> ExperimentConfig:
    values = {}
    if spec:
        path = resolve_config_path(spec)
        values.update(parse_config_text(FileIO.read_text(path), str(path)))
        logger.debug("loaded %d keys from %s", len(values), path)
    values.update(normalize_overrides(overrides or {}))
    return validate(ExperimentConfig(**values))


# ---------- validation ----------

def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    def check(ok: bool, msg: str):
        if not ok:
            raise ConfigError(msg)

    check(cfg.env in ENV_CHOICES, f"env must be one of {ENV_CHOICES}, got '{cfg.env}'")
    check(cfg.algo in ALGO_CHOICES, f"algo must be one of {ALGO_CHOICES}, got '{cfg.algo}'")
    check(cfg.ais in AIS_CHOICES, f"ais must be one of {AIS_CHOICES}, got '{cfg.ais}'")
    check(cfg.tail_init in TAIL_INIT_CHOICES, f"tail_init must be one of {TAIL_INIT_CHOICES}")
    check(cfg.tail_init != "constant" or cfg.tail_value is not None, "tail_init = constant needs tail_value")
    check(cfg.cov_estimator in COV_ESTIMATOR_CHOICES,
          f"cov_estimator must be one of {COV_ESTIMATOR_CHOICES}, got '{cfg.cov_estimator}'")
    check(cfg.samples >= 1, f"samples must be >= 1, got {cfg.samples}")
    check(cfg.iters >= 1, f"iters must be >= 1, got {cfg.iters}")
    check(cfg.algo != "mppi" or cfg.iters == 1, f"mppi runs a single iteration, got iters = {cfg.iters}")
    check(cfg.horizon >= 1, f"horizon must be >= 1, got {cfg.horizon}")
    check(cfg.lam > 0, f"lambda must be positive, got {cfg.lam}")
    check(0.0 <= cfg.alpha <= 1.0, f"alpha must lie in [0, 1], got {cfg.alpha}")
    check(cfg.ais_lambda is None or cfg.ais_lambda > 0, f"ais_lambda must be positive, got {cfg.ais_lambda}")
    check(0.0 <= cfg.smoothing < 1.0, f"smoothing must lie in [0, 1), got {cfg.smoothing}")
    check(cfg.trials >= 1, f"trials must be >= 1, got {cfg.trials}")
    check(0 <= cfg.seed < 2**64, f"seed must be a 64-bit unsigned integer, got {cfg.seed}")
    check(cfg.laps >= 1, f"laps must be >= 1, got {cfg.laps}")
    check(cfg.max_steps >= 0, f"max_steps must be >= 0, got {cfg.max_steps}")
    check(cfg.threads >= 1, f"threads must be >= 1, got {cfg.threads}")
    check(cfg.executor in EXECUTOR_CHOICES, f"executor must be one of {EXECUTOR_CHOICES}, got '{cfg.executor}'")
    check(cfg.env != "multicar" or cfg.n_cars >= 2, f"multicar needs n_cars >= 2, got {cfg.n_cars}")
    expected = 1 if cfg.env == "mountaincar" else 2
    check(len(cfg.channel_std) == expected and all(s > 0 for s in cfg.channel_std),
          f"noise_std needs {expected} positive value(s) per car, got {cfg.channel_std}")
    for k, l in cfg.sweep_levels():
        check(k >= 1 and l >= 1, f"level {k}x{l} must have K >= 1 and L >= 1")
        check(cfg.algo != "mppi" or l == 1, f"mppi runs a single iteration; level {k}x{l} has L = {l}")
    if cfg.algo == "mpopi" and cfg.ais in ("mu-sigma", "cma"):
        check(all(k >= 2 for k, _ in cfg.sweep_levels()), f"ais '{cfg.ais}' needs samples >= 2")
    cfg.ais_params()
    return cfg

