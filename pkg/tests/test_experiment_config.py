import pytest

from errors import ConfigError
from experiment_config import (
    ExperimentConfig, list_presets, load_config, parse_config_text, parse_levels, validate,
)


def test_defaults_are_valid():
    cfg = validate(ExperimentConfig())
    assert cfg.effective_samples == 20
    assert cfg.resolved_ais_lambda == pytest.approx(10.0)
    assert cfg.channel_std == (1.0,)
    assert cfg.sweep_levels() == [(20, 1)]


def test_parse_levels():
    assert parse_levels("20x1, 20x2;40X1, 60") == ((20, 1), (20, 2), (40, 1), (60, 1))
    assert parse_levels("") == ()
    with pytest.raises(ConfigError):
        parse_levels("20xx")


def test_file_keys_and_types():
    values = parse_config_text(
        "# comment\nenv = car\nlambda = 2.5  # trailing\nnoise-std = 0.2, 0.4\n"
        "record_steps = yes\nais_lambda = auto\nlevels = 10x2\n"
    )
    assert values == {
        "env": "car", "lam": 2.5, "noise_std": (0.2, 0.4), "record_steps": True,
        "ais_lambda": None, "levels": ((10, 2),),
    }


def test_unknown_key_names_file_and_line():
    with pytest.raises(ConfigError, match=r"exp.cfg:2: unknown config key 'sampels'"):
        parse_config_text("env = car\nsampels = 10\n", "exp.cfg")


def test_bad_value_and_bad_line():
    with pytest.raises(ConfigError, match="samples"):
        parse_config_text("samples = many\n")
    with pytest.raises(ConfigError, match=":1:"):
        parse_config_text("just words\n")
    with pytest.raises(ConfigError):
        parse_config_text("wall_clock = maybe\n")


def test_overrides_beat_the_file(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text("samples = 30\niters = 2\ntrials = 5\n")
    cfg = load_config(path, {"samples": "40", "lambda": 0.5})
    assert (cfg.samples, cfg.iters, cfg.trials, cfg.lam) == (40, 2, 5, 0.5)


def test_presets_load():
    names = list_presets()
    assert "mountaincar-paper" in names and "car-short" in names
    for name in names:
        cfg = load_config(name)
        assert cfg.sweep_levels()
    sweep = load_config("mountaincar-paper")
    assert [k * l for k, l in sweep.sweep_levels()] == list(range(20, 181, 20))
    assert all(load_config(name).alpha == 1.0 for name in names)
    assert sweep.executor == "process" and ExperimentConfig().executor == "thread"


def test_missing_config_is_config_error():
    with pytest.raises(ConfigError):
        load_config("no-such-preset")


@pytest.mark.parametrize("changes", [
    {"algo": "mppi", "iters": 2},
    {"algo": "mppi", "levels": ((20, 1), (20, 3))},
    {"env": "spaceship"},
    {"samples": 0},
    {"lam": 0.0},
    {"alpha": 1.5},
    {"tail_init": "constant"},
    {"env": "car", "noise_std": (0.1,)},
    {"ais": "cma", "samples": 1},
    {"elite_fraction": 0.0},
    {"seed": -1},
    {"env": "multicar", "n_cars": 1},
    {"executor": "cluster"},
])
def test_inconsistent_settings_are_rejected(changes):
    with pytest.raises(ConfigError):
        ExperimentConfig().replace(**changes)


def test_mppi_labels_and_strategy():
    cfg = ExperimentConfig(algo="mppi")
    assert cfg.ais_label == "none"
    assert cfg.strategy() is None
    assert ExperimentConfig(ais="pmc").strategy().name == "pmc"


def test_controller_config_replicates_noise_per_car():
    cfg = ExperimentConfig(env="multicar", n_cars=3, samples=8, iters=2, horizon=5, lam=2.0, alpha=0.5)
    cc = cfg.controller_config(6)
    assert cc.control_dim == 6 and cc.T == 5
    assert cc.base_cov.cov[0, 0] == pytest.approx(0.15**2)
    assert cc.base_cov.cov[5, 5] == pytest.approx(0.5**2)
    assert cc.cost_params.gamma == pytest.approx(1.0)
    assert cc.ais_params.ais_lambda == pytest.approx(20.0)
    with pytest.raises(ConfigError):
        cfg.controller_config(5)


def test_with_level_keeps_everything_else():
    cfg = ExperimentConfig(seed=9, levels=((20, 1), (20, 3)))
    lvl = cfg.with_level(20, 3)
    assert (lvl.samples, lvl.iters, lvl.seed, lvl.levels) == (20, 3, 9, cfg.levels)


def test_to_text_reloads_to_the_same_config(tmp_path):
    cfg = ExperimentConfig(
        env="car", lam=0.3, noise_std=(0.2, 0.6), levels=((10, 1), (10, 2)),
        wall_clock=False, tail_init="constant", tail_value=0.25, track="loop_200.track",
    )
    path = tmp_path / "used.cfg"
    path.write_text(cfg.to_text())
    assert load_config(path) == cfg
