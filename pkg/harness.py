# harness.py
"""
Closed-loop trials, effective-sample sweeps and paired comparisons.

Every trial owns its environment and controller and draws all randomness
from its own seed, seed = derive(master seed, level index, trial index), so
trials can run on any number of worker threads or processes and still produce
the same rows.
"""
from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np
import pandas as pd

from constants import TRIAL_COLUMNS
from controller import Controller
from core import RngStream
from environments import make_environment
from errors import ConfigError
from experiment_config import ExperimentConfig
from sweep_summary import paired_differences, summarize

logger = logging.getLogger(__name__)

# episode endings that count as finishing the task
SUCCESS_REASONS = ("goal", "laps")


@dataclass
class TrialRecord:
    trial: int
    seed: int
    env: str
    algo: str
    ais: str
    K: int
    L: int
    T: int
    total_reward: float
    steps: int
    laps: int
    beta_violation: bool = False
    track_violation: bool = False
    wall_time_s: float = 0.0
    fail_reason: str = ""
    diagnostics: list[dict] | None = field(default=None, compare=False, repr=False)

    @property
    def effective_samples(self) -> int:
        return self.K * self.L

    @property
    def completed(self) -> bool:
        """Task finished with no failure and neither violation flag set."""
        return not self.fail_reason and not self.beta_violation and not self.track_violation

    def as_row(self) -> dict:
        row = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "diagnostics"}
        row["effective_samples"] = self.effective_samples
        return {c: row[c] for c in TRIAL_COLUMNS}

    @classmethod
    def from_row(cls, row: dict) -> "TrialRecord":
        """Inverse of as_row over text fields (as read back from trials.csv)."""
        def flag(v) -> bool:
            return str(v).strip().lower() == "true"

        return cls(
            trial=int(row["trial"]), seed=int(row["seed"]), env=str(row["env"]),
            algo=str(row["algo"]), ais=str(row["ais"]), K=int(row["K"]), L=int(row["L"]),
            T=int(row["T"]), total_reward=float(row["total_reward"]), steps=int(row["steps"]),
            laps=int(row["laps"]), beta_violation=flag(row["beta_violation"]),
            track_violation=flag(row["track_violation"]), wall_time_s=float(row["wall_time_s"]),
            fail_reason=str(row["fail_reason"]),
        )


def trial_seed(master_seed: int, level: int, trial: int) -> int:
    return RngStream(master_seed).derive_seed(level, trial)


def run_trial(config: ExperimentConfig, seed: int, trial: int = 0) -> TrialRecord:
    """One closed-loop episode: optimise, apply g(u_0), step, until the environment ends it."""
    env = make_environment(config)
    stream = RngStream(seed)
    steps = laps = 0
    total = 0.0
    beta = off = False
    reason = ""
    diag: list[dict] | None = [] if config.record_steps else None
    t0 = time.perf_counter()
    try:
        controller = Controller(env, config.controller_config(env.control_dim), config.algo, config.strategy())
        state = env.reset(stream.child(0).generator())
        control_stream = stream.child(1)
        while True:
            command, result = controller.act(state, control_stream.child(steps))
            out = env.step(state, command)
            if diag is not None:
                diag.extend(
                    {"trial": trial, "step": steps, "iteration": s.iteration,
                     "min_cost": s.min_cost, "mean_cost": s.mean_cost, "ess": s.ess}
                    for s in result.diagnostics
                )
            steps += 1
            total += out.reward
            laps = out.laps
            beta |= out.violated_beta
            off |= out.off_track
            state = out.state
            if out.done:
                reason = "" if out.reason in SUCCESS_REASONS else out.reason
                break
    except (ValueError, RuntimeError, ArithmeticError) as e:
        reason = f"{type(e).__name__}: {e}"
        logger.error("trial %d (seed %d) aborted at step %d: %s", trial, seed, steps, reason)
    wall = round(time.perf_counter() - t0, 6) if config.wall_clock else 0.0
    record = TrialRecord(
        trial=trial, seed=seed, env=config.env, algo=config.algo, ais=config.ais_label,
        K=config.samples, L=config.iters, T=config.horizon, total_reward=float(total),
        steps=steps, laps=laps, beta_violation=beta, track_violation=off,
        wall_time_s=wall, fail_reason=reason, diagnostics=diag,
    )
    logger.info("trial %d K=%d L=%d: reward %.3f, %d steps, laps %d%s", trial, record.K, record.L,
                record.total_reward, steps, laps, f" ({reason})" if reason else "")
    return record


def run_trials(config: ExperimentConfig, threads: int | None = None) -> list[TrialRecord]:
    """Every (level, trial) of the config, in level then trial order."""
    jobs = [
        (config.with_level(K, L), trial_seed(config.seed, i, j), j)
        for i, (K, L) in enumerate(config.sweep_levels())
        for j in range(config.trials)
    ]
    n_workers = threads or config.threads
    logger.info("running %d trials over %d level(s) on %d %s worker(s)",
                len(jobs), len(config.sweep_levels()), n_workers, config.executor)
    if n_workers <= 1 or len(jobs) <= 1:
        return [run_trial(*job) for job in jobs]
    pool_type = ProcessPoolExecutor if config.executor == "process" else ThreadPoolExecutor
    with pool_type(max_workers=n_workers) as pool:
        return list(pool.map(run_trial, *zip(*jobs)))


def run_sweep(config: ExperimentConfig, levels=None, threads: int | None = None):
    """Run every level and aggregate. Returns (records, SweepSummary)."""
    if levels is not None:
        config = config.replace(levels=tuple((int(k), int(l)) for k, l in levels))
    if config.trials < 2:
        logger.warning("sweep with %d trial(s) per level: confidence intervals need at least 2", config.trials)
    records = run_trials(config, threads)
    return records, summarize(records)


def records_frame(records) -> pd.DataFrame:
    return pd.DataFrame([r.as_row() for r in records], columns=TRIAL_COLUMNS)


def compare(config_a: ExperimentConfig, config_b: ExperimentConfig, threads: int | None = None):
    """
    Run two configs on the same derived seeds and pair trials level by level.
    Returns (records_a, records_b, paired DataFrame).
    """
    if len(config_a.sweep_levels()) != len(config_b.sweep_levels()):
        raise ConfigError(
            f"compare needs the same number of levels, got {len(config_a.sweep_levels())} "
            f"and {len(config_b.sweep_levels())}"
        )
    if (config_b.seed, config_b.trials) != (config_a.seed, config_a.trials):
        logger.info("compare: using seed %d and %d trials for both configs", config_a.seed, config_a.trials)
        config_b = config_b.replace(seed=config_a.seed, trials=config_a.trials)
    records_a = run_trials(config_a, threads)
    records_b = run_trials(config_b, threads)
    metric = make_environment(config_a).metric
    return records_a, records_b, paired_differences(records_frame(records_a), records_frame(records_b), metric)


def level_means(records, column: str) -> np.ndarray:
    """Mean of one column per (K, L) level, in first-seen order."""
    df = records_frame(records)
    return df.groupby(["K", "L"], sort=False)[column].mean().to_numpy()

