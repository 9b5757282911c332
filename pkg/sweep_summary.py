# sweep_summary.py
"""
Aggregate trial rows per (algo, ais, K, L) level: means, 95 % confidence
half-widths (normal approximation, 1.96 * std / sqrt(n) with ddof = 1) and
the completion rate.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from constants import CI_Z, SUMMARY_COLUMNS, TRIAL_COLUMNS

LEVEL_KEYS = ["algo", "ais", "K", "L"]
PAIRED_COLUMNS = [
    "level", "effective_samples_a", "effective_samples_b", "trials",
    "mean_a", "mean_b", "mean_diff", "ci_diff",
]


def ci_half_width(values) -> float:
    """1.96 * stderr; NaN below two values, exactly 0 when all values agree."""
    v = np.asarray(values, dtype=np.float64)
    if v.size < 2:
        return float("nan")
    if np.all(v == v[0]):
        return 0.0
    return float(CI_Z * v.std(ddof=1) / np.sqrt(v.size))


def _as_frame(records) -> pd.DataFrame:
    if isinstance(records, pd.DataFrame):
        return records
    return pd.DataFrame([r.as_row() for r in records], columns=TRIAL_COLUMNS)


def _flag(col: pd.Series) -> pd.Series:
    if col.dtype == bool:
        return col
    return col.astype(str).str.strip().str.lower() == "true"


def completed_mask(df: pd.DataFrame) -> pd.Series:
    fail = df["fail_reason"].fillna("").astype(str) != ""
    return ~fail & ~_flag(df["beta_violation"]) & ~_flag(df["track_violation"])


@dataclass(frozen=True, eq=False)
class SweepSummary:
    table: pd.DataFrame   # SUMMARY_COLUMNS, one row per level

    def __len__(self) -> int:
        return len(self.table)

    def series(self):
        """(algo, ais, rows) per plotted series, rows sorted by effective samples."""
        for (algo, ais), rows in self.table.groupby(["algo", "ais"], sort=False):
            yield algo, ais, rows.sort_values("effective_samples", kind="stable")


def summarize(records) -> SweepSummary:
    df = _as_frame(records)
    if df.empty:
        return SweepSummary(pd.DataFrame(columns=SUMMARY_COLUMNS))
    df = df.assign(completed=completed_mask(df))
    rows = []
    for (algo, ais, K, L), g in df.groupby(LEVEL_KEYS, sort=False):
        reward = g["total_reward"].astype(float)
        steps = g["steps"].astype(float)
        rows.append({
            "algo": algo, "ais": ais, "K": int(K), "L": int(L),
            "effective_samples": int(K) * int(L), "trials": len(g),
            "mean_reward": float(reward.mean()), "ci_reward": ci_half_width(reward),
            "mean_steps": float(steps.mean()), "ci_steps": ci_half_width(steps),
            "completion_rate": float(g["completed"].mean()),
        })
    return SweepSummary(pd.DataFrame(rows, columns=SUMMARY_COLUMNS))


def metric_columns(metric: str) -> tuple[str, str]:
    """Summary (mean, ci) columns for a trial metric."""
    if metric == "steps":
        return "mean_steps", "ci_steps"
    return "mean_reward", "ci_reward"


def band_frame(table: pd.DataFrame, metric: str) -> pd.DataFrame:
    """
    Wide frame for a line chart: per algo/ais series a mean column plus its
    lower and upper 95 % bounds, indexed by effective samples.
    """
    mean_col, ci_col = metric_columns(metric)
    label = table["algo"] + "/" + table["ais"]
    long = pd.concat([
        table.assign(series=label, value=table[mean_col]),
        table.assign(series=label + " low", value=table[mean_col] - table[ci_col]),
        table.assign(series=label + " high", value=table[mean_col] + table[ci_col]),
    ])
    return long.pivot_table(index="effective_samples", columns="series", values="value", dropna=False)


def paired_differences(a, b, metric: str = "total_reward") -> pd.DataFrame:
    """
    Per-level mean of (b - a) over trials paired by trial index, with its
    95 % half-width. Levels are matched by order of first appearance.
    """
    a, b = _as_frame(a), _as_frame(b)
    groups_a = [g for _, g in a.groupby(["K", "L"], sort=False)]
    groups_b = [g for _, g in b.groupby(["K", "L"], sort=False)]
    if len(groups_a) != len(groups_b):
        raise ValueError(f"cannot pair {len(groups_a)} levels with {len(groups_b)}")
    rows = []
    for i, (ga, gb) in enumerate(zip(groups_a, groups_b)):
        m = ga[["trial", metric]].merge(gb[["trial", metric]], on="trial", suffixes=("_a", "_b"))
        diff = m[f"{metric}_b"].astype(float) - m[f"{metric}_a"].astype(float)
        rows.append({
            "level": i,
            "effective_samples_a": int(ga["K"].iloc[0]) * int(ga["L"].iloc[0]),
            "effective_samples_b": int(gb["K"].iloc[0]) * int(gb["L"].iloc[0]),
            "trials": len(m),
            "mean_a": float(m[f"{metric}_a"].astype(float).mean()),
            "mean_b": float(m[f"{metric}_b"].astype(float).mean()),
            "mean_diff": float(diff.mean()) if len(m) else float("nan"),
            "ci_diff": ci_half_width(diff),
        })
    return pd.DataFrame(rows, columns=PAIRED_COLUMNS)
