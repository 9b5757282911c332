# exporters.py
from pathlib import Path

import pandas as pd

from constants import (
    DIAGNOSTICS_CSV, GNUPLOT_DAT, PAIRED_CSV, RESULTS_XLSX, SUMMARY_COLUMNS, SUMMARY_CSV,
    TRIAL_COLUMNS, TRIALS_CSV,
)
from io_utils import FileIO
from sweep_summary import SweepSummary, metric_columns, summarize

DIAGNOSTIC_COLUMNS = ["trial", "K", "L", "step", "iteration", "min_cost", "mean_cost", "ess"]


class Exporter:
    """Builds result files (CSV, gnuplot data, optional XLSX) and their download bytes."""

    # ===== frames =====
    @staticmethod
    def trials_frame(records) -> pd.DataFrame:
        return pd.DataFrame([r.as_row() for r in records], columns=TRIAL_COLUMNS)

    @staticmethod
    def diagnostics_frame(records) -> pd.DataFrame:
        rows = [
            {**d, "K": r.K, "L": r.L}
            for r in records if r.diagnostics
            for d in r.diagnostics
        ]
        return pd.DataFrame(rows, columns=DIAGNOSTIC_COLUMNS)

    # ===== text =====
    @staticmethod
    def export_csv(df: pd.DataFrame) -> bytes:
        return df.to_csv(index=False, lineterminator="\n").encode("utf-8")

    @staticmethod
    def gnuplot_text(summary: SweepSummary, metric: str = "total_reward") -> str:
        """One block per (algo, ais) series: effective_samples mean ci_low ci_high."""
        mean_col, ci_col = metric_columns(metric)
        blocks = []
        for algo, ais, rows in summary.series():
            lines = [f"# algo={algo} ais={ais}", f"# effective_samples {mean_col} ci_low ci_high"]
            for _, r in rows.iterrows():
                mean, ci = float(r[mean_col]), float(r[ci_col])
                lines.append(f"{int(r['effective_samples'])} {mean:.10g} {mean - ci:.10g} {mean + ci:.10g}")
            blocks.append("\n".join(lines))
        return "\n\n\n".join(blocks) + ("\n" if blocks else "")

    def export_full_excel(self, trials: pd.DataFrame, summary: pd.DataFrame) -> bytes:
        return FileIO.try_export_excel({"Trials": trials, "Summary": summary})

    # ===== files =====
    def emit_results(self, summary: SweepSummary | None, records, output_dir, metric: str = "total_reward",
                     diagnostics: bool = False, excel: bool = False) -> list[Path]:
        """Write trials.csv, summary.csv and summary.gnuplot.dat (plus optional extras)."""
        out = Path(output_dir)
        records = list(records)
        summary = summary if summary is not None else summarize(records)
        trials = self.trials_frame(records)
        table = summary.table.reindex(columns=SUMMARY_COLUMNS)
        written = [
            FileIO.write_bytes(out / TRIALS_CSV, self.export_csv(trials)),
            FileIO.write_bytes(out / SUMMARY_CSV, self.export_csv(table)),
            FileIO.write_text(out / GNUPLOT_DAT, self.gnuplot_text(summary, metric)),
        ]
        if diagnostics:
            written.append(FileIO.write_bytes(out / DIAGNOSTICS_CSV, self.export_csv(self.diagnostics_frame(records))))
        if excel:
            written.append(FileIO.write_bytes(out / RESULTS_XLSX, self.export_full_excel(trials, table)))
        return written

    def emit_paired(self, paired: pd.DataFrame, output_dir) -> Path:
        return FileIO.write_bytes(Path(output_dir) / PAIRED_CSV, self.export_csv(paired))

    @staticmethod
    def read_trials(path) -> list:
        """Parse trials.csv back into TrialRecords."""
        from harness import TrialRecord
        df = FileIO.read_csv_text(path)
        missing = [c for c in TRIAL_COLUMNS if c not in df.columns]
        if missing:
            raise ValueError(f"'{path}' is missing required column(s): {missing}")
        return [TrialRecord.from_row(row) for row in df.to_dict("records")]
