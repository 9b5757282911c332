# cli.py
"""
Command-line driver.

    python cli.py run     --config mountaincar-paper --trials 20
    python cli.py sweep   --config car-short --levels "150x1,150x3,450x1" --threads 4
    python cli.py compare presets/a.cfg presets/b.cfg --out results/ab

Exit codes: 0 success, 2 configuration/track error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from constants import AIS_CHOICES, ALGO_CHOICES, CONFIG_USED, ENV_CHOICES
from environments import make_environment
from errors import ConfigError, TrackFormatError
from experiment_config import ExperimentConfig, list_presets, load_config
from exporters import Exporter
from harness import compare, run_sweep
from io_utils import FileIO
from sweep_summary import metric_columns, summarize

logger = logging.getLogger("cli")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3

# flag dest -> config key
FLAG_KEYS = {
    "env": "env", "algo": "algo", "ais": "ais", "samples": "samples", "iters": "iters",
    "horizon": "horizon", "lam": "lambda", "alpha": "alpha", "ais_lambda": "ais_lambda",
    "trials": "trials", "seed": "seed", "track": "track", "out": "out", "threads": "threads",
    "levels": "levels",
}


def _shared_flags(p: argparse.ArgumentParser):
    p.add_argument("--env", choices=ENV_CHOICES)
    p.add_argument("--algo", choices=ALGO_CHOICES)
    p.add_argument("--ais", choices=AIS_CHOICES)
    p.add_argument("--samples", type=int, metavar="K")
    p.add_argument("--iters", type=int, metavar="L")
    p.add_argument("--horizon", type=int, metavar="T")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--ais-lambda", dest="ais_lambda", type=float)
    p.add_argument("--trials", type=int, metavar="N")
    p.add_argument("--seed", type=int, metavar="S")
    p.add_argument("--track", metavar="PATH")
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--threads", type=int, metavar="N")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="any other config key, repeatable")
    p.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cli.py", description="Sampling MPC benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run trials of a single config")
    run.add_argument("--config", metavar="PATH", help=f"config file or preset ({', '.join(list_presets())})")
    _shared_flags(run)

    sweep = sub.add_parser("sweep", help="run trials over effective-sample levels")
    sweep.add_argument("--config", metavar="PATH")
    sweep.add_argument("--levels", metavar="KxL,...", help="e.g. 20x1,20x2,20x3")
    _shared_flags(sweep)

    cmp_ = sub.add_parser("compare", help="two configs on the same seeds, paired summary")
    cmp_.add_argument("config_a")
    cmp_.add_argument("config_b")
    cmp_.add_argument("--levels", metavar="KxL,...")
    _shared_flags(cmp_)
    return parser


def overrides_from_args(args: argparse.Namespace) -> dict:
    out = {key: getattr(args, dest, None) for dest, key in FLAG_KEYS.items()}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got '{item}'")
        out[key.strip()] = value
    return {k: v for k, v in out.items() if v is not None}


def _report(summary, metric: str):
    mean_col, ci_col = metric_columns(metric)
    for _, r in summary.table.iterrows():
        logger.info("%s/%s K=%d L=%d (%d eff.): %s %.3f +/- %.3f, completion %.2f",
                    r["algo"], r["ais"], r["K"], r["L"], r["effective_samples"],
                    mean_col, r[mean_col], r[ci_col], r["completion_rate"])


def _emit(config: ExperimentConfig, records, summary, out: Path):
    metric = make_environment(config).metric
    exporter = Exporter()
    paths = exporter.emit_results(summary, records, out, metric,
                                  diagnostics=config.record_steps, excel=config.excel)
    paths.append(FileIO.write_text(out / CONFIG_USED, config.to_text()))
    _report(summary, metric)
    for p in paths:
        logger.info("wrote %s", p)


def run_command(args: argparse.Namespace) -> int:
    overrides = overrides_from_args(args)
    if args.command == "compare":
        config_a = load_config(args.config_a, overrides)
        config_b = load_config(args.config_b, overrides)
        for cfg in (config_a, config_b):
            make_environment(cfg)
        records_a, records_b, paired = compare(config_a, config_b)
        out = Path(config_a.out)
        _emit(config_a, records_a, summarize(records_a), out / "a")
        _emit(config_b, records_b, summarize(records_b), out / "b")
        logger.info("wrote %s", Exporter().emit_paired(paired, out))
        return EXIT_OK
    config = load_config(args.config, overrides)
    if args.command == "run" and config.levels:
        config = config.replace(levels=())
    # fail fast on a bad track before any trial runs
    make_environment(config)
    records, summary = run_sweep(config)
    _emit(config, records, summary, Path(config.out))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return run_command(args)
    except (ConfigError, TrackFormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
