"""Command-line front end: simulate, compare personalities, calibrate rates.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import svg
from .config import ConfigError, RunConfig, dump_config, load_config
from .dde import GridError, IntegrationError
from .extraversion import SimulationResult, simulate, summary_metrics
from .ga import calibrate
from .pk import StimulantParams, drug_level, peak_time

log = logging.getLogger("stimsim")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

SERIES_COLUMNS = ("t_min", "s", "excitation", "inhibition", "balance", "balance_about_tonic", "y")
METRIC_COLUMNS = (
    "profile", "b", "peak_y", "peak_y_time", "peak_excursion",
    "undershoot_min", "return_time", "negative_y",
)
HISTORY_COLUMNS = ("generation", "best_fitness", "mean_fitness", "best_alpha", "best_beta")


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return "%.9g" % v


def write_csv(path: Path, header: Sequence[str], columns: Sequence[Sequence]) -> None:
    """Write column data; numbers use 9 significant digits, LF line endings."""
    rows = [",".join(header)]
    cols = [c.tolist() if isinstance(c, np.ndarray) else list(c) for c in columns]
    for row in zip(*cols):
        rows.append(",".join(fmt(v) for v in row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(rows) + "\n")


def _series_columns(r: SimulationResult) -> list[np.ndarray]:
    return [
        r.times, r.s.values, r.excitation.values, r.inhibition.values,
        r.balance.values, r.balance_about_tonic, r.y.values,
    ]


def _run_profiles(cfg: RunConfig) -> list[SimulationResult]:
    stim, dyn, grid = cfg.stim(), cfg.dynamics(), cfg.grid()
    return [simulate(prof, stim, dyn, grid) for prof in cfg.personality_profiles()]


def _write_metrics(path: Path, results: Sequence[SimulationResult]) -> list[list]:
    rows = []
    for r in results:
        m = summary_metrics(r)
        rows.append([
            r.profile.label, r.profile.b, m.peak_y, m.peak_y_time, m.peak_excursion,
            m.undershoot_min, m.return_time, m.negative_y,
        ])
    write_csv(path, METRIC_COLUMNS, list(zip(*rows)))
    return rows


def _print_table(rows) -> None:
    print("  ".join(f"{c:>14}" for c in METRIC_COLUMNS))
    for row in rows:
        print("  ".join(f"{fmt(v):>14}" for v in row))


def _write_charts(out: Path, results: Sequence[SimulationResult]) -> None:
    t = results[0].times
    svg.line_chart(
        out / "figure1.svg", "Stimulant level in the body", "time (min)", "s(t)",
        [("s", t, results[0].s.values)],
    )
    fig2 = []
    for r in results:
        fig2.append((f"excitation {r.profile.label}", t, r.excitation.values))
        fig2.append((f"-inhibition {r.profile.label}", t, -r.inhibition.values))
    svg.line_chart(out / "figure2.svg", "Excitation and inhibitor effects", "time (min)", "effect", fig2)
    svg.line_chart(
        out / "figure3.svg", "Excitation-inhibitor balance", "time (min)", "balance",
        [(r.profile.label, t, r.balance.values) for r in results],
    )
    svg.line_chart(
        out / "figure4.svg", "Extraversion", "time (min)", "y(t)",
        [(r.profile.label, t, r.y.values) for r in results],
    )


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def run_simulate(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    results = _run_profiles(cfg)
    for r in results:
        write_csv(out / f"simulate_{r.profile.label}.csv", SERIES_COLUMNS, _series_columns(r))
    rows = _write_metrics(out / "simulate_metrics.csv", results)
    if cfg.charts:
        _write_charts(out, results)
    _print_table(rows)
    log.info("wrote simulation output to %s", out)
    return EXIT_OK


def run_compare(cfg: RunConfig) -> int:
    cfg = cfg.replace(profiles=("extrovert", "ambivert", "introvert"))
    out = _out_dir(cfg)
    results = _run_profiles(cfg)
    header = ["t_min", "s"]
    columns = [results[0].times, results[0].s.values]
    for r in results:
        label = r.profile.label
        for name, col in zip(SERIES_COLUMNS[2:], _series_columns(r)[2:]):
            header.append(f"{name}_{label}")
            columns.append(col)
    write_csv(out / "compare.csv", header, columns)
    rows = _write_metrics(out / "compare_metrics.csv", results)
    if cfg.charts:
        _write_charts(out, results)
    _print_table(rows)
    return EXIT_OK


def run_calibrate(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    spec = cfg.fitness_spec()
    result = calibrate(cfg.ga_config(), spec)
    h = result.history
    write_csv(
        out / "calibration_history.csv",
        HISTORY_COLUMNS,
        [
            [g.generation for g in h],
            [g.best_fitness for g in h],
            [g.mean_fitness for g in h],
            [g.best_alpha for g in h],
            [g.best_beta for g in h],
        ],
    )
    params = StimulantParams(cfg.dose, result.best_alpha, result.best_beta)
    summary = {
        "fitness_mode": spec.mode,
        "seed": cfg.seed,
        "best_alpha": result.best_alpha,
        "best_beta": result.best_beta,
        "best_fitness": result.best_fitness,
        "s_at_eval_time": drug_level(spec.eval_time, params),
        "peak_time": peak_time(params),
        "generations_run": result.generations_run,
        "termination": result.termination,
    }
    text = "".join(f"{k} = {fmt(v)}\n" for k, v in summary.items())
    (out / "calibration_summary.txt").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stimsim",
        description="Simulate extraversion response to a single stimulant dose and calibrate its rates.",
    )
    parser.add_argument("--dump-defaults", action="store_true",
                        help="print the default configuration file and exit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command")

    def common(p, charts=True):
        p.add_argument("--config", help="key = value configuration file (defaults if omitted)")
        p.add_argument("--out", help="output directory (overrides output_dir)")
        if charts:
            p.add_argument("--charts", action="store_true", help="also write figure1-4.svg")

    common(sub.add_parser("simulate", help="simulate the configured personalities"))
    common(sub.add_parser("compare", help="simulate and compare all three personalities"))
    cal = sub.add_parser("calibrate", help="calibrate alpha and beta with the genetic algorithm")
    common(cal, charts=False)
    cal.add_argument("--seed", type=int)
    cal.add_argument("--mode", choices=("paper_literal", "peak_constrained"))
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.dump_defaults:
        sys.stdout.write(dump_config())
        return EXIT_OK
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_CONFIG

    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        overrides = {}
        if args.out:
            overrides["output_dir"] = args.out
        if getattr(args, "charts", False):
            overrides["charts"] = True
        if getattr(args, "seed", None) is not None:
            overrides["seed"] = args.seed
        if getattr(args, "mode", None):
            overrides["fitness_mode"] = args.mode
        cfg = cfg.replace(**overrides).validate()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    runner = {"simulate": run_simulate, "compare": run_compare, "calibrate": run_calibrate}[args.command]
    try:
        return runner(cfg)
    except GridError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, FloatingPointError, OverflowError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
