"""Command-line entry point.

    mlservesim sweep     [--config F] [--seed S] [--out DIR] [--zero-noise]
    mlservesim simulate  [--config F] [--scenario NAME] ...
    mlservesim compare   [--config F] [--tolerance FRAC] ...
    mlservesim plot CSV  [--out FILE]

Exit codes: 0 ok, 1 tolerance breach, 2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, RunConfig, ScenarioName, load_config
from .domain import ModelError
from .harness import (
    SchemaError,
    analytic_rows,
    compare,
    desim_rows,
    format_summary_table,
    simulate_scenarios,
    summaries,
    write_csv,
)
from .report import render_plot
from .topology import Scenario

EXIT_OK, EXIT_TOLERANCE, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer: {text}")
    return value


def _fraction(text: str) -> float:
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"tolerance must be >= 0: {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value config file")
    common.add_argument("--seed", type=_u64)
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--scenario", choices=[s.value for s in ScenarioName])
    common.add_argument("--zero-noise", action="store_true", help="force sigma_mono = sigma_micro = 0")
    common.add_argument("--tolerance", type=_fraction, help="relative mean delta allowed by compare")

    parser = argparse.ArgumentParser(prog="mlservesim", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("sweep", parents=[common], help="analytic latency sweep over user counts")
    sub.add_parser("simulate", parents=[common], help="discrete-event simulation of a scenario")
    sub.add_parser("compare", parents=[common], help="analytic vs simulated means")
    plot = sub.add_parser("plot", help="render a latency CSV as a figure")
    plot.add_argument("csv", type=Path)
    plot.add_argument("--out", type=Path, help="figure path (default: CSV path with .svg)")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    default_scenario = ScenarioName.ANALYTIC_SWEEP
    cfg = load_config(args.config) if args.config else RunConfig(default_scenario)
    cfg = cfg.with_overrides(seed=args.seed, out=args.out, scenario=args.scenario, tolerance=args.tolerance)
    if args.zero_noise:
        cfg = cfg.zero_noise()
    return cfg


def _emit_config(cfg: RunConfig, out) -> None:
    out.write("# resolved config\n")
    for line in cfg.to_text().splitlines():
        out.write(f"# {line}\n")


def _write_outputs(rows, stem: Path) -> tuple[Path, Path]:
    csv_path = write_csv(rows, stem.with_suffix(".csv"))
    svg_path = stem.with_suffix(".svg")
    render_plot(csv_path, svg_path)
    return csv_path, svg_path


def cmd_sweep(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    rows = analytic_rows(cfg)
    csv_path, svg_path = _write_outputs(rows, cfg.out / "sweep")
    out.write(format_summary_table(summaries(rows)))
    out.write(f"# wrote {csv_path} {svg_path}\n")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    scenarios = simulate_scenarios(cfg)
    rows = desim_rows(cfg, scenarios)
    name = "simulate_" + "_".join(s.value for s in scenarios)
    csv_path, svg_path = _write_outputs(rows, cfg.out / name)
    out.write(format_summary_table(summaries(rows)))
    out.write(f"# wrote {csv_path} {svg_path}\n")
    return EXIT_OK


def cmd_compare(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    rows = analytic_rows(cfg) + desim_rows(cfg, [Scenario.MONOLITH, Scenario.MICROSERVICE])
    result = compare(rows, cfg.tolerance)
    csv_path, svg_path = _write_outputs(rows, cfg.out / "compare")
    out.write(result.report())
    out.write(f"# wrote {csv_path} {svg_path}\n")
    return EXIT_OK if result.ok else EXIT_TOLERANCE


def cmd_plot(csv_path: Path, out_path: Path | None, out=None) -> int:
    out = out or sys.stdout
    target = out_path or csv_path.with_suffix(".svg")
    for s in render_plot(csv_path, target):
        means = " ".join(f"{n}:{m:.6f}" for n, m in zip(s.n, s.mean))
        out.write(f"{s.label}: {means}\n")
    out.write(f"# wrote {target}\n")
    return EXIT_OK


COMMANDS = {"sweep": cmd_sweep, "simulate": cmd_simulate, "compare": cmd_compare}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "plot":
            return cmd_plot(args.csv, args.out)
        cfg = resolve_config(args)
        if args.command == "simulate" and args.scenario == ScenarioName.ANALYTIC_SWEEP.value:
            raise ConfigError("simulate needs a deployment scenario (monolith, microservice, three_layer)")
        _emit_config(cfg, sys.stdout)
        return COMMANDS[args.command](cfg)
    except (ConfigError, ModelError) as exc:
        print(f"mlservesim: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SchemaError as exc:
        print(f"mlservesim: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"mlservesim: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
