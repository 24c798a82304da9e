"""Command-line entry point.

::

    abphase run CONFIG
    abphase run --scenario NAME [--set key=value]... [--sweep key=v1,v2,...]
    abphase report CSV [CSV ...]
    abphase converge [--ladder n_z,n_r,n_phi,L]... [--truncation]

Exit status: 0 when every checked record meets its tolerance, 1 when at least
one does not, 2 on a configuration error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import runner
from .runner import EXIT_CONFIG, EXIT_OK, EXIT_TOLERANCE, ConfigError


def _key_value(text: str) -> tuple[str, str]:
    key, sep, value = text.partition("=")
    if not sep or not key.strip():
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    return key.strip(), value.strip()


def _rung(text: str) -> tuple[int, int, int, float]:
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError(f"expected n_z,n_r,n_phi,L, got {text!r}")
    try:
        return int(parts[0]), int(parts[1]), int(parts[2]), float(parts[3])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad ladder rung {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="abphase", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log scenario progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario and write its CSV")
    p_run.add_argument("config", nargs="?", help="key = value config file")
    p_run.add_argument("--scenario", choices=sorted(runner.SCHEMAS))
    p_run.add_argument("--set", dest="overrides", action="append", type=_key_value, default=[],
                       metavar="KEY=VALUE", help="override a parameter (repeatable)")
    p_run.add_argument("--sweep", type=_key_value, metavar="KEY=V1,V2,...",
                       help="run once per listed value of KEY")
    p_run.add_argument("--output", help="CSV path (default: $%s/<scenario>.csv)" % runner.OUTPUT_DIR_ENV)
    p_run.add_argument("--workers", type=int, help="parallel sweep points (default 1)")
    p_run.add_argument("--no-timing", action="store_true",
                       help="leave wall_ms blank so reruns are byte-identical")

    p_report = sub.add_parser("report", help="aggregate deviations from run CSVs")
    p_report.add_argument("csv", nargs="+")

    p_conv = sub.add_parser("converge", help="lattice refinement ladder for ab-lattice")
    p_conv.add_argument("--ladder", action="append", type=_rung, metavar="NZ,NR,NPHI,L",
                        help="ladder rung with L in units of the impact parameter (repeatable)")
    p_conv.add_argument("--truncation", action="store_true",
                        help="vary the half-length at fixed axial cell height instead")
    p_conv.add_argument("--tolerance", type=float, default=1e-2,
                        help="required final relative deviation (default 0.01)")
    p_conv.add_argument("--output", help="CSV path for the table")
    return parser


def _config_from_args(args) -> runner.ScenarioConfig:
    if args.config and args.scenario:
        raise ConfigError("give either a config file or --scenario, not both")
    if args.config:
        config = runner.load_config(args.config)
    elif args.scenario:
        config = runner.ScenarioConfig(args.scenario)
    else:
        raise ConfigError("run needs a config file or --scenario")
    for key, value in args.overrides:
        config.parameters[key] = value
    if args.sweep:
        key, values = args.sweep
        config.sweep = (key, runner.parse_number_list(values))
    if args.output:
        config.output_path = args.output
    if args.workers is not None:
        config.workers = args.workers
    if args.no_timing:
        config.timing = False
    return config


def _cmd_run(args) -> int:
    config = _config_from_args(args)
    records = runner.run(config)
    for rec in records:
        status = {True: "ok", False: "FAIL", None: "-"}[rec.passed]
        dev = "" if rec.rel_deviation is None else f"  dev={rec.rel_deviation:.3e}"
        print(f"{status:4s} {rec.scenario} {rec.quantity} = {rec.value!r}{dev}")
    print(f"wrote {config.resolved_output()}")
    return runner.exit_status(records)


def _cmd_report(args) -> int:
    for path in args.csv:
        if not Path(path).is_file():
            raise ConfigError(f"no such file: {path}")
    rows, status = runner.summarize_csv(args.csv)
    print(f"{'file':30s} {'scenario':18s} {'records':>7s} {'failed':>6s} {'max_rel_dev':>12s}")
    for r in rows:
        print(f"{r['file']:30s} {r['scenario']:18s} {r['records']:7d} {r['failed']:6d} "
              f"{r['max_rel_deviation']:12.3e}")
    return status


def _cmd_converge(args) -> int:
    if args.truncation and args.ladder:
        raise ConfigError("--truncation and --ladder are mutually exclusive")
    ladder = runner.truncation_ladder() if args.truncation else tuple(args.ladder or runner.DEFAULT_LADDER)
    report = runner.convergence_report(ladder)
    print(f"{'n_z':>5s} {'n_r':>4s} {'n_phi':>5s} {'L/a':>6s} {'delta_I':>14s} {'deviation':>10s} "
          f"{'pictures':>9s} {'clear':>5s}")
    for r in report.rows:
        print(f"{r['n_z']:5d} {r['n_r']:4d} {r['n_phi']:5d} {r['length_factor']:6g} "
              f"{r['delta_I_potential']:14.10f} {r['deviation']:10.3e} {r['picture_difference']:9.1e} "
              f"{str(r['clearance_ok']):>5s}")
    print(f"monotone: {report.monotone}  final deviation: {report.final_deviation:.3e}")
    if args.output:
        print(f"wrote {runner.write_convergence_csv(report, args.output)}")
    return EXIT_OK if report.passed(args.tolerance) else EXIT_TOLERANCE


COMMANDS = {"run": _cmd_run, "report": _cmd_report, "converge": _cmd_converge}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        # geometry validation (e.g. impact inside the magnet) is a config problem
        print(f"invalid parameters: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
