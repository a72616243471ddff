"""The `sim` command: run one scenario, compare suites, list the catalog.

Exit codes: 0 on success, 1 when any run crashed (or hit a controller
singularity), 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import harness, report
from .scenarios import (
    BUILTIN_SCENARIOS,
    SUITES,
    ParseError,
    ValidationError,
    load_scenario,
    with_l1,
)
from .trajectory import InvalidSpec

EXIT_OK = 0
EXIT_CRASH = 1
EXIT_CONFIG = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sim",
        description="Quadrotor tracking-control simulator with L1 adaptive augmentation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one scenario and write its log")
    p_run.add_argument("--scenario", required=True,
                       help="builtin scenario id or path to a scenario file")
    p_run.add_argument("--l1", choices=["on", "off"], default=None,
                       help="override the scenario's augmentation toggle")
    p_run.add_argument("--out", default="out", help="output directory")
    p_run.add_argument("--no-plots", action="store_true",
                       help="write only the CSV log, no figure")

    p_cmp = sub.add_parser("compare", help="run a suite with L1 off and on")
    p_cmp.add_argument("--suite", required=True,
                       help="builtin suite id (%s) or a file listing scenarios"
                       % ", ".join(sorted(SUITES)))
    p_cmp.add_argument("--out", default="out", help="output directory")
    p_cmp.add_argument("--no-plots", action="store_true",
                       help="write only CSVs, no figures")

    sub.add_parser("list", help="print builtin scenario and suite ids")
    return parser


def _resolve_suite(spec: str):
    if spec in SUITES:
        return [BUILTIN_SCENARIOS[name] for name in SUITES[spec]]
    path = Path(spec)
    if not path.is_file():
        raise ParseError(f"{spec!r} is neither a builtin suite id nor a file")
    configs = []
    for raw in path.read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            configs.append(load_scenario(line))
    if not configs:
        raise ValidationError([f"suite file {spec!r} lists no scenarios"])
    return configs


def _cmd_run(args) -> int:
    config = load_scenario(args.scenario)
    if args.l1 is not None:
        config = with_l1(config, args.l1 == "on")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    log = harness.run(config)
    tag = "l1on" if config.l1_enabled else "l1off"
    write_path = out / f"{config.name}_{tag}.csv"
    harness.write_log_csv(log, write_path)
    if not args.no_plots:
        report.render_run(log, out / f"{config.name}_{tag}.png")

    window = config.metrics_window()
    m = harness.metrics(log, window)
    print(f"{config.name} [{tag}]: {log.status}; "
          f"rmse {m.rmse:.6g} m over [{window[0]:g}, {window[1]:g}] s; "
          f"log {write_path}")
    return EXIT_OK if log.status == harness.COMPLETED else EXIT_CRASH


def _cmd_compare(args) -> int:
    configs = _resolve_suite(args.suite)
    out = Path(args.out)
    rows = harness.compare(configs, out_dir=out)
    if not args.no_plots:
        report.render_comparison(rows, out / "summary.png")
    for row in rows:
        print(f"{row.scenario}: rmse_off {row.rmse_off:.6g}, "
              f"rmse_on {row.rmse_on:.6g}, ratio {row.ratio:.6g}")
    print(f"summary {out / 'summary.csv'}")
    crashed = any(
        status != harness.COMPLETED
        for row in rows for status in (row.status_off, row.status_on)
    )
    return EXIT_CRASH if crashed else EXIT_OK


def _cmd_list() -> int:
    print("scenarios:")
    for name in BUILTIN_SCENARIOS:
        print(f"  {name}")
    print("suites:")
    for name, members in SUITES.items():
        print(f"  {name}: {', '.join(members)}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "compare":
            return _cmd_compare(args)
        return _cmd_list()
    except (ParseError, ValidationError, InvalidSpec, KeyError) as exc:
        message = exc.args[0] if exc.args else exc
        print(f"config error: {message}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
