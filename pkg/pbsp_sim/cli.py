"""Unified CLI dispatcher for all pbsp-sim commands."""

import argparse
import logging
import sys


def _fail(error):
    print(f"Error: {error}", file=sys.stderr)
    sys.exit(getattr(error, "exit_code", 1))


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if not verbosity else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s")


def _emit(report, config) -> None:
    text = report.render(config.output_format)
    if config.out:
        config.out.write_text(text)
        print(f"Wrote {len(report.rows)} rows to {config.out}", file=sys.stderr)
    else:
        sys.stdout.write(text)


# ─── Status ─────────────────────────────────────────────────────────────────

def cmd_status(args):
    from pbsp_sim import __version__
    from pbsp_sim.common import Config, format_datetime
    import numpy
    import scipy

    lines = [
        f"pbsp-sim v{__version__}",
        f"Time: {format_datetime()}",
        "",
        f"Dense budget: {Config.dense_budget} complex entries",
        f"Default seed: {Config.default_seed}",
        f"Workers: {Config.default_workers}",
        f"numpy {numpy.__version__}, scipy {scipy.__version__}",
    ]
    print("\n".join(lines))


# ─── Reports ────────────────────────────────────────────────────────────────

def cmd_table(args):
    from pbsp_sim.common import PbspError
    from pbsp_sim.runconfig import build_run_config
    from pbsp_sim.tables import cmd_table as build_table

    try:
        config = build_run_config(args, "table")
        report = build_table(args.which, config)
    except PbspError as e:
        _fail(e)
    _emit(report, config)


def cmd_verify(args):
    from pbsp_sim.common import PbspError, VerificationError, format_summary
    from pbsp_sim.runconfig import build_run_config
    from pbsp_sim.verify import cmd_verify as run_verify

    try:
        config = build_run_config(args, "verify")
        report = run_verify(config)
    except PbspError as e:
        _fail(e)
    _emit(report, config)

    if not report.ok:
        print(format_summary(report.rows, report.title), file=sys.stderr)
        _fail(VerificationError(f"{len(report.failed)} verification rows failed"))


def cmd_sample(args):
    from pbsp_sim.common import PbspError
    from pbsp_sim.runconfig import build_run_config
    from pbsp_sim.tables import cmd_sample as run_sample

    try:
        config = build_run_config(args, "sample")
        report = run_sample(config)
    except PbspError as e:
        _fail(e)
    _emit(report, config)


def cmd_uphp_plan(args):
    from pbsp_sim.common import PbspError
    from pbsp_sim.runconfig import build_run_config
    from pbsp_sim.tables import uphp_plan_report

    try:
        config = build_run_config(args, "uphp plan")
        report = uphp_plan_report(config)
    except PbspError as e:
        _fail(e)
    _emit(report, config)


def cmd_qrac_demo(args):
    from pbsp_sim.common import PbspError
    from pbsp_sim.runconfig import build_run_config
    from pbsp_sim.tables import qrac_demo_report

    try:
        config = build_run_config(args, "qrac demo")
        report = qrac_demo_report(args.k, config.eps_list[0], config)
    except PbspError as e:
        _fail(e)
    _emit(report, config)


# ─── Main dispatcher ────────────────────────────────────────────────────────

def _grid_flags() -> argparse.ArgumentParser:
    """Flags shared by every report command; defaults of None mean 'not given'."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--d", default=None, help="Qudit dimensions: 2, 2,3 or 2..4")
    common.add_argument("--N", default=None, help="Port counts: 3, 1,2,3 or 1..4")
    common.add_argument("--eps", default=None, help="Target errors, comma-separated (e.g. 0.2,0.1)")
    common.add_argument("--trials", type=int, default=None, help="Monte Carlo trials (default: 100000)")
    common.add_argument("--seed", type=int, default=None, help="Root seed (default: 42)")
    common.add_argument("--dense-budget", dest="dense_budget", type=int, default=None,
                        help="Max complex entries of any dense array (default: 2^20); grid points "
                             "over it fall back to formula and sampling instead of exiting with code 3")
    common.add_argument("--format", default=None, choices=["csv", "json"], help="Report format (default: csv)")
    common.add_argument("--out", default=None, help="Write the report to PATH instead of stdout")
    common.add_argument("--config", default=None, help="JSON file mirroring these flags; flags win")
    common.add_argument("--workers", type=int, default=None, help="Parallel grid workers (default: 1)")
    common.add_argument("-v", "--verbose", action="count", default=0, help="INFO logging; -vv for DEBUG")
    return common


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="pbsp-sim",
        description="pbsp-sim — port-based state preparation, PBT baseline and UPHP simulator",
    )
    subparsers = parser.add_subparsers(dest="command")
    common = _grid_flags()

    # status
    subparsers.add_parser("status", help="Show version, time and effective configuration")

    # table
    table_parser = subparsers.add_parser("table", parents=[common], help="Comparison table over a grid")
    table_parser.add_argument("which", choices=["pbsp", "pbt", "uphp", "qrac"], help="Which table")

    # verify
    verify_parser = subparsers.add_parser("verify", parents=[common], help="Run all verification suites")
    verify_parser.add_argument("--perturb", type=float, default=None, help=argparse.SUPPRESS)

    # sample
    subparsers.add_parser("sample", parents=[common], help="Monte Carlo outcome frequencies")

    # uphp plan
    uphp_parser = subparsers.add_parser("uphp", help="Programmable processor tools")
    uphp_sub = uphp_parser.add_subparsers(dest="action")
    uphp_sub.add_parser("plan", parents=[common], help="Ports and memory for target errors")

    # qrac demo
    qrac_parser = subparsers.add_parser("qrac", help="Random access code tools")
    qrac_sub = qrac_parser.add_subparsers(dest="action")
    demo_parser = qrac_sub.add_parser("demo", parents=[common], help="Guess probabilities of a random QRAC")
    demo_parser.add_argument("--k", type=int, default=1, help="Index bits; encodes 2^k bits (default: 1)")

    args = parser.parse_args(argv)
    _configure_logging(getattr(args, "verbose", 0))

    commands = {
        "status": cmd_status,
        "table": cmd_table,
        "verify": cmd_verify,
        "sample": cmd_sample,
        ("uphp", "plan"): cmd_uphp_plan,
        ("qrac", "demo"): cmd_qrac_demo,
    }

    key = (args.command, args.action) if args.command in ("uphp", "qrac") else args.command
    if key in commands:
        commands[key](args)
    elif args.command in ("uphp", "qrac"):
        parser.parse_args([args.command, "--help"])
    else:
        parser.print_help()


if __name__ == "__main__":
    main()
