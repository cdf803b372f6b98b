"""Main entry point for the CLI."""

import argparse
import logging
import sys
from collections.abc import Iterable
from pathlib import Path

from cdrcommute.config import AnalysisConfig, FilterConfig, WorldConfig
from cdrcommute.constants import DEBUG
from cdrcommute.exceptions import CommuteError, ConfigError, ExitCodes, exit_code_for
from cdrcommute.pipeline import compare_regions, evaluate, run_pipeline
from cdrcommute.synth import generate_world, simulate_calls, write_world
from cdrcommute.utils import parse_key_values

log = logging.getLogger("cdrcommute")

ANALYSIS_KEYS = tuple(AnalysisConfig.converters) + tuple(FilterConfig.converters)
WORLD_KEYS = tuple(WorldConfig.converters)


def add_config_flags(parser: argparse.ArgumentParser, keys: Iterable[str]) -> None:
    """Add ``-c/--config`` and one override flag per config key."""
    parser.add_argument(
        "-c",
        "--config",
        type=Path,
        help="key = value config file (flags override its values)",
    )
    group = parser.add_argument_group("config overrides")
    for key in keys:
        group.add_argument(
            f"--{key.replace('_', '-')}",
            dest=f"cfg_{key}",
            metavar="VALUE",
            help=f"Set {key}",
        )


def get_args(argv):
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(
        prog="cdrcommute",
        description="Commute distance and timing analytics for CDR and GPS data",
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="store_true",
        help="Log stage progress",
    )
    parser.add_argument(
        "-d",
        "--debug",
        action="store_true",
        help="Print extra debugging information",
    )

    subparsers = parser.add_subparsers(
        title="Commands", dest="command", help="Available commands"
    )

    # `analyze` command
    analyze_parser = subparsers.add_parser(
        "analyze", help="Run the analysis pipeline and write every output table"
    )
    add_config_flags(analyze_parser, ANALYSIS_KEYS)

    # `synth` command
    synth_parser = subparsers.add_parser(
        "synth", help="Generate a synthetic commuter world with its ground truth"
    )
    synth_parser.add_argument(
        "outdir",
        metavar="OUTDIR",
        type=Path,
        help="Directory to write the world into",
    )
    add_config_flags(synth_parser, WORLD_KEYS)

    # `evaluate` command
    evaluate_parser = subparsers.add_parser(
        "evaluate", help="Score analysis outputs against a synthetic ground truth"
    )
    evaluate_parser.add_argument(
        "truth",
        metavar="GROUND_TRUTH",
        type=Path,
        help="ground_truth.csv written by synth",
    )
    add_config_flags(evaluate_parser, ANALYSIS_KEYS)

    # `compare` command
    compare_parser = subparsers.add_parser(
        "compare", help="KS-test commute distances between regions"
    )
    compare_parser.add_argument(
        "regions",
        metavar="REGION=HOME_WORK_CSV",
        nargs="+",
        help="Region label and its home_work.csv",
    )
    compare_parser.add_argument(
        "-o",
        "--outdir",
        type=Path,
        default=Path("out"),
        help="Directory to write into (default: out)",
    )

    return parser.parse_args(argv)


def configure_logging(args) -> None:
    """Set the root log level from the CLI flags and environment."""
    if args.debug or DEBUG:
        level = logging.DEBUG
    elif args.verbose:
        level = logging.INFO
    else:
        level = logging.WARNING
    logging.basicConfig(
        level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s"
    )


def config_values(args, keys: Iterable[str]) -> dict[str, str]:
    """Merge config file values with command line overrides."""
    values: dict[str, str] = {}

    if args.config is not None:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as err:
            raise ConfigError(
                f"Unable to read config file {args.config}: {err}"
            ) from err
        values.update(parse_key_values(text))

    for key in keys:
        override = getattr(args, f"cfg_{key}")
        if override is not None:
            values[key] = override

    return values


def run_analysis(args):
    """Run the pipeline and write every output table."""
    cfg = AnalysisConfig.from_mapping(config_values(args, ANALYSIS_KEYS))
    report = run_pipeline(cfg)

    parsed = report.stages[0].users if report.stages else 0
    print(
        f"Analyzed {parsed} users: {report.identified_fraction:.1%} with home/work, "
        f"{report.sampled_fraction:.1%} with commute samples"
    )
    for note in report.notes:
        print(f"Note: {note}")
    print(f"Outputs written to {cfg.outdir}")
    return ExitCodes.SUCCESS


def run_synth(args):
    """Generate and write a synthetic world."""
    cfg = WorldConfig.from_mapping(config_values(args, WORLD_KEYS))

    world = generate_world(cfg)
    calls, gps = simulate_calls(world)
    written = write_world(world, calls, gps, args.outdir)

    print(f"World of {len(world.agents)} agents with {len(calls)} calls")
    for path in written:
        print(f"Wrote {path}")
    return ExitCodes.SUCCESS


def run_evaluate(args):
    """Score a finished analysis against ground truth."""
    cfg = AnalysisConfig.from_mapping(config_values(args, ANALYSIS_KEYS))
    report = evaluate(cfg, args.truth, cfg.towers)

    print(f"Agents: {report.n_agents}, assigned: {report.n_assigned}")
    print(f"Home recovery: {report.home_recovery_rate:.3f}")
    print(f"Work recovery: {report.work_recovery_rate:.3f}")
    if report.distance_mae_km is not None:
        print(f"Distance MAE: {report.distance_mae_km:.3f} km")
    print(f"Samples: {report.n_samples}, violations: {report.violations}")
    if report.flagged_overestimates:
        print(
            f"Flagged samples: {len(report.flagged_overestimates)}, "
            f"violations: {report.flagged_violations}"
        )
    return ExitCodes.SUCCESS


def parse_region_args(values: Iterable[str]) -> dict[str, Path]:
    """Parse ``REGION=PATH`` arguments."""
    regions: dict[str, Path] = {}
    for value in values:
        region, sep, path = value.partition("=")
        if not sep or not region or not path:
            raise ConfigError(f"Expected REGION=PATH, got {value!r}")
        if region in regions:
            raise ConfigError(f"Region given twice: {region}")
        regions[region] = Path(path)
    if len(regions) < 2:
        raise ConfigError("At least two regions are needed for a comparison")
    return regions


def run_compare(args):
    """Compare commute distance distributions between regions."""
    pairs = compare_regions(parse_region_args(args.regions), args.outdir)

    for a, b, result in pairs:
        print(f"{a} vs {b}: D={result.d_statistic:.4f} p={result.p_value:.3g}")
    return ExitCodes.SUCCESS


COMMANDS = {
    "analyze": run_analysis,
    "synth": run_synth,
    "evaluate": run_evaluate,
    "compare": run_compare,
}


def main(argv=None):
    """Main entry point for the CLI."""
    args = get_args(sys.argv[1:] if argv is None else argv)
    command = args.command

    if command not in COMMANDS:
        print(f"Invalid command: {command}", file=sys.stderr)
        return ExitCodes.CONFIG_ERROR

    configure_logging(args)

    try:
        return COMMANDS[command](args)
    except CommuteError as err:
        log.debug("Command %s failed", command, exc_info=True)
        print(f"Error: {err}", file=sys.stderr)
        return exit_code_for(err)


if __name__ == "__main__":
    sys.exit(main())
