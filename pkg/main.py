import argparse
import sys
from pathlib import Path
from time import perf_counter

from src.experiments.scenario_builder import scenario_timer
from src.experiments.scenarios import SCENARIOS, run_scenario
from src.utils.analysis.conformance_report import ConformanceReport
from src.utils.errors import InvalidInputError
from src.utils.load_config import SCENARIO_NAMES, Config
from src.utils.run_manager import RunManager

# Define project root relative to THIS file (main.py)
PROJECT_ROOT = Path(__file__).parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="frechet-lab",
        description="Fréchet means, cut loci and nonsmooth probes on closed-form manifolds.",
    )
    parser.add_argument("scenario", nargs="?", choices=SCENARIO_NAMES, help="Scenario to run")
    parser.add_argument("--config", type=Path, help="YAML overlay with lower-case section names")
    parser.add_argument("--out", type=Path, help="Run directory for the record, curves and configs")
    parser.add_argument("--seed", type=int, help="Overrides run SEED")
    parser.add_argument("--json", action="store_true", help="Print the run record as JSON, no progress")
    parser.add_argument("--force", action="store_true", help="Reuse an existing run directory")
    parser.add_argument("--list-scenarios", action="store_true", help="List scenarios with their citations")
    return parser


def build_overlay(args: argparse.Namespace) -> dict:
    """User overlay with the command-line overrides merged in."""
    overlay = dict(Config.read_overlay(args.config))
    overlay["scenario"] = {**(overlay.get("scenario") or {}), "SCENARIO": args.scenario}
    overlay["logger"] = {**(overlay.get("logger") or {}), "VERBOSE": not args.json}
    if args.seed is not None:
        overlay["run"] = {**(overlay.get("run") or {}), "SEED": args.seed}
    return overlay


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.list_scenarios:
        for entry in SCENARIOS.values():
            print(f"{entry.name:<16} {entry.citation:<40} {entry.description}")
        return 0
    if args.scenario is None:
        parser.error("a scenario is required unless --list-scenarios is given")

    try:
        config = Config.load(build_overlay(args))
        run_manager = RunManager(config, PROJECT_ROOT, args.out, args.force)
        run_manager.make_run_directory()
        record = run_scenario(config)
        run_manager.save(record)
    except (InvalidInputError, FileExistsError) as error:
        print(f"Error: {error}", file=sys.stderr)
        return 2

    if args.json:
        print(record.to_json())
    else:
        report = ConformanceReport()
        report.extend(record.checks)
        print(report.format_table())
        scenario_timer.print_times()
        if run_manager.active:
            print(f"[Saved run: {run_manager.current_run_dir}]")
    return record.exit_code


if __name__ == '__main__':
    start = perf_counter()
    exit_code = main()
    if "--json" not in sys.argv:
        print("Total code time", perf_counter() - start)
    sys.exit(exit_code)
