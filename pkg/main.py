import argparse
import glob
import logging
import os
import sys

from dotenv import load_dotenv

from src.errors import LocalityError
from src.runner import EXIT_INVALID, EXIT_OK, ExperimentRunner, RunSettings, exit_code_for

CONFIG_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "configs")

logger = logging.getLogger("localitylab")


def setup_logging(verbose: bool, quiet: bool = False):
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Locality experiments for time-dependent Lindblad dynamics")
    parser.add_argument("-v", "--verbose", action="store_true", help="Enable verbose (DEBUG) logging")
    parser.add_argument("--quiet", action="store_true", help="Only warnings and errors; no progress bars")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run an experiment config and write its reports")
    run.add_argument("--config", required=True, help="Path to an experiment TOML file")
    run.add_argument("--out-dir", help="Report directory (default: $LOCALITY_OUT_DIR, [output].dir, ./reports)")
    run.add_argument("--jobs", type=int, default=None, help="Worker threads for grid fan-out ($LOCALITY_JOBS)")
    run.add_argument("--seed", type=int, default=None, help="Override the config's RNG seed")
    run.add_argument("--tolerance-scale", type=float, default=1.0, help="Multiply the config's tolerance")
    run.add_argument("--save-matrices", action="store_true", help="Also write materialized propagators as .npy")

    validate = sub.add_parser("validate", help="Check a config without running it")
    validate.add_argument("--config", required=True, help="Path to an experiment TOML file")

    sub.add_parser("list-examples", help="List the bundled example configs")
    return parser


def cmd_run(args) -> int:
    if args.tolerance_scale <= 0:
        logger.error("--tolerance-scale must be positive")
        return EXIT_INVALID
    jobs = args.jobs or (int(os.environ["LOCALITY_JOBS"]) if os.getenv("LOCALITY_JOBS") else None)
    runner = ExperimentRunner(RunSettings(
        out_dir=args.out_dir,
        jobs=jobs,
        seed=args.seed,
        tolerance_scale=args.tolerance_scale,
        quiet=args.quiet,
        save_matrices=args.save_matrices,
    ))
    try:
        _, paths = runner.run(args.config)
    except LocalityError as e:
        code = exit_code_for(e)
        logger.error(f"{type(e).__name__}: {e}")
        for path in getattr(e, "report_paths", []):
            print(path)
        return code
    except Exception as e:
        logger.exception(f"Numerical failure: {e}")
        return exit_code_for(e)
    for path in paths:
        print(path)
    return EXIT_OK


def cmd_validate(args) -> int:
    diagnostics = ExperimentRunner(RunSettings(quiet=True)).validate(args.config)
    for d in diagnostics:
        print(d)
    if not diagnostics:
        print(f"{args.config}: OK")
    return EXIT_OK if not diagnostics else EXIT_INVALID


def cmd_list_examples(_args) -> int:
    for path in sorted(glob.glob(os.path.join(CONFIG_DIR, "*.toml"))):
        print(os.path.splitext(os.path.basename(path))[0])
    return EXIT_OK


def main(argv=None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose, args.quiet)
    commands = {"run": cmd_run, "validate": cmd_validate, "list-examples": cmd_list_examples}
    return commands[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
