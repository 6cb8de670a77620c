"""
Command-line entry point.

    python -m warpcheck verify <scenario> [--seed N] [--tol X] [--format text|json] [--samples N]
    python -m warpcheck list-checks
    python -m warpcheck appendix-a [--seed N] [--format text|json]
"""
import argparse
import sys

from . import __version__
from .errors import ScenarioError, WarpCheckError
from .logger import logger
from .parser import load_scenario
from .runner import appendix_suite, emit, list_checks, run


def build_parser():
    parser = argparse.ArgumentParser(
        prog='warpcheck',
        description='Closed-form checks for doubly warped products and space-times',
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')

    subparsers = parser.add_subparsers(dest='command', help='Command to run')

    verify_parser = subparsers.add_parser('verify', help='Run the checks of a scenario file')
    verify_parser.add_argument('scenario', help='Scenario file, or its name under the fixture directory')
    _add_run_options(verify_parser)

    subparsers.add_parser('list-checks', help='List the available check kinds')

    appendix_parser = subparsers.add_parser('appendix-a', help='Run the built-in concurrent-family suite')
    _add_run_options(appendix_parser)
    return parser


def _add_run_options(parser):
    parser.add_argument('--seed', type=int, help='Override every sampling seed')
    parser.add_argument('--tol', type=float, help='Override every tolerance')
    parser.add_argument('--samples', type=int, help='Override every sample count')
    parser.add_argument('--format', choices=['text', 'json'], default='text', help='Report format')


def main(argv=None):
    """Run the CLI and return the process exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == 'verify':
        return _run_and_emit(lambda: load_scenario(args.scenario), args)
    elif args.command == 'list-checks':
        print(list_checks().to_string(index=False))
        return 0
    elif args.command == 'appendix-a':
        return _run_and_emit(appendix_suite, args)
    else:
        parser.print_help()
        return 2


def _run_and_emit(load, args):
    try:
        report = run(load(), seed=args.seed, tol=args.tol, samples=args.samples)
    except ScenarioError as e:
        logger.error(f"Scenario error: {e}")
        print(f"error: {e}", file=sys.stderr)
        return 2
    except WarpCheckError as e:
        logger.error(f"Invalid run options: {e}")
        print(f"error: {e}", file=sys.stderr)
        return 2
    _write(emit(report, args.format))
    return report.exit_code


def _write(data):
    sys.stdout.buffer.write(data)
    sys.stdout.flush()


if __name__ == '__main__':
    sys.exit(main())
