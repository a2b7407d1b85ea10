#!/usr/bin/env python3
"""
Test runner for caplaw.

Usage:
    python auxillaries/run_tests.py [options] [-- extra pytest arguments]

Examples:
    python auxillaries/run_tests.py --fast
    python auxillaries/run_tests.py --only-slow --workers-check
    python auxillaries/run_tests.py -s unit/test_slln.py -- -k Report -x
    python auxillaries/run_tests.py --hatch
"""

import argparse
import os
import subprocess
import sys

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def build_command(args, extra):
    if args.hatch:
        # The testing environment pins the stack and writes coverage.xml
        return ['hatch', 'run', 'testing:run', *extra]

    target = os.path.join('tests', args.specific) if args.specific else 'tests'
    cmd = [sys.executable, '-m', 'pytest', target]
    if args.verbose:
        cmd.append('-v')
    markers = []
    if args.fast:
        markers.append('not slow')
    if args.only_slow:
        markers.append('slow')
    if markers:
        cmd += ['-m', ' and '.join(markers)]
    if args.workers_check:
        cmd += ['-k', 'workers or deterministic or identical']
    if args.coverage:
        cmd += ['--cov=caplaw', '--cov-report=term-missing', '--cov-report=html']
    return cmd + extra


def main():
    parser = argparse.ArgumentParser(description="Run the caplaw test suite")
    parser.add_argument("--coverage", action="store_true", help="Report coverage of the caplaw package")
    parser.add_argument("--verbose", "-v", action="store_true", help="Run tests in verbose mode")
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--fast", action="store_true", help="Skip tests marked slow (full-size simulations)")
    group.add_argument("--only-slow", action="store_true", help="Run only the tests marked slow")
    parser.add_argument("--workers-check", action="store_true",
                        help="Run only the reproducibility tests across worker counts and reruns")
    parser.add_argument("--specific", "-s", help="Test file or node id relative to tests/")
    parser.add_argument("--hatch", action="store_true", help="Run through the hatch 'testing' environment")

    args, extra = parser.parse_known_args()
    if extra and extra[0] == '--':
        extra = extra[1:]

    cmd = build_command(args, extra)
    print(f"\n🔄 {' '.join(cmd)}")
    returncode = subprocess.call(cmd, cwd=ROOT)

    if returncode == 0:
        print("\n🎉 All tests passed!")
        if args.coverage and not args.hatch:
            print("📊 Coverage report generated in htmlcov/")
    else:
        print(f"\n💥 Some tests failed (pytest exit code {returncode})")
    sys.exit(returncode)


if __name__ == "__main__":
    main()
