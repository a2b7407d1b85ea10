"""Command-line driver: ``caplaw {conjugate,tau,tailbound,slln,verify}``."""

import argparse
import json
import logging
import sys

from pydantic import ValidationError

from ._errors import CaplawError
from ._pipeline import Pipeline

logger = logging.getLogger('caplaw')

EXIT_OK = 0
EXIT_CONFIG = 2


def _common_arguments():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='JSON file with run parameters; flags override its values.')
    common.add_argument('--seed', type=int, help='Master seed of all random streams.')
    common.add_argument('--out', dest='output_dir', help='Output directory.')
    common.add_argument('--format', choices=['json', 'csv', 'both'], help='Output format.')
    common.add_argument('--workers', type=int, help='Worker threads for sampling.')
    common.add_argument('--progress', dest='show_progress', action='store_const', const=True,
                        help='Show progress bars.')
    common.add_argument('--verbose', action='store_true', help='Log at DEBUG level.')
    return common


def build_parser():
    common = _common_arguments()
    parser = argparse.ArgumentParser(prog='caplaw', description='Capacities, sub-linear expectations and '
                                                                'phi-sub-Gaussian tail bounds.')
    commands = parser.add_subparsers(dest='command', required=True)

    conjugate = commands.add_parser('conjugate', parents=[common], help='Analytic vs numeric convex conjugates.')
    conjugate.add_argument('--p', type=float, help='Index of phi_p.')
    conjugate.add_argument('--a', type=float, help='Outer scale of psi(x) = a phi_p(b x).')
    conjugate.add_argument('--b', type=float, help='Inner scale of psi(x) = a phi_p(b x).')
    conjugate.add_argument('--y', type=float, nargs='+', help='Conjugate arguments.')
    conjugate.add_argument('--tol', type=float)

    tau = commands.add_parser('tau', parents=[common], help='Optimal phi-sub-Gaussian parameter.')
    tau.add_argument('--p', type=float)
    tau.add_argument('--oracle', choices=['exact', 'mc'])
    tau.add_argument('--a-hi', dest='a_hi', type=float)
    tau.add_argument('--tol', type=float)

    tailbound = commands.add_parser('tailbound', parents=[common], help='Capacity tail bounds.')
    tailbound.add_argument('--p', type=float)
    tailbound.add_argument('--a', type=float, help='Sub-Gaussian parameter.')
    tailbound.add_argument('--epsilon', type=float, nargs='+')
    tailbound.add_argument('--empirical-samples', dest='empirical_samples', type=int,
                           help='Also estimate the tail capacity with this many samples per model.')

    slln = commands.add_parser('slln', parents=[common], help='Capacity strong law simulation.')
    slln.add_argument('--n-steps', dest='n_steps', type=int)
    slln.add_argument('--n-paths', dest='n_paths', type=int)
    slln.add_argument('--epsilon', type=float)
    slln.add_argument('--n-min', dest='n_min', type=int)

    commands.add_parser('verify', parents=[common], help='Sub-linear expectation axiom suite.')
    return parser


def _load_config(path):
    if path is None:
        return {}
    with open(path, encoding='utf-8') as f:
        config = json.load(f)
    if not isinstance(config, dict):
        raise json.JSONDecodeError('top level must be an object', '', 0)
    return config


def _flag_overrides(args):
    """Flags given on the command line, shaped like a config file."""
    flags = {key: value for key, value in vars(args).items()
             if value is not None and key not in ('command', 'config', 'verbose', 'p', 'a', 'b',
                                                  'empirical_samples')}
    if args.command in ('conjugate', 'tau', 'tailbound'):
        phi = {'p': args.p}
        if args.command == 'conjugate':
            phi.update(a=args.a, b=args.b)
        phi = {k: v for k, v in phi.items() if v is not None}
        if phi:
            flags['phi'] = phi
    if args.command == 'tailbound':
        if args.a is not None:
            flags['a'] = args.a
        if args.empirical_samples is not None:
            flags['empirical'] = {'n_samples': args.empirical_samples}
    return flags


def _merge(file_config, flags):
    merged = dict(file_config)
    for key, value in flags.items():
        if isinstance(value, dict) and merged.get(key) is not None:
            # A non-object section in the file is left for validation to reject
            if isinstance(merged[key], dict):
                merged[key] = {**merged[key], **value}
        else:
            merged[key] = value
    return merged


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        config = _merge(_load_config(args.config), _flag_overrides(args))
        result = Pipeline.run(args.command, config)
    except CaplawError as e:
        logger.error("%s: %s", type(e).__name__, e)
        return e.exit_code
    except (ValidationError, json.JSONDecodeError, OSError) as e:
        logger.error("Invalid configuration: %s", e)
        return EXIT_CONFIG
    for path in result['files']:
        print(path)
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
