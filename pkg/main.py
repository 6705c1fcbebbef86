#!/usr/bin/env python3
"""
evans-ep - CLI Entry Point

Solitary waves of the Euler-Poisson system, their Evans function and the
instability-criterion integrals, exported as plot-ready CSV/JSON datasets.

Usage:
    python main.py peaks --K 1 --eps 0.002,0.070,0.1550,0.1552
    python main.py zeros --K 1 --eps 0.05 --circle 0,0:r=auto
    python main.py evans --K 1 --eps 0 --lambdas 0.1,0.2+0.1j --format json
    python main.py criterion --K 1 --eps log:0.002:0.15:20 --output q.csv
"""

import argparse
import sys
from typing import List, Optional

from pydantic import ValidationError

from src.harness import run
from src.run_config import Command, build_run_config


def add_common_arguments(sub: argparse.ArgumentParser):
    sub.add_argument('--config', help='key = value file; flags override its entries')
    sub.add_argument('--K', type=float, help='Temperature ratio K >= 0')
    sub.add_argument('--eps', help='Amplitudes: list "a,b", "lin:a:b:n", "log:a:b:n" or "auto"')
    sub.add_argument('--ode-tol', dest='ode_tol', type=float, help='Evans integrator tolerance')
    sub.add_argument('--profile-tol', dest='profile_tol', type=float, help='Wave integrator tolerance')
    sub.add_argument('--tail-tol', dest='tail_tol', type=float, help='Far-field cut-off for the wave domain')
    sub.add_argument('--output', '-o', help='Output file (stdout when omitted)')
    sub.add_argument('--format', choices=['csv', 'json'], help='Output format (default: csv)')
    sub.add_argument('--jobs', '-j', type=int, help='Parallel workers (default: EVANS_EP_JOBS or CPU count)')
    sub.add_argument('--quiet', '-q', action='store_true', default=None, help='Silence progress lines')


def add_lambda_arguments(sub: argparse.ArgumentParser):
    sub.add_argument('--lambdas', '--grid', dest='lambdas', help='Complex list, e.g. "0.1,0.2+0.1j"')
    sub.add_argument('--re', help='Real-part grid (with --im gives a Cartesian grid)')
    sub.add_argument('--im', help='Imaginary-part grid')


def add_shooting_arguments(sub: argparse.ArgumentParser):
    sub.add_argument('--X', type=float, help='Shooting half-domain')
    sub.add_argument('--c0', type=float, help='Weight constant, beta = c0 sqrt(eps)')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="evans-ep - Euler-Poisson solitary waves, Evans function and instability criteria",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
    python main.py wave --K 1 --eps 0.05 --output wave.csv
    python main.py zeros --K 1 --eps 0.05 --annulus 0.1,5
    python main.py criterion-k0 --eps lin:0.55:0.58:7 --policy interval_a
        """
    )

    subparsers = parser.add_subparsers(dest='command', help='Commands')

    sub = subparsers.add_parser('wave', help='Solitary-wave profiles')
    add_common_arguments(sub)
    sub.add_argument('--c-derivative', dest='c_derivative', action='store_true', default=None,
                     help='Add dn/dc, du/dc, dphi/dc columns (central differences in c)')

    sub = subparsers.add_parser('peaks', help='Peak values (n_s, n*, u*, phi*)')
    add_common_arguments(sub)

    sub = subparsers.add_parser('evans', help='Evans function on a lambda grid')
    add_common_arguments(sub)
    add_lambda_arguments(sub)
    add_shooting_arguments(sub)
    sub.add_argument('--meet-at-zero', dest='meet_at_zero', action='store_true', default=None,
                     help='Cross-check with the bidirectional product at x = 0')

    sub = subparsers.add_parser('evans-kdv', help='KdV Evans function, closed form vs shooting')
    add_common_arguments(sub)
    add_lambda_arguments(sub)
    add_shooting_arguments(sub)

    sub = subparsers.add_parser('converge', help='Scaled Evans function against its KdV limit')
    add_common_arguments(sub)
    add_lambda_arguments(sub)
    add_shooting_arguments(sub)

    sub = subparsers.add_parser('zeros', help='Zero count of the Evans function on a contour')
    add_common_arguments(sub)
    add_shooting_arguments(sub)
    sub.add_argument('--circle', help='Circle "cx,cy:r=auto" (auto: r = 0.5 eps^1.5)')
    sub.add_argument('--annulus', help='Right half annulus "inner,outer"')
    sub.add_argument('--nodes', type=int, help='Initial contour nodes (default: 64)')

    for name, help_text in (('criterion', 'Q(c) and dQ/dc'), ('criterion-k0', 'Q0(c) and dQ0/dc for K = 0')):
        sub = subparsers.add_parser(name, help=help_text)
        add_common_arguments(sub)
        sub.add_argument('--policy', choices=['regularized', 'interval_a', 'interval_b'],
                         help='Endpoint treatment (default: regularized)')
        sub.add_argument('--no-derivative', dest='derivative', action='store_false', default=None,
                         help='Skip dQ/dc')

    sub = subparsers.add_parser('spectrum', help='Essential-spectrum curves')
    add_common_arguments(sub)
    sub.add_argument('--beta', type=float, help='Weight exponent (default: c0 sqrt(eps))')
    sub.add_argument('--c0', type=float, help='Weight constant')
    sub.add_argument('--k', help='Wavenumber grid (default: lin:-10:10:401)')

    sub = subparsers.add_parser('threshold', help='Gradient threshold du/dx / sqrt(1+n) for K = 0')
    add_common_arguments(sub)

    sub = subparsers.add_parser('dispersion', help='Dispersion curves and group velocities')
    add_common_arguments(sub)
    sub.add_argument('--k', help='Wavenumber grid (default: lin:-10:10:401)')

    sub = subparsers.add_parser('s1', help='S1 minimum eigenvalue along the wave (K > 0)')
    add_common_arguments(sub)

    sub = subparsers.add_parser('splitting', help='Weighted splitting over scaled lambdas, per amplitude')
    add_common_arguments(sub)
    add_lambda_arguments(sub)
    sub.add_argument('--c0', type=float, help='Weight constant')

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command is None:
        parser.print_help()
        print("\n💡 Quick start: python main.py peaks --K 1 --eps 0.002,0.070")
        return 1

    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        run_config = build_run_config(Command(args.command).value, flags, args.config)
    except (ValidationError, ValueError, OSError) as e:
        print(f"❌ Error: {e}", file=sys.stderr)
        return 1

    try:
        return run(run_config)
    except ValueError as e:
        print(f"❌ Error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
