"""Command line entry point.

Exit codes: 0 success, 2 invariant failure, 3 invalid configuration,
4 singular scheme met outside an expected case.
"""
from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from ..errors import ConstructionError, SingularSchemeError
from .config import KINDS, ConfigError, default_config, load_config
from .experiments import InvariantFailure, Table, run_experiment
from .io import format_value, write_table

EXIT_OK = 0
EXIT_INVARIANT = 2
EXIT_CONFIG = 3
EXIT_SINGULAR = 4

_HELP = {
    "solve": "solve catalog problems and write the coefficient vectors",
    "converge": "error bundles under k-halving and observed orders",
    "quasiopt": "discrete error against the best approximation",
    "bnb-scan": "discrete inf-sup constants over a parameter sweep",
    "cfl-scan": "explicit-side amplification of the stiffest mode",
    "gram-check": "closed-form Gram inverse and psi duality checks",
    "catalog": "list manufactured problems with their residual checks",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spacetime-bnb", description="Space-time discretisations of "
                                     "u' + A u = f with u(0) - Phi u(T) = xi0.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for kind in KINDS:
        p = sub.add_parser(kind, help=_HELP[kind], description=_HELP[kind])
        p.add_argument("--config", help="key = value or JSON configuration file")
        p.add_argument("--out", help="output directory (default: results)")
        p.add_argument("--format", choices=("csv", "json"), help="output format (default: csv)")
        p.add_argument("--seed", type=int, help="seed recorded in every row (unsigned 64-bit)")
        p.add_argument("--workers", type=int, help="process pool size for sweep points")
        p.add_argument("--quiet", action="store_true", help="print nothing on success")
    return parser


def _report(table: Table, paths, quiet: bool) -> None:
    if quiet:
        return
    print(f"{table.kind}: {len(table.rows)} rows, seed {table.meta.get('seed')}")
    for p in paths:
        print(f"  wrote {p}")
    if table.summary_columns and len(table.summary) <= 40:
        cols = table.summary_columns
        print("  " + " | ".join(cols))
        for r in table.summary:
            print("  " + " | ".join(format_value(r.get(c)) for c in cols))


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    kind = args.command
    try:
        cfg = load_config(args.config, kind) if args.config else default_config(kind)
        cfg = cfg.with_overrides(seed=args.seed, out=args.out, format=args.format, workers=args.workers)
    except (ConfigError, ConstructionError) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        table = run_experiment(cfg)
    except InvariantFailure as exc:
        print(f"error: invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except SingularSchemeError as exc:
        print(f"error: singular scheme: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except ConstructionError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    paths = write_table(table, cfg.out, cfg.format)
    _report(table, paths, args.quiet)
    if table.failures:
        for f in table.failures:
            print(f"FAIL {f}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
