"""Command line entry point.

Exit codes: 0 all identities verified, 1 any identity failed or a
verification gate tripped, 2 configuration or usage problems.
"""

from __future__ import annotations

import argparse
import sys

from .ensembles import Ensemble
from .errors import ToolkitError
from .harness import COMMANDS, ConfigError, config_from_sources, execute


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="xindex",
        description=(
            "Verify relative-index, determinant, Schur-complement and "
            "scattering identities on seeded random matrix ensembles."
        ),
    )
    p.add_argument("--config", metavar="PATH", help="JSON config file; flags override it")
    p.add_argument("--command", choices=COMMANDS, help="what to run")
    p.add_argument("--seed", type=int, help="RNG seed (required; no entropy default)")
    p.add_argument("--dim", type=int, help="factor dimension when --blocks is not given")
    p.add_argument(
        "--blocks",
        metavar="SPEC",
        help='algebra descriptor, e.g. "2x0.25,2x0.25" (dim x weight per block)',
    )
    p.add_argument("--trials", type=int, help="number of seeded trials")
    p.add_argument("--tol", type=float, help="tolerance override for the command's checks")
    p.add_argument("--eps-start", type=float, help="first epsilon of the schedule")
    p.add_argument("--eps-factor", type=float, help="ratio between consecutive epsilons")
    p.add_argument("--eps-steps", type=int, help="number of epsilons in the schedule")
    p.add_argument("--out", metavar="PATH", help="write newline-delimited JSON reports here")
    p.add_argument(
        "--ensemble",
        choices=sorted(e.value for e in Ensemble),
        help="random ensemble for the primary operand",
    )
    p.add_argument("--matrix", metavar="PATH", help="operator file instead of an ensemble")
    p.add_argument("--matrix2", metavar="PATH", help="second operator file (ssf: H0)")
    p.add_argument("--floor", type=float, help="imaginary-part floor of dissipative draws")
    p.add_argument(
        "--no-figures",
        action="store_true",
        help="do not render PNG figures next to --out",
    )
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {
        "command": args.command,
        "seed": args.seed,
        "dim": args.dim,
        "algebra": args.blocks,
        "trials": args.trials,
        "tol": args.tol,
        "eps_start": args.eps_start,
        "eps_factor": args.eps_factor,
        "eps_steps": args.eps_steps,
        "out": args.out,
        "ensemble": args.ensemble,
        "matrix": args.matrix,
        "matrix2": args.matrix2,
        "floor": args.floor,
        "figures": False if args.no_figures else None,
    }
    try:
        config = config_from_sources(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        _reports, code = execute(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ToolkitError as exc:
        print(f"verification aborted: {exc}", file=sys.stderr)
        return 1
    return code


if __name__ == "__main__":
    raise SystemExit(main())
