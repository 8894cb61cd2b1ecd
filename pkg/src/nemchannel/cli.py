"""Command-line interface.

Every subcommand writes its outputs (CSV/JSON) into the output root given by
``--out``, the ``NEMCHANNEL_OUT`` environment variable, or ``./nemchannel-out``
in that order, and prints a short JSON summary to stdout.

Exit codes: 0 on success, 1 on usage/configuration errors, 2 when a
computation fails (non-convergence, invalid coefficients, no root in
bracket, ...).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .asymptotics import LayerError
from .bvp import ConvergenceError
from .coefficients import DEFAULT_COEFFICIENTS, load_coefficients
from .figures import FIGURE_IDS
from .pipeline import (
    UsageError,
    default_output_root,
    run_config,
    run_stage,
)

__all__ = ["main", "build_parser"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message):  # noqa: D102 - argparse hook
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _put(params: dict, key: str, value) -> None:
    if value is not None:
        params[key] = value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="nemchannel",
        description="Static and dynamic solutions of pressure-driven "
                    "nematic channel flow with weak anchoring.")
    parser.add_argument("--out", type=Path, default=None,
                        help="output directory (default: $NEMCHANNEL_OUT "
                             "or ./nemchannel-out)")
    parser.add_argument("--coefficients", type=Path, default=None,
                        metavar="JSON",
                        help="JSON file with alpha1..alpha6 overrides")
    # the same flags are accepted after the subcommand; SUPPRESS keeps the
    # subparser from clobbering a value parsed at the top level
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=argparse.SUPPRESS)
    common.add_argument("--coefficients", type=Path, metavar="JSON",
                        default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("validate-coefficients", parents=[common],
                       help="scan g, the rotational denominator and the "
                            "Parodi relation")
    p.set_defaults(build=lambda a: ("validate-coefficients", {}))

    p = sub.add_parser("statics-analytic", parents=[common],
                       help="zero-flow equilibria and anchoring thresholds")
    p.add_argument("--B", type=float, required=True,
                   help="inverse anchoring strength")
    p.add_argument("--a-max", type=float, default=None)

    def _b_statics_analytic(a):
        params = {"B": a.B}
        _put(params, "a_max", a.a_max)
        return "statics-analytic", params
    p.set_defaults(build=_b_statics_analytic)

    p = sub.add_parser("statics-solve", parents=[common],
                       help="steady profile at one (G, B) by continuation "
                            "from the zero-flow state")
    p.add_argument("--G", type=float, required=True)
    p.add_argument("--B", type=float, required=True)
    p.add_argument("--family", choices=("I", "II", "III", "IV"), default="I")
    p.add_argument("--n", type=int, default=0)
    p.add_argument("--n-points", type=int, default=None)
    p.add_argument("--intercept-index", type=int, default=None,
                   help="which of the two Type III/IV intercepts to seed")

    def _b_statics_solve(a):
        params = {"G": a.G, "B": a.B, "family": a.family, "n": a.n}
        _put(params, "n_points", a.n_points)
        _put(params, "intercept_index", a.intercept_index)
        return "statics-solve", params
    p.set_defaults(build=_b_statics_solve)

    p = sub.add_parser("continue", parents=[common],
                       help="continue a branch in G and store it")
    p.add_argument("--family", choices=("I", "II", "III", "IV"), default="I")
    p.add_argument("--n", type=int, default=0)
    p.add_argument("--B", type=float, required=True)
    p.add_argument("--G-targets", type=float, nargs="+", required=True)
    p.add_argument("--n-points", type=int, default=None)
    p.add_argument("--db", default=None,
                   help="branch database directory name under the output")

    def _b_continue(a):
        params = {"family": a.family, "n": a.n, "B": a.B,
                  "G_targets": a.G_targets}
        _put(params, "n_points", a.n_points)
        _put(params, "db", a.db)
        return "continue", params
    p.set_defaults(build=_b_continue)

    p = sub.add_parser("folds", parents=[common],
                       help="locate the anchoring fold of a branch pair")
    p.add_argument("--i", type=int, required=True,
                   help="fold index (1 = first Type II fold, 2, 4, ... = "
                        "Type I folds)")
    p.add_argument("--G", type=float, default=None)
    p.add_argument("--B-hi", type=float, default=None)
    p.add_argument("--B-start", type=float, default=None)

    def _b_folds(a):
        params = {"i": a.i}
        _put(params, "G", a.G)
        _put(params, "B_hi", a.B_hi)
        _put(params, "B_start", a.B_start)
        return "folds", params
    p.set_defaults(build=_b_folds)

    p = sub.add_parser("stability", parents=[common],
                       help="leading eigenvalues of the linearization about "
                            "a steady state")
    p.add_argument("--B", type=float, required=True)
    p.add_argument("--family", choices=("I", "II", "III", "IV"), default="I")
    p.add_argument("--n", type=int, default=0)
    p.add_argument("--G", type=float, default=None)
    p.add_argument("--k", type=int, default=None)

    def _b_stability(a):
        params = {"B": a.B, "family": a.family, "n": a.n}
        _put(params, "G", a.G)
        _put(params, "k", a.k)
        return "stability", params
    p.set_defaults(build=_b_stability)

    p = sub.add_parser("asymptotics-compare", parents=[common],
                       help="compare numerics with the small-G or large-G "
                            "approximation")
    p.add_argument("--regime", choices=("small", "large"), default="small")
    p.add_argument("--B", type=float, required=True)
    p.add_argument("--G-values", type=float, nargs="+", default=None)
    p.add_argument("--family", choices=("I", "II"), default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--k1", type=int, default=None,
                   help="large-G outer index at the left wall")
    p.add_argument("--k2", type=int, default=None,
                   help="large-G outer index at the right wall")
    p.add_argument("--n-points", type=int, default=None)

    def _b_asym(a):
        params = {"regime": a.regime, "B": a.B}
        _put(params, "G_values", a.G_values)
        _put(params, "family", a.family)
        _put(params, "n", a.n)
        _put(params, "k1", a.k1)
        _put(params, "k2", a.k2)
        _put(params, "n_points", a.n_points)
        return "asymptotics-compare", params
    p.set_defaults(build=_b_asym)

    p = sub.add_parser("evolve", parents=[common],
                       help="integrate the director equation to steady state")
    p.add_argument("--G", type=float, required=True)
    p.add_argument("--B", type=float, required=True)
    p.add_argument("--C", type=float, default=0.0,
                   help="initial slope / held boundary flux")
    p.add_argument("--init", choices=("constant", "linear",
                                      "linear_plus_half_pi"), default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--dz", type=float, default=None)
    p.add_argument("--t-max", type=float, default=None)
    p.add_argument("--t1", type=float, default=None,
                   help="pressure ramp centre (needs --delta)")
    p.add_argument("--delta", type=float, default=None,
                   help="pressure ramp steepness")
    p.add_argument("--t2", type=float, default=None,
                   help="anchoring ramp centre (needs --kappa)")
    p.add_argument("--kappa", type=float, default=None,
                   help="anchoring ramp steepness")
    p.add_argument("--literal-flux", action="store_true",
                   help="use the same ramped-flux sign at both walls")
    p.add_argument("--no-match", action="store_true",
                   help="skip matching the final state against equilibria")

    def _b_evolve(a):
        params = {"G": a.G, "B": a.B, "C": a.C}
        for key in ("init", "dt", "dz", "t1", "delta", "t2", "kappa"):
            _put(params, key, getattr(a, key))
        _put(params, "t_max", a.t_max)
        if a.literal_flux:
            params["literal_flux"] = True
        if a.no_match:
            params["match"] = False
        return "evolve", params
    p.set_defaults(build=_b_evolve)

    p = sub.add_parser("sweep-c-star", parents=[common],
                       help="basin sweep over the initial slope and/or "
                            "bisection of the a_-2 / a_0 boundary")
    p.add_argument("--G", type=float, required=True)
    p.add_argument("--B", type=float, required=True)
    p.add_argument("--bracket", type=float, nargs=2, default=None,
                   metavar=("LO", "HI"))
    p.add_argument("--C-values", type=float, nargs="+", default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--tol", type=float, default=None)

    def _b_cstar(a):
        params = {"G": a.G, "B": a.B}
        _put(params, "bracket", a.bracket)
        _put(params, "C_values", a.C_values)
        _put(params, "dt", a.dt)
        _put(params, "tol", a.tol)
        return "sweep-c-star", params
    p.set_defaults(build=_b_cstar)

    p = sub.add_parser("sweep-t1-star", parents=[common],
                       help="critical pressure delay for the ramped protocol")
    p.add_argument("--G-bar", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--t2", type=float, default=None)
    p.add_argument("--B-values", type=float, nargs="+", default=None)
    p.add_argument("--C-values", type=float, nargs="+", default=None)
    p.add_argument("--t1-values", type=float, nargs="+", default=None,
                   help="sweep outcomes over these delays instead of "
                        "bisecting")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--t1-max", type=float, default=None)

    def _b_t1star(a):
        params = {}
        _put(params, "G_bar", a.G_bar)
        _put(params, "delta", a.delta)
        _put(params, "kappa", a.kappa)
        _put(params, "t2", a.t2)
        _put(params, "B_values", a.B_values)
        _put(params, "C_values", a.C_values)
        _put(params, "t1_values", a.t1_values)
        _put(params, "tol", a.tol)
        _put(params, "t1_max", a.t1_max)
        return "sweep-t1-star", params
    p.set_defaults(build=_b_t1star)

    p = sub.add_parser("reproduce-figure", parents=[common],
                       help="regenerate the data behind one result figure")
    p.add_argument("--id", choices=FIGURE_IDS, required=True, dest="fig_id")
    p.add_argument("--quick", action="store_true",
                   help="coarser grids/fewer samples for smoke runs")

    def _b_fig(a):
        return "reproduce-figure", {"figure": a.fig_id, "quick": a.quick}
    p.set_defaults(build=_b_fig)

    p = sub.add_parser("run-config", parents=[common],
                       help="run a declarative multi-stage configuration "
                            "with manifest-based resume")
    p.add_argument("config", type=Path, help="JSON configuration file")
    p.set_defaults(build=None)

    return parser


def _summaryprint(payload: dict) -> None:
    print(json.dumps(payload, indent=1, default=str))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        c = (load_coefficients(args.coefficients)
             if args.coefficients is not None else DEFAULT_COEFFICIENTS)
        out = args.out if args.out is not None else default_output_root()
        if args.command == "run-config":
            if not args.config.exists():
                raise UsageError(f"no such configuration file: {args.config}")
            manifest = run_config(args.config,
                                  output_root=args.out,
                                  c=(c if args.coefficients is not None
                                     else None))
            _summaryprint({"manifest": str(manifest.path),
                           "stages": {k: v.get("status")
                                      for k, v in manifest.stages.items()}})
            return EXIT_OK
        kind, params = args.build(args)
        result = run_stage(kind, params, out, c)
        _summaryprint({"outputs": [str(f) for f in result.get("files", [])],
                       "summary": result.get("summary", {})})
        return EXIT_NUMERIC if result.get("failed") else EXIT_OK
    except UsageError as exc:
        print(f"nemchannel: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, LayerError, FloatingPointError,
            np.linalg.LinAlgError, ValueError, ArithmeticError) as exc:
        print(f"nemchannel: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
