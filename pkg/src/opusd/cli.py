"""Command-line interface: ``opusd <command> -i ensemble.json``.

Exit codes: 0 ok, 1 usage, 2 invalid input, 3 solver failure,
4 internal cross-check failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from contextlib import contextmanager

import numpy as np

from . import __version__
from .ensemble import dumps_ensemble, ensemble_to_dict, gram_matrix, parse_ensemble, validate_ensemble
from .exceptions import CrossCheckError, SolverError, TooLarge, TooManyAxes, ValidationError
from .feasible import boundary_directions, boundary_points
from .kkt import MAX_EXHAUSTIVE_N, PHASE_TOL, solve_optimal
from .oracle import (
    MAX_GRID_AXES,
    grid_refine_maximize,
    simulate_measurement,
    support_exhaustive_maximize,
)
from .sdpcheck import slackness_and_gap

SCHEMA_VERSION = "opusd.report/1"
AGREEMENT_TOL = 1e-4

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_SOLVER, EXIT_INTERNAL = 0, 1, 2, 3, 4

logger = logging.getLogger("opusd")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def dumps_report(report: dict) -> str:
    """Canonical report text; stable under a ``json`` load/dump round trip."""
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


class _Timer:
    def __init__(self):
        self.timings = {}

    @contextmanager
    def __call__(self, name):
        start = time.perf_counter()
        yield
        self.timings[name] = time.perf_counter() - start


def _read_input(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _load(args):
    e = validate_ensemble(parse_ensemble(_read_input(args.input)))
    canonical = dumps_ensemble(e)
    digest = {
        "sha256": hashlib.sha256(canonical.encode("utf-8")).hexdigest(),
        "ensemble": ensemble_to_dict(e),
    }
    return e, digest


def _solve(e, args, timer):
    with timer("solve"):
        return solve_optimal(
            e,
            tol_feas=args.tol_feas,
            tol_phase=args.tol_phase,
        )


def _run_oracle(e, args, timer):
    with timer("oracle"):
        if e.n_states <= MAX_GRID_AXES:
            return grid_refine_maximize(e, args.grid_resolution, tol=args.tol_feas)
        return support_exhaustive_maximize(e, args.grid_resolution, tol=args.tol_feas)


def cmd_validate(e, digest, args, timer):
    gram = gram_matrix(e)
    eig = np.linalg.eigvalsh(gram)
    return {
        "valid": True,
        "n_states": e.n_states,
        "dim": e.dim,
        "gram_min_eigenvalue": float(eig[0]),
        "gram_condition_number": float(eig[-1] / eig[0]),
    }


def cmd_solve(e, digest, args, timer):
    sol = _solve(e, args, timer)
    out = {"solution": sol.to_dict(verbose=args.verbose)}
    if args.oracle:
        result = _run_oracle(e, args, timer)
        diff = abs(result.P_best - sol.success_probability)
        out["oracle"] = result.to_dict()
        out["agreement"] = bool(diff <= AGREEMENT_TOL)
        out["agreement_difference"] = float(diff)
        if not out["agreement"]:
            raise CrossCheckError(
                f"analytic P={sol.success_probability!r} and oracle P={result.P_best!r} differ by {diff:.3e}",
                out,
            )
    if args.sdp:
        with timer("sdp"):
            out["sdp"] = slackness_and_gap(e, sol).to_dict()
    if args.simulate:
        with timer("simulate"):
            out["simulation"] = simulate_measurement(e, sol.povm, args.trials, args.seed).to_dict()
    return out


def cmd_oracle(e, digest, args, timer):
    out = {}
    if e.n_states <= MAX_GRID_AXES:
        with timer("grid"):
            out["grid"] = grid_refine_maximize(e, args.grid_resolution, tol=args.tol_feas).to_dict()
    if args.exhaustive or e.n_states > MAX_GRID_AXES:
        if e.n_states > MAX_EXHAUSTIVE_N:
            raise TooLarge(f"support enumeration is limited to N <= {MAX_EXHAUSTIVE_N}")
        with timer("support_exhaustive"):
            out["support_exhaustive"] = support_exhaustive_maximize(
                e, args.grid_resolution, tol=args.tol_feas
            ).to_dict()
    return out


def cmd_simulate(e, digest, args, timer):
    sol = _solve(e, args, timer)
    with timer("simulate"):
        report = simulate_measurement(e, sol.povm, args.trials, args.seed)
    return {
        "solution": sol.to_dict(verbose=args.verbose),
        "simulation": report.to_dict(),
        "expected_success": float(sol.success_probability),
    }


def cmd_sdp_check(e, digest, args, timer):
    sol = _solve(e, args, timer)
    with timer("sdp"):
        gap = slackness_and_gap(e, sol)
    return {"solution": sol.to_dict(verbose=args.verbose), "sdp": gap.to_dict()}


def cmd_boundary(e, digest, args, timer):
    dirs = boundary_directions(e.n_states, args.samples, args.seed)
    with timer("boundary"):
        points, values = boundary_points(e, dirs, tol=args.tol_feas)
    return {
        "boundary": {
            "points": points.tolist(),
            "polynomial_values": values.tolist(),
        }
    }


COMMANDS = {
    "validate": cmd_validate,
    "solve": cmd_solve,
    "oracle": cmd_oracle,
    "simulate": cmd_simulate,
    "sdp-check": cmd_sdp_check,
    "boundary": cmd_boundary,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-i", "--input", required=True, help="ensemble JSON file, '-' for stdin")
    common.add_argument("--output", help="write the report to FILE instead of stdout")
    common.add_argument("--tol-feas", type=float, default=1e-9, help="eigenvalue tolerance for feasibility")
    common.add_argument("--tol-phase", type=float, default=PHASE_TOL, help="max |Im p_i| accepted as real")
    common.add_argument("--grid-resolution", type=int, default=50, help="oracle grid points per axis")
    common.add_argument("--trials", type=int, default=100_000, help="Monte Carlo trials")
    common.add_argument("--seed", type=int, default=42, help="random seed")
    common.add_argument("--no-timings", action="store_true", help="omit timings from the report")
    common.add_argument("--verbose", action="store_true", help="include every phase candidate")

    parser = _Parser(prog="opusd", description="Optimal unambiguous discrimination of pure states")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    sub.add_parser("validate", parents=[common], help="check an ensemble file")
    p = sub.add_parser("solve", parents=[common], help="analytic optimal measurement")
    p.add_argument("--oracle", action="store_true", help="cross-check against the brute-force oracle")
    p.add_argument("--sdp", action="store_true", help="attach the duality-gap report")
    p.add_argument("--simulate", action="store_true", help="attach a Monte Carlo run")
    p = sub.add_parser("oracle", parents=[common], help="brute-force maximization only")
    p.add_argument("--exhaustive", action="store_true", help="also maximize on every support face")
    sub.add_parser("simulate", parents=[common], help="simulate the optimal measurement")
    sub.add_parser("sdp-check", parents=[common], help="duality gap and slackness at the optimum")
    p = sub.add_parser("boundary", parents=[common], help="sample points on the feasible boundary")
    p.add_argument("--samples", type=int, default=64, help="number of boundary points")
    return parser


def _emit(report, args):
    text = dumps_report(report)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr)

    timer = _Timer()
    report = {"schema_version": SCHEMA_VERSION, "command": args.command}
    try:
        with timer("load"):
            e, digest = _load(args)
        report["input"] = digest
        report.update(COMMANDS[args.command](e, digest, args, timer))
        code = EXIT_OK
    except ValidationError as exc:
        print(f"opusd: invalid input: {exc}", file=sys.stderr)
        report.update({"valid": False, "error": str(exc), "error_type": type(exc).__name__})
        code = EXIT_INVALID
    except OSError as exc:
        print(f"opusd: cannot read input: {exc}", file=sys.stderr)
        report.update({"valid": False, "error": str(exc), "error_type": type(exc).__name__})
        code = EXIT_INVALID
    except (SolverError, TooManyAxes) as exc:
        print(f"opusd: solver failure: {exc}", file=sys.stderr)
        report.update({"error": str(exc), "error_type": type(exc).__name__})
        code = EXIT_SOLVER
    except CrossCheckError as exc:
        print(f"opusd: internal cross-check failed: {exc.args[0]}", file=sys.stderr)
        if len(exc.args) > 1 and isinstance(exc.args[1], dict):
            report.update(exc.args[1])
        report.update({"error": str(exc.args[0]), "error_type": type(exc).__name__})
        code = EXIT_INTERNAL

    if not args.no_timings:
        report["timings"] = timer.timings
    try:
        _emit(report, args)
    except ValueError as exc:
        print(f"opusd: report contains non-finite values: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
