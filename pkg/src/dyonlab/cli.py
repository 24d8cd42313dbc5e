"""Command-line front end.

Exit codes: 0 success, 1 usage or input error, 2 convergence failure,
3 property check failure (``verify`` only).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from typing import Optional, Sequence

from . import __version__
from .errors import ConvergenceError, DyonlabError, UsageError
from .fixedpoint import SEED_ENV, DyonSolution, SolveOptions, solve_dyon
from .io import (RunManifest, dump_json, profiles_from_table, read_profile_csv, write_plot_data,
                 write_profile_csv)
from .model import ModelParameters

log = logging.getLogger("dyonlab")

EXIT_OK, EXIT_USAGE, EXIT_CONVERGENCE, EXIT_CHECKS = 0, 1, 2, 3
SWEEP_COLUMNS = ("beta", "C", "g", "status", "a_star", "b_star", "c_star", "q_m", "q_e",
                 "rate_F", "rate_h", "rate_Jpp", "iterations")
ORACLE_LIMIT = 15.0


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad flags; usage errors here are status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def _add_numerics(p: argparse.ArgumentParser) -> None:
    d = SolveOptions()
    p.add_argument("--g", type=float, default=1.0, help="gauge coupling (charges only)")
    p.add_argument("--rho0", type=float, default=d.rho0, help="inner cutoff")
    p.add_argument("--rho-max", type=float, default=None,
                   help="outer cutoff (default 25/nu, or 2000/nu at beta = 0)")
    p.add_argument("--fp-tol", type=float, default=d.fp_tol, help="outer-iteration tolerance")
    p.add_argument("--ode-tol", type=float, default=d.ode_tol, help="integrator relative tolerance")
    p.add_argument("--bisect-tol", type=float, default=d.bisect_tol, help="relative shooting bracket width")
    p.add_argument("--relax", type=float, default=d.relax, help="under-relaxation weight in (0, 1]")


def _options(args) -> SolveOptions:
    return SolveOptions(rho0=args.rho0, rho_max=args.rho_max, fp_tol=args.fp_tol, ode_tol=args.ode_tol,
                        bisect_tol=args.bisect_tol, relax=args.relax)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dyonlab", description="Dyon and monopole profiles by shooting and fixed-point iteration.")
    parser.add_argument("--version", action="version", version=f"dyonlab {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, helptext in (("solve", "solve one (beta, C) point"),
                           ("monopole", "solve the monopole (C = 0, J frozen at zero)")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--beta", type=float, default=1.0, help="Higgs coupling beta >= 0")
        if name == "solve":
            p.add_argument("--C", dest="bigC", type=float, default=0.0, help="asymptotic slope of J, 0 <= C < 1")
        _add_numerics(p)
        p.add_argument("--out", help="profile CSV path")
        p.add_argument("--manifest", help="run manifest JSON path")
        p.add_argument("--plot-data", metavar="DIR", help="directory for plot-ready data files")
        p.add_argument("--oracle-check", action="store_true",
                       help="compare with the closed form (beta = 0 only)")

    p = sub.add_parser("sweep", help="solve a (beta, C) table")
    p.add_argument("--beta", type=_float_list, required=True, help="comma-separated beta values")
    p.add_argument("--C", dest="bigC", type=_float_list, required=True, help="comma-separated C values")
    _add_numerics(p)
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--out", help="sweep CSV path (default stdout)")

    p = sub.add_parser("verify", help="run the property checks on a profile CSV")
    p.add_argument("profile", help="profile CSV written by solve")
    p.add_argument("--manifest", help="manifest JSON supplying beta, C and g")
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--C", dest="bigC", type=float, default=None)
    p.add_argument("--g", type=float, default=None)
    p.add_argument("--out", help="report JSON path (default stdout)")

    p = sub.add_parser("oracle", help="write the closed-form beta = 0 profiles")
    p.add_argument("--C", dest="bigC", type=float, default=0.0)
    p.add_argument("--g", type=float, default=1.0)
    p.add_argument("--rho0", type=float, default=SolveOptions().rho0)
    p.add_argument("--rho-max", type=float, default=None, help="outer cutoff (default 25/nu)")
    p.add_argument("--out", help="profile CSV path")
    return parser


def _summary(sol: DyonSolution) -> dict:
    return {"beta": sol.params.beta, "C": sol.params.bigC, "g": sol.params.g,
            "a_star": sol.a_star, "b_star": sol.b_star, "c_star": sol.c_star,
            "q_m": sol.charges[0], "q_e": sol.charges[1], "iterations": sol.iterations,
            "residuals": list(sol.residuals), "accepted": sol.accepted}


def _print_json(obj) -> None:
    from .io import _clean

    print(json.dumps(_clean(obj), indent=2, sort_keys=True))


def cmd_solve(args, monopole: bool = False) -> int:
    bigC = 0.0 if monopole else args.bigC
    params = ModelParameters(args.beta, bigC, args.g, "monopole" if monopole else "dyon")
    if args.oracle_check and params.beta != 0.0:
        raise UsageError("--oracle-check needs beta = 0")
    opts = _options(args)
    try:
        sol = solve_dyon(params, opts)
    except ConvergenceError as exc:
        print(f"dyonlab: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    oracle = None
    if args.oracle_check:
        from .verify import bps_oracle, compare_to_oracle

        oracle = max(compare_to_oracle(sol, bps_oracle(params.bigC), ORACLE_LIMIT).values())
    if args.out:
        write_profile_csv(args.out, sol.F, sol.h, sol.J)
    if args.manifest:
        RunManifest.from_solution(sol, os.environ.get(SEED_ENV) or None, oracle).write(args.manifest)
    if args.plot_data:
        write_plot_data(args.plot_data, sol)
    out = _summary(sol)
    if oracle is not None:
        out["oracle_supnorm"] = oracle
    _print_json(out)
    return EXIT_OK


def _sweep_point(point) -> dict:
    beta, bigC, g, opts = point
    row = {"beta": beta, "C": bigC, "g": g}
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            sol = solve_dyon(ModelParameters(beta, bigC, g), opts)
    except (DyonlabError, ValueError) as exc:
        row["status"] = "failed"
        log.warning("sweep point beta=%g C=%g failed: %s", beta, bigC, exc)
        return row
    row.update(status="ok" if sol.accepted else "unaccepted", a_star=sol.a_star, b_star=sol.b_star,
               c_star=sol.c_star, q_m=sol.charges[0], q_e=sol.charges[1], rate_F=sol.decay_fits[0],
               rate_h=sol.decay_fits[1], rate_Jpp=sol.decay_fits[2], iterations=sol.iterations)
    return row


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "" if math.isnan(v) else format(v, ".17g")
    return str(v)


def cmd_sweep(args) -> int:
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    opts = _options(args)
    for b in args.beta:
        for c in args.bigC:
            ModelParameters(b, c, args.g)
    points = [(b, c, args.g, opts) for b in args.beta for c in args.bigC]
    if args.jobs == 1 or len(points) == 1:
        rows = [_sweep_point(p) for p in points]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_point, points))
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            writer.writerow([_cell(row.get(k)) for k in SWEEP_COLUMNS])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_CONVERGENCE if any(r["status"] == "failed" for r in rows) else EXIT_OK


def _verify_params(args) -> ModelParameters:
    beta, bigC, g = 0.0, 0.0, 1.0
    if args.manifest:
        p = RunManifest.read(args.manifest).params
        beta, bigC, g, mode = p["beta"], p["C"], p["g"], p["mode"]
    else:
        mode = "dyon"
    beta = beta if args.beta is None else args.beta
    bigC = bigC if args.bigC is None else args.bigC
    g = g if args.g is None else args.g
    return ModelParameters(beta, bigC, g, mode)


def cmd_verify(args) -> int:
    from .model import residual
    from .observables import electric_charge_flux, magnetic_charge
    from .verify import check_theorem, decay_fits

    params = _verify_params(args)
    F, h, J = profiles_from_table(read_profile_csv(args.profile))
    x0 = F.grid.rho0
    sol = DyonSolution(params=params, F=F, h=h, J=J, a_star=F.derivs[0] / (2 * x0),
                       b_star=h.derivs[0], c_star=J.derivs[0] / (2 * x0))
    report = check_theorem(sol)
    doc = {"version": 1, "tool_version": __version__, "profile": args.profile, "params": params.as_dict(),
           "residuals": list(residual(sol)),
           "charges": {"q_m": magnetic_charge(sol), "q_e": electric_charge_flux(sol)},
           "decay_fits": dict(zip(("F", "one_minus_h", "Jpp"), decay_fits(sol))),
           **report.as_dict()}
    if args.out:
        dump_json(args.out, doc)
    else:
        _print_json(doc)
    for name in report.failed():
        print(f"dyonlab: check failed: {name}", file=sys.stderr)
    return EXIT_OK if report.overall else EXIT_CHECKS


def cmd_oracle(args) -> int:
    from .grid import default_grid
    from .verify import bps_oracle

    params = ModelParameters(0.0, args.bigC, args.g)
    nu = params.nu
    rho_max = 25.0 / nu if args.rho_max is None else args.rho_max
    oracle = bps_oracle(args.bigC)
    grid = default_grid(args.rho0, rho_max)
    if args.out:
        write_profile_csv(args.out, *oracle.profiles(grid))
    _print_json({"C": args.bigC, "nu": nu, "a_star": -nu**2 / 6, "b_star": nu / 3,
                 "c_star": args.bigC * nu / 3, "q_m": 1.0 / (2.0 * args.g),
                 "q_e": args.bigC / (args.g * nu)})
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "solve":
            return cmd_solve(args)
        if args.command == "monopole":
            return cmd_solve(args, monopole=True)
        if args.command == "sweep":
            return cmd_sweep(args)
        if args.command == "verify":
            return cmd_verify(args)
        return cmd_oracle(args)
    except (DyonlabError, ValueError, OSError) as exc:
        print(f"dyonlab: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
