"""Command line entry point: ``ccpb <subcommand> [options]``.

Exit codes: 0 success, 1 validation failure, 2 solver error, 3 config error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from typing import List, Optional, Sequence

import numpy as np

from . import asymptotics
from .config import RunConfig, load_config, parse_ladder
from .diagnostics import capacitance_numeric, pohozaev_check, validate_report
from .errors import (
    AsymptoticsError,
    CCPBError,
    ConfigError,
    DiagnosticsError,
    MeshError,
    OutOfDomain,
    ParameterError,
    SolverError,
    UnknownSubcommand,
)
from .solver import Solution, evaluate_solution, robin_transform, solve_continuation

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER, EXIT_CONFIG = 0, 1, 2, 3
SUBCOMMANDS = ("solve", "sweep", "asymptotics", "capacitance", "validate")

# Each sweep/validate run of P0 needs only a few hundred nodes, so the
# per-eps post-processing is the only part worth spreading over threads.
DEFAULT_THREADS = 1


def worker_count() -> int:
    raw = os.environ.get("CCPB_THREADS")
    if not raw:
        return DEFAULT_THREADS
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"CCPB_THREADS={raw!r} is not an integer") from None


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def write_profile(sol: Solution, path: str, fmt: str = "csv"):
    """Nodal profile r, U, dU_dr, rho."""
    r = sol.mesh.nodes
    U, dU, rho = evaluate_solution(sol, r)
    if fmt == "json":
        _write_json(path, {"r": r, "U": U, "dU_dr": dU, "rho": rho})
        return
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r", "U", "dU_dr", "rho"])
        for row in zip(r, U, dU, rho):
            writer.writerow([_fmt(v) for v in row])


def approach_ladder(eps: float, start: float = 0.5) -> List[float]:
    """Continuation path from ``start`` down to ``eps`` in steps of 2^{-1/2}."""
    path = []
    e = start
    while e > eps * 2**0.25:
        path.append(e)
        e *= 2**-0.5
    path.append(eps)
    return path


def _solve_at(cfg: RunConfig, eps: float) -> Solution:
    params = cfg.params.with_eps(eps)
    return solve_continuation(params, approach_ladder(eps), cfg.mesh, cfg.solver, cfg.seed)[-1]


def _ladder(cfg: RunConfig, args) -> List[float]:
    if args.ladder:
        return parse_ladder(args.ladder)
    if cfg.ladder:
        return cfg.ladder
    raise ConfigError("no eps ladder: pass --ladder START:FACTOR:COUNT or set [solver] ladder")


def _solve_ladder(cfg: RunConfig, ladder: Sequence[float]) -> List[Solution]:
    path = []
    start = 0.5 if ladder[0] < 0.5 else ladder[0]
    for e in approach_ladder(ladder[0], start)[:-1]:
        path.append(e)
    for a, b in zip(ladder, ladder[1:]):
        path.append(a)
        steps = max(1, cfg.substeps)
        path.extend(a * (b / a) ** (j / steps) for j in range(1, steps))
    path.append(ladder[-1])
    sols = solve_continuation(cfg.params, path, cfg.mesh, cfg.solver, cfg.seed)
    wanted = set(ladder)
    return [s for s in sols if s.eps in wanted]


# ---------------------------------------------------------------- subcommands


def cmd_solve(cfg: RunConfig, args) -> int:
    eps = args.eps if args.eps is not None else cfg.params.eps
    sol = _solve_at(cfg, eps)
    if cfg.params.eta is not None:
        sol = robin_transform(sol, cfg.params.eta)
    ext = "json" if cfg.format == "json" else "csv"
    write_profile(sol, os.path.join(cfg.out_dir, f"profile.{ext}"), cfg.format)
    summary = sol.summary()
    summary["params"] = sol.params.to_dict()
    if sol.gauge == "zero-mean" and cfg.params.A != cfg.params.B:
        summary["pohozaev"] = pohozaev_check(sol, cfg.kappa).to_dict()
    _write_json(os.path.join(cfg.out_dir, "summary.json"), summary)
    print(f"solved eps={eps:g}: U(0)={sol.U0:.6g} U(R)={sol.UR:.6g} in {sol.iterations} iterations")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, args) -> int:
    ladder = _ladder(cfg, args)
    sols = _solve_ladder(cfg, ladder)
    ext = "json" if cfg.format == "json" else "csv"
    rows = []
    for k, sol in enumerate(sols):
        if cfg.params.eta is not None:
            sol = robin_transform(sol, cfg.params.eta)
        write_profile(sol, os.path.join(cfg.out_dir, f"profile_{k:03d}.{ext}"), cfg.format)
        rows.append(sol.summary())
    columns = ["eps", "U0", "UR", "I_p", "I_q", "iterations", "residual", "nodes", "gauge"]
    with open(os.path.join(cfg.out_dir, "sweep.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([row[c] if isinstance(row[c], (str, int)) else _fmt(row[c]) for c in columns])
    print(f"swept {len(sols)} eps values down to {ladder[-1]:g}")
    return EXIT_OK


def _expansion_queries(cfg: RunConfig, args):
    queries = []
    if args.beta is not None:
        gamma = args.gamma[0] if args.gamma else 1.0
        queries.append(("power", asymptotics.Power(args.beta, gamma), args.eps))
    if args.kappa is not None:
        queries.append(("interior", asymptotics.Interior(args.kappa), args.eps))
    if args.theta is not None and args.beta is None:
        gamma = args.gamma[0] if args.gamma else 1.0
        queries.append(("theta_case", asymptotics.ThetaCase(args.theta[0], gamma), args.eps))
    return queries or cfg.queries


def cmd_asymptotics(cfg: RunConfig, args) -> int:
    params = cfg.params if args.eps is None else cfg.params.with_eps(args.eps)
    out = {
        "params": params.to_dict(),
        "coefficient_limits": asymptotics.coefficient_limits(params)._asdict(),
        "delta_weights": asymptotics.delta_weights(params).as_dict(),
    }
    if params.A != params.B:
        be = asymptotics.boundary_expansion(params)
        out["boundary_expansion"] = {"leading": be.leading, "second": be.second, "U_R": be.at(params.eps)}
    results = []
    for case, query, eps in _expansion_queries(cfg, args):
        res = asymptotics.interior_expansion(params, query, eps)
        results.append(res.to_dict())
    out["expansions"] = results
    _write_json(os.path.join(cfg.out_dir, "asymptotics.json"), out)
    json.dump(out, sys.stdout, indent=2, sort_keys=True, default=_json_default)
    sys.stdout.write("\n")
    return EXIT_OK


def cmd_capacitance(cfg: RunConfig, args) -> int:
    gammas = tuple(args.gamma) if args.gamma else cfg.gammas
    sol = None
    if args.numeric:
        eps = args.eps if args.eps is not None else cfg.params.eps
        sol = _solve_at(cfg, eps)
    columns = ["gamma", "exact", "C1", "C2", "combination", "supremum"] + (["numeric"] if sol else [])
    rows = []
    for gamma in gammas:
        rep = asymptotics.capacitance_limit(cfg.params, gamma).to_dict()
        if sol is not None:
            rep["numeric"] = capacitance_numeric(sol, cfg.params.R - gamma * sol.eps**2)
        rows.append(rep)
    if cfg.format == "json":
        _write_json(os.path.join(cfg.out_dir, "capacitance.json"), rows)
    else:
        with open(os.path.join(cfg.out_dir, "capacitance.csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_fmt(row[c]) for c in columns])
    print(f"capacitance table for {len(rows)} gamma values")
    return EXIT_OK


_PLOT_PROFILES = """set terminal pngcairo size 900,600
set output 'u_profiles.png'
set xlabel 'r'
set ylabel 'U'
set key left bottom
plot for [i=0:{last}] 'u_profiles.dat' index i using 1:2 with lines title columnheader(1)
"""

_PLOT_XI = """set terminal pngcairo size 900,600
set output 'xi_convergence.png'
set logscale x
set xlabel 'eps'
set ylabel 'U(R) + (2/q) log(1/eps)'
plot 'xi.dat' using 1:2 with linespoints title 'numeric', \\
     'xi.dat' using 1:3 with lines title 'limit'
"""

_PLOT_CAP = """set terminal pngcairo size 900,600
set output 'capacitance.png'
set xlabel 'gamma'
set ylabel 'capacitance'
set logscale x
plot 'capacitance_gamma.dat' using 1:2 with lines title 'limit', \\
     'capacitance_gamma.dat' using 1:3 with lines title 'series', \\
     'capacitance_gamma.dat' using 1:4 with points title 'numeric'
"""


def _write_plots(cfg: RunConfig, sols: Sequence[Solution], out: str):
    p = cfg.params
    with open(os.path.join(out, "u_profiles.dat"), "w") as fh:
        for k, sol in enumerate(sols):
            if k:
                fh.write("\n\n")
            fh.write(f"\"eps={sol.eps:.6g}\"\n")
            for r, u in zip(sol.mesh.nodes, sol.U):
                fh.write(f"{_fmt(r)} {_fmt(u)}\n")
    with open(os.path.join(out, "u_profiles.gp"), "w") as fh:
        fh.write(_PLOT_PROFILES.format(last=len(sols) - 1))
    if p.A != p.B:
        be = asymptotics.boundary_expansion(p)
        with open(os.path.join(out, "xi.dat"), "w") as fh:
            fh.write("# eps xi limit\n")
            for sol in sols:
                xi = sol.UR - be.leading * math.log(1.0 / sol.eps)
                fh.write(f"{_fmt(sol.eps)} {_fmt(xi)} {_fmt(be.second)}\n")
        finest = sols[-1]
        with open(os.path.join(out, "capacitance_gamma.dat"), "w") as fh:
            fh.write("# gamma exact combination numeric\n")
            for gamma in cfg.gammas:
                rep = asymptotics.capacitance_limit(p, gamma)
                r_lo = p.R - gamma * finest.eps**2
                num = capacitance_numeric(finest, r_lo) if r_lo > 0 else float("nan")
                fh.write(f"{_fmt(gamma)} {_fmt(rep.exact)} {_fmt(rep.combination)} {_fmt(num)}\n")
        with open(os.path.join(out, "xi_convergence.gp"), "w") as fh:
            fh.write(_PLOT_XI)
        with open(os.path.join(out, "capacitance.gp"), "w") as fh:
            fh.write(_PLOT_CAP)


def cmd_validate(cfg: RunConfig, args) -> int:
    ladder = _ladder(cfg, args)
    sols = _solve_ladder(cfg, ladder)
    report = validate_report(
        cfg.params, ladder, cfg.validation_options(), solutions=sols, workers=worker_count()
    )
    report.to_csv(os.path.join(cfg.out_dir, "report.csv"))
    report.to_json(os.path.join(cfg.out_dir, "report.json"))
    _write_plots(cfg, sorted(sols, key=lambda s: -s.eps), cfg.out_dir)
    for name, ok in report.checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    return EXIT_OK if report.passed else EXIT_VALIDATION


COMMANDS = {
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "asymptotics": cmd_asymptotics,
    "capacitance": cmd_capacitance,
    "validate": cmd_validate,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UnknownSubcommand(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ccpb", description="Radial charge-conserving Poisson-Boltzmann toolkit")
    parser.add_argument("command", help="one of: " + ", ".join(SUBCOMMANDS))
    parser.add_argument("--config", help="INI-style or JSON config file")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--eps", type=float, help="evaluation eps")
    parser.add_argument("--ladder", help="START:FACTOR:COUNT or comma separated eps list")
    parser.add_argument("--beta", type=float, help="power-case exponent for asymptotics")
    parser.add_argument("--gamma", type=float, action="append", help="gamma value (repeatable)")
    parser.add_argument("--kappa", type=float, help="bulk exponent kappa in (0, 1)")
    parser.add_argument("--theta", type=float, action="append", help="norm exponent or Theta (repeatable)")
    parser.add_argument("--format", choices=("csv", "json"), help="profile/table format")
    parser.add_argument("--numeric", action="store_true", help="capacitance: add numeric values")
    return parser


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(list(sys.argv[1:] if argv is None else argv))
        if args.command not in COMMANDS:
            raise UnknownSubcommand(f"unknown subcommand {args.command!r}; expected one of {SUBCOMMANDS}")
        cfg = load_config(args.config)
        if args.out:
            cfg.out_dir = args.out
        if args.format:
            cfg.format = args.format
        if args.kappa is not None:
            cfg.kappa = args.kappa
        if args.theta and args.command == "validate":
            cfg.thetas = tuple(args.theta)
        if args.gamma and args.command == "validate":
            cfg.gammas = tuple(args.gamma)
        try:
            os.makedirs(cfg.out_dir, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"cannot create output directory {cfg.out_dir}: {exc}") from exc
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, ParameterError, MeshError, AsymptoticsError, OutOfDomain) as exc:
        print(f"ccpb: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, DiagnosticsError) as exc:
        print(f"ccpb: solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except CCPBError as exc:
        print(f"ccpb: error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, TypeError) as exc:
        print(f"ccpb: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main():  # pragma: no cover
    sys.exit(run_cli())


if __name__ == "__main__":  # pragma: no cover
    main()
