"""Checks of integral identities and inequalities on numerical solutions,
and comparison of numerics against the asymptotic predictions."""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np

from . import asymptotics
from .errors import (
    DegenerateDenominator,
    EqualConcentrations,
    InsufficientData,
    KappaOutOfRange,
    OutOfDomain,
)
from .model import ModelParams
from .solver import (
    MeshPolicy,
    Solution,
    SolverOptions,
    _flux_at,
    solve_continuation,
    solve_newton,
)


def _rel(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale > 0 else 0.0


def _boltzmann_sum(sol: Solution, U: np.ndarray) -> np.ndarray:
    """(R^N/N)(A e^{pU}/(p I_p) + B e^{-qU}/(q I_q)) evaluated in log space."""
    p = sol.params
    return p.volume * (
        p.A / p.p * np.exp(p.p * U - sol.log_I_p) + p.B / p.q * np.exp(-p.q * U - sol.log_I_q)
    )


# ---------------------------------------------------------------- Pohozaev


@dataclass(frozen=True)
class PohozaevReport:
    lhs1: float
    rhs1: float
    residual1: float
    lhs2: float
    rhs2: float
    residual2: float
    Lambda1: float
    Lambda2: float
    kappa: float
    r_kappa: float  # mesh node actually used for eps^kappa
    snap_offset: float  # |r_kappa - eps^kappa|

    @property
    def max_residual(self) -> float:
        return max(self.residual1, self.residual2)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def pohozaev_check(sol: Solution, kappa: float = 0.5) -> PohozaevReport:
    """Evaluate both sides of the two Pohozaev-type identities on ``sol``'s mesh.

    Gradient integrals use the face values of U' (midpoint rule); the lower
    limit eps^kappa of the second identity is snapped to the nearest node.
    """
    if not 0 < kappa < 1:
        raise KappaOutOfRange(f"kappa={kappa} must lie in (0, 1)")
    p = sol.params
    mesh = sol.mesh
    eps, R, N = p.eps, p.R, p.N
    rf = mesh.midpoints
    h = mesh.spacings
    dU2 = sol.dU_faces() ** 2
    g_f, dg_f = p.g(rf), p.dg(rf)

    lam1 = 0.5 * eps**2 * np.sum(h * ((N - 2) * g_f + rf * dg_f) / R**N * rf ** (N - 1) * dU2)
    lhs1 = float(_boltzmann_sum(sol, np.array([sol.UR]))[0])
    rhs1 = R**2 * (p.A - p.B) ** 2 / (2 * N**2 * eps**2 * p.gR) + p.A / p.p + p.B / p.q + lam1

    target = eps**kappa
    k = int(np.argmin(np.abs(mesh.nodes - target)))
    rk = float(mesh.nodes[k])
    dU_k = float(sol.dU_nodes()[k])
    right = slice(k, None)  # faces k, k+1, ... lie to the right of node k
    lam2 = -0.5 * eps**2 * float(p.g(rk)) * dU_k**2 + 0.5 * eps**2 * np.sum(
        h[right] * (2 * (N - 1) * g_f[right] + rf[right] * dg_f[right]) / rf[right] * dU2[right]
    )
    lhs2 = float(_boltzmann_sum(sol, np.array([sol.U[k]]))[0])
    rhs2 = p.A / p.p + p.B / p.q + lam1 - lam2
    return PohozaevReport(
        lhs1=lhs1,
        rhs1=float(rhs1),
        residual1=_rel(lhs1, rhs1),
        lhs2=lhs2,
        rhs2=float(rhs2),
        residual2=_rel(lhs2, rhs2),
        Lambda1=float(lam1),
        Lambda2=float(lam2),
        kappa=float(kappa),
        r_kappa=rk,
        snap_offset=abs(rk - target),
    )


def pohozaev_refinement(params: ModelParams, mesh, levels: int = 3, kappa: float = 0.5, opts=None):
    """Pohozaev residuals on ``levels`` successive bisections of ``mesh``.

    Returns ``(residuals1, orders)`` where ``orders[i]`` is
    log2(residual[i] / residual[i+1]).
    """
    residuals = []
    init = None
    for _ in range(levels):
        sol = solve_newton(params, mesh, init, opts)
        residuals.append(pohozaev_check(sol, kappa).residual1)
        fine = mesh.refine()
        init = np.interp(fine.nodes, mesh.nodes, sol.U)
        mesh = fine
    orders = [math.log2(a / b) if b > 0 and a > 0 else math.inf for a, b in zip(residuals, residuals[1:])]
    return residuals, orders


# ---------------------------------------------------------------- inequalities


@dataclass(frozen=True)
class InequalityCheck:
    name: str
    value: float
    lower: float
    upper: float
    margin: float  # distance to the nearest bound, negative when violated
    passed: bool


@dataclass(frozen=True)
class InequalityReport:
    checks: List[InequalityCheck]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def by_name(self) -> Dict[str, InequalityCheck]:
        return {c.name: c for c in self.checks}

    def failures(self) -> List[str]:
        return [c.name for c in self.checks if not c.passed]


def _check(name, value, lower, upper, rtol, strict_lower=False, strict_upper=False):
    slack = rtol * max(1.0, abs(lower) if math.isfinite(lower) else 0.0, abs(upper) if math.isfinite(upper) else 0.0)
    margin = min(value - lower, upper - value)
    ok_lo = value > lower if strict_lower else value >= lower - slack
    ok_hi = value < upper if strict_upper else value <= upper + slack
    return InequalityCheck(name, float(value), float(lower), float(upper), float(margin), bool(ok_lo and ok_hi))


def inequality_suite(sol: Solution, rtol: float = 1e-8) -> InequalityReport:
    """Evaluate the a priori bounds satisfied by every Neumann solution.

    The ball measure is the radial one, R^N/N.  ``rtol`` is the slack
    allowed on non-strict bounds.
    """
    p = sol.params
    A, B, pp, q, vol = p.A, p.B, p.p, p.q, p.volume
    U = sol.U
    checks = []

    lo = vol ** (1 / pp + 1 / q)
    value = math.exp(sol.log_I_p / pp + sol.log_I_q / q)
    checks.append(
        _check("inverse_holder", value, lo, lo * max((B / A) ** (1 / q), (A / B) ** (1 / pp)), rtol)
    )

    log_vol = math.log(vol)
    checks.append(
        _check("mean_I_p", math.exp(sol.log_I_p - log_vol), 1.0, max(A / B, (B / A) ** (pp / q)), rtol)
    )
    checks.append(
        _check("mean_I_q", math.exp(sol.log_I_q - log_vol), 1.0, max(B / A, (A / B) ** (q / pp)), rtol)
    )

    bracket = -sol.rho  # A e^{pU}/avg(e^{pU}) - B e^{-qU}/avg(e^{-qU})
    if A < B:
        checks.append(_check("bracket_sign", float(np.max(bracket)), A - B, 0.0, rtol))
        checks.append(_check("interior_value", sol.U0, 0.0, math.log(B / A) / q, rtol, strict_lower=True))
        checks.append(_check("monotonicity", -float(np.max(np.diff(U))), 0.0, math.inf, rtol))
    elif A > B:
        checks.append(_check("bracket_sign", float(np.min(bracket)), 0.0, A - B, rtol))
        checks.append(_check("interior_value", sol.U0, -math.log(A / B) / pp, 0.0, rtol, strict_upper=True))
        checks.append(_check("monotonicity", float(np.min(np.diff(U))), 0.0, math.inf, rtol))
    else:
        checks.append(_check("bracket_sign", float(np.max(np.abs(bracket))), 0.0, 0.0, rtol))
        checks.append(_check("interior_value", sol.U0, 0.0, 0.0, rtol))
        checks.append(_check("monotonicity", 0.0, 0.0, math.inf, rtol))

    pointwise = pp * A * np.exp(pp * U - sol.log_I_p) + q * B * np.exp(-q * U - sol.log_I_q)
    floor = p.N * (pp + q) * min(A, B) / p.R**p.N * (q / pp) ** ((pp - q) / (pp + q))
    checks.append(_check("pointwise_sum", float(np.min(pointwise)), floor, math.inf, rtol))
    return InequalityReport(checks)


# ---------------------------------------------------------------- weak limits

TARGETS = ("rho", "energy", "exp", "exp_minor")


def _as_test_function(h) -> Callable:
    if h is None:
        return lambda r: np.ones_like(r)
    if callable(h):
        return lambda r: np.broadcast_to(np.asarray(h(r), dtype=float), np.shape(r))
    value = float(h)
    return lambda r: np.full_like(r, value)


def delta_weight_estimate(sol: Solution, h=None, target: str = "rho") -> float:
    """Quadrature of the integral over [0, R] (plain dr) of h(r) f(r).

    ``target`` picks f: ``rho`` (net charge), ``energy`` ((eps U')^2),
    ``exp`` (majority-species excess e^{-qU}-1, or e^{pU}-1 when A > B) or
    ``exp_minor`` (|e^{pU}-1|, or |e^{-qU}-1| when A > B), which vanishes
    in the limit.
    """
    if target not in TARGETS:
        raise ValueError(f"target must be one of {TARGETS}")
    p = sol.params
    mesh = sol.mesh
    hf = _as_test_function(h)
    if target == "energy":
        rf = mesh.midpoints
        return float(np.sum(mesh.spacings * hf(rf) * (p.eps * sol.dU_faces()) ** 2))
    r = mesh.nodes
    if target == "rho":
        f = sol.rho
    else:
        minority = target == "exp_minor"
        use_q = (p.A <= p.B) != minority
        f = np.expm1(-p.q * sol.U) if use_q else np.expm1(p.p * sol.U)
        if minority:
            f = np.abs(f)
    return float(np.dot(mesh.w_plain, hf(r) * f))


def capacitance_numeric(sol: Solution, r_lo: float) -> float:
    """Annular capacitance |(R^N (A-B)/N - eps^2 V(r_lo)) / (U(R) - U(r_lo))|.

    V = g r^{N-1} U' is the interpolated face flux.
    """
    p = sol.params
    if not 0 < r_lo < p.R:
        raise OutOfDomain(f"r_lo={r_lo} must lie in (0, {p.R})")
    U_lo = float(np.interp(r_lo, sol.mesh.nodes, sol.U))
    denom = sol.UR - U_lo
    if denom == 0 or abs(denom) <= 1e-14 * max(1.0, abs(sol.UR)):
        raise DegenerateDenominator(f"U(R) - U({r_lo}) vanishes")
    V = float(_flux_at(sol, r_lo))
    return abs((p.volume * (p.A - p.B) - p.eps**2 * V) / denom)


@dataclass(frozen=True)
class NormDecayFit:
    theta: float
    eps: np.ndarray
    norms: np.ndarray
    scaled: np.ndarray  # norms with the log(1/eps) factor divided out when theta <= 1
    slope: float
    intercept: float
    expected: float


def gradient_norm(sol: Solution, theta: float) -> float:
    """L^theta(0, R) norm of eps U' (plain measure), midpoint rule on faces."""
    v = np.abs(sol.eps * sol.dU_faces())
    return float(np.sum(sol.mesh.spacings * v**theta) ** (1.0 / theta))


def norm_decay_fit(sols: Sequence[Solution], theta: float) -> NormDecayFit:
    """Least-squares log-log slope of ||eps U'||_{L^theta} against eps."""
    if not 0 < theta < 2:
        raise InsufficientData(f"theta={theta} must lie in (0, 2)")
    if len(sols) < 4:
        raise InsufficientData(f"need at least 4 solutions, got {len(sols)}")
    eps = np.array([s.eps for s in sols])
    norms = np.array([gradient_norm(s, theta) for s in sols])
    scaled = norms / np.log(1.0 / eps) if theta <= 1 else norms.copy()
    slope, intercept = np.polyfit(np.log(eps), np.log(scaled), 1)
    return NormDecayFit(
        theta=float(theta),
        eps=eps,
        norms=norms,
        scaled=scaled,
        slope=float(slope),
        intercept=float(intercept),
        expected=min(1.0, 2.0 / theta - 1.0),
    )


# ---------------------------------------------------------------- report


@dataclass(frozen=True)
class ValidationOptions:
    kappa: float = 0.5
    thetas: tuple = (1.0, 1.5)
    capacitance_gamma: float = 4.0
    slope_eps_max: float = 2.0**-6
    trend_points: int = 5
    tol_boundary_gap: float = 0.15
    tol_coefficients: float = 0.05
    tol_weights: float = 0.05  # relative
    tol_capacitance: float = 0.05  # relative
    # The interior capacitance decays only like 1/log(1/eps); 0.05 is met by
    # P0 at eps = 2^-12 (value about 0.034), 0.02 needs eps below about 2^-20.
    tol_capacitance_interior: float = 0.05
    tol_slope: float = 0.15
    substeps: int = 2  # continuation rungs per ladder interval
    solver: SolverOptions = field(default_factory=SolverOptions)
    mesh_policy: MeshPolicy = None
    seed: str = "zero"


@dataclass
class ValidationRow:
    eps: float
    nodes: int
    iterations: int
    U_R: float
    U_R_pred: Optional[float]
    gap: Optional[float]
    I_p: float
    I_q: float
    I_p_limit: float
    I_q_limit: float
    energy: float
    energy_weight: float
    rho_integral: float
    rho_weight: float
    exp_integral: float
    exp_weight: float
    capacitance: Optional[float]
    capacitance_limit: Optional[float]
    capacitance_interior: Optional[float]
    norms: Dict[str, float]
    checks: Dict[str, bool] = field(default_factory=dict)

    def flat(self) -> dict:
        out = {k: v for k, v in dataclasses.asdict(self).items() if k not in ("norms", "checks")}
        for key, value in self.norms.items():
            out[f"norm_theta_{key}"] = value
        for key, value in self.checks.items():
            out[f"pass_{key}"] = value
        return out


@dataclass
class ValidationReport:
    params: ModelParams
    rows: List[ValidationRow]
    slopes: Dict[str, dict]
    trends: Dict[str, bool]
    degenerate: bool
    checks: Dict[str, bool]

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "degenerate": self.degenerate,
            "passed": self.passed,
            "checks": self.checks,
            "trends": self.trends,
            "slopes": self.slopes,
            "rows": [r.flat() for r in self.rows],
        }

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True, default=_json_default)
            fh.write("\n")

    def to_csv(self, path):
        flat = [r.flat() for r in self.rows]
        columns = list(flat[0].keys()) if flat else []
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(columns)
            for row in flat:
                writer.writerow([_fmt(row[c]) for c in columns])


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _refined_ladder(ladder: Sequence[float], substeps: int) -> List[float]:
    if substeps <= 1:
        return list(ladder)
    out = [ladder[0]]
    for a, b in zip(ladder, ladder[1:]):
        ratio = (b / a) ** (1.0 / substeps)
        out.extend(a * ratio**j for j in range(1, substeps))
        out.append(b)
    return out


def _row(sol: Solution, opts: ValidationOptions) -> ValidationRow:
    p = sol.params
    limits = asymptotics.coefficient_limits(p)
    weights = asymptotics.delta_weights(p)
    degenerate = p.A == p.B
    pred = gap = cap = cap_lim = cap_in = None
    if not degenerate:
        pred = asymptotics.boundary_expansion(p).at(p.eps)
        gap = sol.UR - pred
        r_lo = p.R - opts.capacitance_gamma * p.eps**2
        if r_lo > 0:
            cap = capacitance_numeric(sol, r_lo)
        cap_lim = asymptotics.capacitance_limit(p, opts.capacitance_gamma).exact
        cap_in = capacitance_numeric(sol, 0.5 * p.R)
    return ValidationRow(
        eps=p.eps,
        nodes=sol.mesh.size,
        iterations=sol.iterations,
        U_R=sol.UR,
        U_R_pred=pred,
        gap=gap,
        I_p=sol.I_p,
        I_q=sol.I_q,
        I_p_limit=limits.I_p,
        I_q_limit=limits.I_q,
        energy=delta_weight_estimate(sol, None, "energy"),
        energy_weight=weights.w_energy,
        rho_integral=delta_weight_estimate(sol, None, "rho"),
        rho_weight=weights.w_rho,
        exp_integral=delta_weight_estimate(sol, None, "exp"),
        exp_weight=weights.w_exp,
        capacitance=cap,
        capacitance_limit=cap_lim,
        capacitance_interior=cap_in,
        norms={f"{t:g}": gradient_norm(sol, t) for t in opts.thetas},
    )


def _row_checks(row: ValidationRow, opts: ValidationOptions) -> Dict[str, bool]:
    checks = {
        "boundary_gap": abs(row.gap) < opts.tol_boundary_gap,
        "I_p": abs(row.I_p - row.I_p_limit) < opts.tol_coefficients,
        "I_q": abs(row.I_q - row.I_q_limit) < opts.tol_coefficients,
        "energy_weight": abs(row.energy - row.energy_weight) <= opts.tol_weights * row.energy_weight,
        "rho_weight": abs(row.rho_integral - row.rho_weight) <= opts.tol_weights * row.rho_weight,
        "capacitance_interior": row.capacitance_interior < opts.tol_capacitance_interior,
    }
    if row.capacitance is not None:
        checks["capacitance"] = (
            abs(row.capacitance - row.capacitance_limit) < opts.tol_capacitance * row.capacitance_limit
        )
    return checks


def validate_report(
    params: ModelParams,
    eps_ladder: Sequence[float],
    opts: Optional[ValidationOptions] = None,
    solutions: Optional[Sequence[Solution]] = None,
    workers: int = 1,
) -> ValidationReport:
    """Solve along the ladder and compare every numeric quantity with its limit.

    Pass/fail flags are attached to every row; the overall verdict uses the
    smallest eps only, together with the gap trend over the last
    ``opts.trend_points`` rows and the norm-decay slopes.  Pass precomputed
    ``solutions`` (one per ladder entry) to skip the solves.  ``workers``
    threads evaluate the per-eps rows; row order is always by decreasing eps.
    """
    opts = opts or ValidationOptions()
    ladder = sorted((float(e) for e in eps_ladder), reverse=True)
    if solutions is None:
        path = _refined_ladder(ladder, opts.substeps)
        all_sols = solve_continuation(params, path, opts.mesh_policy, opts.solver, opts.seed)
        wanted = set(ladder)
        solutions = [s for s in all_sols if s.eps in wanted]
    sols = sorted(solutions, key=lambda s: -s.eps)
    if workers > 1 and len(sols) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda s: _row(s, opts), sols))
    else:
        rows = [_row(s, opts) for s in sols]
    degenerate = params.A == params.B

    checks: Dict[str, bool] = {}
    trends: Dict[str, bool] = {}
    slopes: Dict[str, dict] = {}
    if degenerate:
        for row in rows:
            row.checks = {"trivial": bool(np.max(np.abs(s.U)) == 0.0) for s in sols if s.eps == row.eps}
        checks["trivial_solution"] = all(all(r.checks.values()) for r in rows)
        return ValidationReport(params, rows, slopes, trends, True, checks)

    for row in rows:
        row.checks = _row_checks(row, opts)
    checks.update({f"final_{k}": v for k, v in rows[-1].checks.items()})

    tail = [abs(r.gap) for r in rows[-opts.trend_points :]]
    if len(tail) >= 2:
        trends["boundary_gap_decreasing"] = all(b < a for a, b in zip(tail, tail[1:]))
        checks["trend_boundary_gap"] = trends["boundary_gap_decreasing"]
    interior = [r.capacitance_interior for r in rows[-opts.trend_points :]]
    if len(interior) >= 2:
        trends["capacitance_interior_decreasing"] = all(b < a for a, b in zip(interior, interior[1:]))
        checks["trend_capacitance_interior"] = trends["capacitance_interior_decreasing"]

    fit_sols = [s for s in sols if s.eps <= opts.slope_eps_max * (1 + 1e-12)]
    for theta in opts.thetas:
        key = f"{theta:g}"
        try:
            fit = norm_decay_fit(fit_sols, theta)
        except InsufficientData:
            continue
        ok = abs(fit.slope - fit.expected) <= opts.tol_slope
        slopes[key] = {"slope": fit.slope, "expected": fit.expected, "points": len(fit_sols), "passed": ok}
        checks[f"slope_theta_{key}"] = ok

    return ValidationReport(params, rows, slopes, trends, False, checks)
