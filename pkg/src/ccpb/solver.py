"""Finite-volume Newton solver for the radial Neumann (N*) and Robin (R*) problems.

The equation

    eps^2 (g r^{N-1} U')' = r^{N-1} (R^N/N) (A e^{pU}/I_p - B e^{-qU}/I_q)

is discretised in conservative form on a vertex-centred mesh.  Face
fluxes are V = g r^{N-1} U'; the boundary face carries the prescribed
flux g(R) R^{N-1} U'(R) = R^N (A-B) / (eps^2 N).  The non-local integrals
use the same trapezoidal weights as the source term, so the discrete
charge balance holds exactly and the system is shift invariant.  The
zero-mean gauge is appended as a bordered Lagrange row.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from .errors import NewtonDiverged, NonFiniteState, OutOfDomain, SolverError
from .linalg import BorderedJacobian, dense_bordered, solve_bordered
from .mesh import GeometricSpec, Mesh, MeshSpec, build_mesh
from .model import ModelParams

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-10
    max_iter: int = 50
    min_step: float = 2.0**-20
    linear_solver: str = "woodbury"  # or "dense"


@dataclass(frozen=True)
class Assembly:
    """Residual, Jacobian parts and non-local integrals at one state."""

    residual: np.ndarray
    jacobian: BorderedJacobian
    I_p: float
    I_q: float
    # log I_p, log I_q stay finite even when I_p, I_q overflow
    log_I_p: float
    log_I_q: float
    source: np.ndarray  # (R^N/N)(A e^{pU}/I_p - B e^{-qU}/I_q) = -rho at nodes
    flux: np.ndarray  # face fluxes g r^{N-1} U', length M
    boundary_flux: float  # g(R) R^{N-1} U'(R)


@dataclass(frozen=True, eq=False)
class Solution:
    params: ModelParams
    mesh: Mesh
    U: np.ndarray
    flux: np.ndarray
    boundary_flux: float
    I_p: float
    I_q: float
    log_I_p: float
    log_I_q: float
    gauge: str = "zero-mean"
    iterations: int = 0
    residual: float = 0.0
    multiplier: float = 0.0
    path: tuple = ()

    @property
    def r(self) -> np.ndarray:
        return self.mesh.nodes

    @property
    def eps(self) -> float:
        return self.params.eps

    @property
    def U0(self) -> float:
        return float(self.U[0])

    @property
    def UR(self) -> float:
        return float(self.U[-1])

    @property
    def rho(self) -> np.ndarray:
        return net_charge(self.params, self.U, self.log_I_p, self.log_I_q)

    def dU_faces(self) -> np.ndarray:
        """U' on cell faces (midpoints)."""
        rf = self.mesh.midpoints
        return self.flux / (self.params.g(rf) * rf ** (self.params.N - 1))

    def nodal_flux(self) -> np.ndarray:
        """Flux g r^{N-1} U' at the nodes, linear in between face midpoints."""
        return _flux_at(self, self.mesh.nodes)

    def dU_nodes(self) -> np.ndarray:
        r = self.mesh.nodes
        out = np.zeros_like(r)
        V = self.nodal_flux()
        inner = r > 0
        out[inner] = V[inner] / (self.params.g(r[inner]) * r[inner] ** (self.params.N - 1))
        return out

    def summary(self) -> dict:
        return {
            "eps": self.params.eps,
            "I_p": self.I_p,
            "I_q": self.I_q,
            "U0": self.U0,
            "UR": self.UR,
            "iterations": self.iterations,
            "residual": self.residual,
            "gauge": self.gauge,
            "nodes": self.mesh.size,
        }


def _shifted_exponentials(params: ModelParams, mesh: Mesh, U: np.ndarray):
    """Normalised Boltzmann factors e^{pU}/I_p and e^{-qU}/I_q with max-shift."""
    p, q = params.p, params.q
    w = mesh.w_radial
    up = p * U
    sp = up.max()
    ep = np.exp(up - sp)
    Sp = float(w @ ep)
    uq = -q * U
    sq = uq.max()
    eq = np.exp(uq - sq)
    Sq = float(w @ eq)
    if not (np.isfinite(Sp) and np.isfinite(Sq)) or Sp <= 0 or Sq <= 0:
        raise NonFiniteState("non-local integrals are not finite")
    log_Ip = sp + math.log(Sp)
    log_Iq = sq + math.log(Sq)
    return ep / Sp, eq / Sq, log_Ip, log_Iq


def net_charge(params: ModelParams, U, log_I_p: float, log_I_q: float):
    """rho = -(R^N/N)(A e^{pU}/I_p - B e^{-qU}/I_q) evaluated in log space."""
    U = np.asarray(U, dtype=float)
    vol = params.volume
    cation = params.A * np.exp(params.p * U - log_I_p)
    anion = params.B * np.exp(-params.q * U - log_I_q)
    return -vol * (cation - anion)


def _safe_exp(x):
    with np.errstate(over="ignore"):
        return float(np.exp(x))


def boundary_flux_value(params: ModelParams) -> float:
    """g(R) R^{N-1} U'(R) implied by the Neumann condition."""
    return params.R**params.N * (params.A - params.B) / (params.eps**2 * params.N)


def _face_conductance(params: ModelParams, mesh: Mesh) -> np.ndarray:
    rf = mesh.midpoints
    return params.g(rf) * rf ** (params.N - 1) / mesh.spacings


def assemble_system(params: ModelParams, mesh: Mesh, U, lam: float = 0.0) -> Assembly:
    """Residual and structured Jacobian of the discrete (N*) equations.

    The residual excludes the gauge border; ``lam`` adds ``lam * w`` so
    Newton can work on the bordered system directly.
    """
    U = np.asarray(U, dtype=float)
    if U.shape != mesh.nodes.shape:
        raise SolverError(f"state has shape {U.shape}, mesh has {mesh.size} nodes")
    if not np.all(np.isfinite(U)):
        raise NonFiniteState("state contains non-finite values")
    eps2 = params.eps**2
    vol = params.volume
    A, B, p, q = params.A, params.B, params.p, params.q
    w = mesh.w_radial

    ep_n, eq_n, log_Ip, log_Iq = _shifted_exponentials(params, mesh, U)
    source = vol * (A * ep_n - B * eq_n)

    cond = _face_conductance(params, mesh)
    flux = cond * np.diff(U)
    Vb = boundary_flux_value(params)

    div = np.empty_like(U)
    div[0] = flux[0]
    div[1:-1] = flux[1:] - flux[:-1]
    div[-1] = Vb - flux[-1]
    residual = eps2 * div - w * source + lam * w
    if not np.all(np.isfinite(residual)):
        raise NonFiniteState("residual is not finite")

    diag = np.empty_like(U)
    diag[0] = -cond[0]
    diag[1:-1] = -(cond[1:] + cond[:-1])
    diag[-1] = -cond[-1]
    diag = eps2 * diag - w * vol * (A * p * ep_n + B * q * eq_n)
    off = eps2 * cond
    jac = BorderedJacobian(
        lower=off.copy(),
        diag=diag,
        upper=off,
        a=w * ep_n,
        alpha=vol * A * p,
        b=w * eq_n,
        beta=vol * B * q,
        w=np.asarray(w),
    )
    return Assembly(
        residual=residual,
        jacobian=jac,
        I_p=_safe_exp(log_Ip),
        I_q=_safe_exp(log_Iq),
        log_I_p=log_Ip,
        log_I_q=log_Iq,
        source=source,
        flux=flux,
        boundary_flux=Vb,
    )


def _flux_scale(params: ModelParams) -> float:
    scale = params.volume * abs(params.A - params.B)
    return scale if scale > 0 else params.volume * (params.A + params.B)


def _trivial_solution(params, mesh, path=()):
    U = np.zeros(mesh.size)
    vol_q = float(mesh.w_radial.sum())
    return Solution(
        params=params,
        mesh=mesh,
        U=U,
        flux=np.zeros(mesh.size - 1),
        boundary_flux=0.0,
        I_p=vol_q,
        I_q=vol_q,
        log_I_p=math.log(vol_q),
        log_I_q=math.log(vol_q),
        iterations=0,
        residual=0.0,
        path=tuple(path) or (params.eps,),
    )


def solve_newton(
    params: ModelParams,
    mesh: Mesh,
    init=None,
    opts: Optional[SolverOptions] = None,
    path: Sequence[float] = (),
) -> Solution:
    """Damped Newton iteration for the discrete Neumann problem.

    Converges when the residual infinity norm, relative to the boundary
    flux R^N |A-B| / N, and the gauge defect fall below ``opts.tol``.
    """
    opts = opts or SolverOptions()
    if params.A == params.B:
        return _trivial_solution(params, mesh, path)

    U = np.zeros(mesh.size) if init is None else np.array(init, dtype=float)
    if U.shape != mesh.nodes.shape:
        raise SolverError(f"initial state has {U.size} values for {mesh.size} nodes")
    if not np.all(np.isfinite(U)):
        raise NonFiniteState("initial state is not finite")
    w = mesh.w_radial
    vol = float(w.sum())
    U = U - (w @ U) / vol
    lam = 0.0
    scale = _flux_scale(params)
    linear = solve_bordered if opts.linear_solver == "woodbury" else dense_bordered

    def merit(asm, U):
        gauge = (w @ U) / vol
        return max(np.max(np.abs(asm.residual)) / scale, abs(gauge))

    asm = assemble_system(params, mesh, U, lam)
    m = merit(asm, U)
    it = 0
    while m > opts.tol:
        if it >= opts.max_iter:
            raise NewtonDiverged(
                f"no convergence after {it} iterations (residual {m:.3e})", eps=params.eps
            )
        it += 1
        dU, dlam = linear(asm.jacobian, -asm.residual, -(w @ U))
        step = 1.0
        while True:
            trial = U + step * dU
            try:
                trial_asm = assemble_system(params, mesh, trial, lam + step * dlam)
                trial_m = merit(trial_asm, trial)
            except NonFiniteState:
                trial_m = math.inf
            if trial_m < (1.0 - 1e-4 * step) * m or trial_m <= opts.tol:
                break
            step *= 0.5
            if step < opts.min_step:
                raise NewtonDiverged(
                    f"line search stalled at iteration {it} (residual {m:.3e})", eps=params.eps
                )
        U, lam, asm, m = trial, lam + step * dlam, trial_asm, trial_m
        log.debug("eps=%g it=%d step=%g residual=%.3e", params.eps, it, step, m)

    return Solution(
        params=params,
        mesh=mesh,
        U=U,
        flux=asm.flux,
        boundary_flux=asm.boundary_flux,
        I_p=asm.I_p,
        I_q=asm.I_q,
        log_I_p=asm.log_I_p,
        log_I_q=asm.log_I_q,
        gauge="zero-mean",
        iterations=it,
        residual=float(m),
        multiplier=lam,
        path=tuple(path) or (params.eps,),
    )


MeshPolicy = Union[None, MeshSpec, Callable[[ModelParams], Mesh]]


def _mesh_for(params: ModelParams, policy: MeshPolicy) -> Mesh:
    if policy is None:
        return build_mesh(params, GeometricSpec())
    if callable(policy) and not dataclasses.is_dataclass(policy):
        return policy(params)
    return build_mesh(params, policy)


def default_ladder(eps_start: float, count: int, factor: float = 2.0**-0.5) -> List[float]:
    return [eps_start * factor**k for k in range(count)]


def transfer(sol: Solution, mesh: Mesh) -> np.ndarray:
    """Piecewise-linear transfer of a nodal state onto another mesh."""
    return np.interp(mesh.nodes, sol.mesh.nodes, sol.U)


def solve_continuation(
    params: ModelParams,
    eps_ladder: Sequence[float],
    mesh_policy: MeshPolicy = None,
    opts: Optional[SolverOptions] = None,
    seed: str = "zero",
) -> List[Solution]:
    """Solve along a strictly decreasing eps ladder, seeding each step with the last.

    ``seed`` chooses the first initial state: ``"zero"`` or ``"layer"``
    (the asymptotic layer profile shifted to zero mean).
    """
    ladder = [float(e) for e in eps_ladder]
    if not ladder:
        raise ValueError("empty eps ladder")
    if any(b >= a for a, b in zip(ladder, ladder[1:])):
        raise ValueError("eps ladder must be strictly decreasing")
    if seed not in ("zero", "layer"):
        raise ValueError(f"unknown seed {seed!r}")
    out: List[Solution] = []
    prev = None
    for k, eps in enumerate(ladder):
        pk = params.with_eps(eps)
        mesh = _mesh_for(pk, mesh_policy)
        if prev is not None:
            init = transfer(prev, mesh)
        elif seed == "layer" and pk.A != pk.B:
            from .asymptotics import layer_profile

            # the layer profile overshoots away from r = R; cut it at the bulk value 0
            clip = np.minimum if pk.A < pk.B else np.maximum
            init = clip(layer_profile(pk, mesh.nodes), 0.0)
        else:
            init = None
        try:
            sol = solve_newton(pk, mesh, init, opts, path=tuple(ladder[: k + 1]))
        except NewtonDiverged as exc:
            raise NewtonDiverged(f"eps={eps:g}: {exc}", eps=eps) from exc
        out.append(sol)
        prev = sol
    return out


def robin_transform(neumann: Solution, eta: float) -> Solution:
    """Map the zero-mean Neumann solution to the Robin problem with coefficient eta."""
    if neumann.gauge != "zero-mean":
        raise SolverError("robin_transform expects a zero-mean Neumann solution")
    if eta < 0:
        raise SolverError("eta must be >= 0")
    p = neumann.params
    UR = eta * p.R * (p.B - p.A) / (p.eps**2 * p.N * p.gR)
    shift = UR - neumann.U[-1]
    U = neumann.U + shift
    U[-1] = UR
    return dataclasses.replace(
        neumann,
        params=dataclasses.replace(p, eta=float(eta)),
        U=U,
        log_I_p=neumann.log_I_p + p.p * shift,
        log_I_q=neumann.log_I_q - p.q * shift,
        I_p=_safe_exp(neumann.log_I_p + p.p * shift),
        I_q=_safe_exp(neumann.log_I_q - p.q * shift),
        gauge="robin",
    )


def _flux_at(sol: Solution, r) -> np.ndarray:
    mesh = sol.mesh
    pts = np.concatenate([[0.0], mesh.midpoints, [mesh.R]])
    vals = np.concatenate([[0.0], sol.flux, [sol.boundary_flux]])
    return np.interp(r, pts, vals)


def evaluate_solution(sol: Solution, r):
    """Return (U, U', rho) at radius/radii ``r`` in [0, R].

    U is interpolated linearly between nodes.  U' comes from the flux
    g r^{N-1} U', interpolated linearly between face midpoints (0 at the
    centre, the prescribed value at r = R) and divided by g r^{N-1}.
    """
    p = sol.params
    r_arr = np.asarray(r, dtype=float)
    scalar = r_arr.ndim == 0
    r_arr = np.atleast_1d(r_arr)
    tol = 1e-14 * p.R
    if np.any(r_arr < -tol) or np.any(r_arr > p.R + tol):
        raise OutOfDomain(f"r must lie in [0, {p.R}]")
    r_arr = np.clip(r_arr, 0.0, p.R)
    U = np.interp(r_arr, sol.mesh.nodes, sol.U)
    V = _flux_at(sol, r_arr)
    dU = np.zeros_like(r_arr)
    inner = r_arr > 0
    dU[inner] = V[inner] / (p.g(r_arr[inner]) * r_arr[inner] ** (p.N - 1))
    rho = net_charge(p, U, sol.log_I_p, sol.log_I_q)
    if scalar:
        return float(U[0]), float(dU[0]), float(rho[0])
    return U, dU, rho
