"""Closed-form asymptotic predictions for the radial CCPB boundary layer.

Every function here is a pure function of the model parameters and the
query.  Formulas are written for A < B; the A > B branch is obtained by
mirroring, i.e. swapping (A, p) with (B, q) and negating U, U' and rho.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Union

import numpy as np

from .errors import EqualConcentrations, MalformedQuery, NonPositiveGamma, OutOfDomain
from .model import ModelParams

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def _mirror(params: ModelParams) -> ModelParams:
    return dataclasses.replace(params, A=params.B, B=params.A, p=params.q, q=params.p)


def _require_unequal(params: ModelParams):
    if params.A == params.B:
        raise EqualConcentrations("A == B: no boundary layer forms")


# ---------------------------------------------------------------- queries


@dataclass(frozen=True)
class Interior:
    """Point r = R - eps^kappa in the bulk, kappa in (0, 1)."""

    kappa: float = 0.5


@dataclass(frozen=True)
class Power:
    """Point with R - r ~ gamma * eps^beta, beta > 1."""

    beta: float
    gamma: float = 1.0


@dataclass(frozen=True)
class PiSpec:
    """Point R - r = pi(eps) that is not a pure power of eps.

    ``limit_class`` states whether pi(eps)/eps^beta0 tends to ``"zero"``
    or ``"infinite"``; it is not inferred from the callable.
    """

    beta0: float
    limit_class: str
    pi: Callable[[float], float]


@dataclass(frozen=True)
class ThetaCase:
    """Point R - eps^{beta1(eps)} with beta1 = 1 + gamma (log 1/eps)^(-Theta)."""

    Theta: float
    gamma: float


@dataclass(frozen=True)
class IteratedLog:
    """Point R - eps^{beta2(eps)}, beta2 = 1 + (gamma log^(n)(1/eps) + tau) / log(1/eps)."""

    n: int
    gamma: float
    tau: float = 0.0


ExpansionQuery = Union[Interior, Power, PiSpec, ThetaCase, IteratedLog]


@dataclass(frozen=True)
class ExpansionResult:
    case: str
    eps: float
    r: Optional[float]
    U_leading: Optional[float] = None
    U_second: Optional[float] = None
    U_total: Optional[float] = None
    leading_coefficient: Optional[float] = None
    dU: Optional[float] = None
    rho: Optional[float] = None
    chi1: Optional[int] = None
    chi2: Optional[int] = None
    bound: Optional[dict] = None

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


class BoundaryExpansion(NamedTuple):
    """U(R) ~ leading * log(1/eps) + second."""

    leading: float
    second: float

    def at(self, eps: float) -> float:
        return self.leading * math.log(1.0 / eps) + self.second


class CoefficientLimits(NamedTuple):
    I_p: float
    I_q: float
    degenerate: bool = False


@dataclass(frozen=True)
class DeltaWeights:
    w_rho: float
    w_energy: float
    w_exp: float

    def as_dict(self) -> dict:
        return {"rho": self.w_rho, "energy": self.w_energy, "exp": self.w_exp}


@dataclass(frozen=True)
class CapacitanceReport:
    gamma: float
    exact: float
    C1: float
    C2: float
    combination: float
    supremum: float

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


# ---------------------------------------------------------------- evaluators


def coefficient_limits(params: ModelParams, mean: float = 0.0) -> CoefficientLimits:
    """Limits of I_p and I_q as eps -> 0.

    ``mean`` is the average of U over the ball; a nonzero value scales the
    limits by e^{p mean} and e^{-q mean} (shift invariance).
    """
    vol = params.volume
    A, B = params.A, params.B
    if A < B:
        Ip, Iq = vol, B / A * vol
    elif A > B:
        Ip, Iq = A / B * vol, vol
    else:
        Ip, Iq = vol, vol
    if mean:
        Ip *= math.exp(params.p * mean)
        Iq *= math.exp(-params.q * mean)
    return CoefficientLimits(Ip, Iq, degenerate=(A == B))


def boundary_expansion(params: ModelParams) -> BoundaryExpansion:
    _require_unequal(params)
    A, B, p, q, R, N, gR = params.A, params.B, params.p, params.q, params.R, params.N, params.gR
    if A < B:
        return BoundaryExpansion(-2.0 / q, math.log(2 * A * N**2 * gR / (q * R**2 * (A - B) ** 2)) / q)
    return BoundaryExpansion(2.0 / p, -math.log(2 * B * N**2 * gR / (p * R**2 * (A - B) ** 2)) / p)


def _chi(beta: float):
    if beta < 2:
        return 1, 0
    if beta == 2:
        return 1, 1
    return 0, 1


def _power_case(params, beta, gamma, eps):
    # A < B form
    A, B, q, R, N, gR = params.A, params.B, params.q, params.R, params.N, params.gR
    L = math.log(1.0 / eps)
    chi1, chi2 = _chi(beta)
    curv = 2 * N * gR / (R * (B - A))
    lead_coef = -2.0 / q * min(1.0, beta - 1.0)
    inner = math.sqrt(A / (2 * q * gR)) * (gamma * q * chi1 + curv * chi2)
    second = 2.0 / q * math.log(inner)
    if beta < 2:
        dU = -2.0 / (gamma * q) * eps**-beta
        rho = 2 * gR / (gamma**2 * q) * eps ** (-2 * (beta - 1))
    elif beta == 2:
        dU = -2.0 / (gamma * q + curv) * eps**-2
        rho = 2 * q * gR / (gamma * q + curv) ** 2 * eps**-2
    else:
        dU = -R * (B - A) / (N * gR) * eps**-2
        rho = q * R**2 * (B - A) ** 2 / (2 * N**2 * gR) * eps**-2
    return dict(
        U_leading=lead_coef * L,
        U_second=second,
        U_total=lead_coef * L + second,
        leading_coefficient=lead_coef,
        dU=dU,
        rho=rho,
        chi1=chi1,
        chi2=chi2,
    )


def _pi_case(params, query: PiSpec, eps):
    beta0 = query.beta0
    if query.limit_class not in ("zero", "infinite"):
        raise MalformedQuery("limit_class must be 'zero' or 'infinite'")
    if beta0 < 2 or (beta0 == 2 and query.limit_class == "infinite"):
        A, q, gR = params.A, params.q, params.gR
        pi = float(query.pi(eps))
        if not pi > 0:
            raise MalformedQuery("pi(eps) must be positive")
        L = math.log(1.0 / eps)
        lead_coef = -2.0 / q * (beta0 - 1.0)
        second = 2.0 / q * math.log(pi / eps**beta0) + 2.0 / q * math.log(math.sqrt(q * A / (2 * gR)))
        return dict(
            U_leading=lead_coef * L,
            U_second=second,
            U_total=lead_coef * L + second,
            leading_coefficient=lead_coef,
            dU=-2.0 / (q * pi),
            rho=2 * gR / q * (eps / pi) ** 2,
            chi1=1,
            chi2=0,
        ), pi
    out = _power_case(params, 3.0, 1.0, eps)
    return out, float(query.pi(eps))


def _iterated_log(x: float, n: int) -> float:
    for _ in range(n):
        if x <= 0:
            raise MalformedQuery("iterated logarithm undefined at this eps")
        x = math.log(x)
    return x


def _theta_case(params, query: ThetaCase, eps):
    A, q, gR = params.A, params.q, params.gR
    L = math.log(1.0 / eps)
    lead = -2.0 * query.gamma / q * L ** (1 - query.Theta)
    second = math.log(q * A / (2 * gR)) / q
    beta1 = 1 + query.gamma * L ** (-query.Theta)
    return dict(
        U_leading=lead,
        U_second=second,
        U_total=lead + second,
        leading_coefficient=None,
        dU=-2.0 / q * eps**-beta1,
        rho=2 * gR / q * eps ** (-2 * (beta1 - 1)),
    ), eps**beta1


def _itlog_case(params, query: IteratedLog, eps):
    A, q, gR = params.A, params.q, params.gR
    L = math.log(1.0 / eps)
    logn = _iterated_log(1.0 / eps, query.n)
    lead = -2.0 * query.gamma / q * logn
    second = (-2 * query.tau + math.log(q * A / (2 * gR))) / q
    beta2 = 1 + (query.gamma * logn + query.tau) / L
    dU = rho = None
    if query.n == 2 and query.gamma > 2:
        dU = -2.0 / q * eps**-beta2
        rho = 2 * gR / q * eps ** (-2 * (beta2 - 1))
    return dict(
        U_leading=lead, U_second=second, U_total=lead + second, dU=dU, rho=rho
    ), eps**beta2


def _validate_query(query):
    if isinstance(query, Interior):
        if not 0 < query.kappa < 1:
            raise MalformedQuery("kappa must lie in (0, 1)")
    elif isinstance(query, Power):
        if not query.beta > 1:
            raise MalformedQuery("beta must exceed 1")
        if query.beta < 2 and not query.gamma > 0:
            raise MalformedQuery("gamma must be positive for beta < 2")
        if query.gamma < 0:
            raise MalformedQuery("gamma must be nonnegative")
    elif isinstance(query, PiSpec):
        if not query.beta0 > 1:
            raise MalformedQuery("beta0 must exceed 1")
        if not callable(query.pi):
            raise MalformedQuery("pi must be callable")
    elif isinstance(query, ThetaCase):
        if not (0 < query.Theta < 1 and query.gamma > 0):
            raise MalformedQuery("Theta must lie in (0, 1) and gamma be positive")
    elif isinstance(query, IteratedLog):
        if not (int(query.n) == query.n and query.n >= 2 and query.gamma > 0):
            raise MalformedQuery("n must be an integer >= 2 and gamma positive")
    else:
        raise MalformedQuery(f"unknown query {query!r}")


def interior_expansion(params: ModelParams, query: ExpansionQuery, eps: Optional[float] = None) -> ExpansionResult:
    """Two-term expansion of U, and leading U' and rho, at the queried point."""
    _require_unequal(params)
    _validate_query(query)
    eps = params.eps if eps is None else float(eps)
    if not eps > 0:
        raise MalformedQuery("eps must be positive")
    R = params.R
    mirrored = params.A > params.B
    base = _mirror(params) if mirrored else params

    if isinstance(query, Interior):
        k = query.kappa
        return ExpansionResult(
            case="interior",
            eps=eps,
            r=R - eps**k,
            bound={
                "U": "C_kappa * eps**kappa * log(1/eps)",
                "U_shape": eps**k * math.log(1.0 / eps),
                "flux": "exp(-M_kappa / eps**(1 - kappa))",
                "kappa": k,
            },
        )

    if isinstance(query, Power):
        vals = _power_case(base, query.beta, query.gamma, eps)
        r = R - query.gamma * eps**query.beta
        case = "power"
    elif isinstance(query, PiSpec):
        vals, dist = _pi_case(base, query, eps)
        r = R - dist
        case = "pi_spec"
    elif isinstance(query, ThetaCase):
        vals, dist = _theta_case(base, query, eps)
        r = R - dist
        case = "theta_case"
    else:
        vals, dist = _itlog_case(base, query, eps)
        r = R - dist
        case = "iterated_log"

    if mirrored:
        for key in ("U_leading", "U_second", "U_total", "leading_coefficient", "dU", "rho"):
            if vals.get(key) is not None:
                vals[key] = -vals[key]
    return ExpansionResult(case=case, eps=eps, r=r, **vals)


def delta_weights(params: ModelParams) -> DeltaWeights:
    """Weights of the boundary Dirac masses of rho, (eps U')^2 and the Boltzmann excess."""
    A, B, p, q, R, N, gR = params.A, params.B, params.p, params.q, params.R, params.N, params.gR
    if A == B:
        return DeltaWeights(0.0, 0.0, 0.0)
    d = abs(B - A)
    valence = q if A < B else p
    majority = A if A < B else B
    return DeltaWeights(
        w_rho=R * d / N,
        w_energy=2 * R * d / (valence * N * gR),
        w_exp=R * d / (majority * N),
    )


def _inv_sqrt_g_integral(params: ModelParams, r: np.ndarray) -> np.ndarray:
    """Integral of g^{-1/2} from r to R, Gauss-Legendre on each interval."""
    R = params.R
    if params.dielectric.kind == "constant":
        return (R - r) / math.sqrt(params.gR)
    half = 0.5 * (R - r)[:, None]
    t = 0.5 * (R + r)[:, None] + half * _GL_NODES[None, :]
    vals = params.g(t) ** -0.5
    return (half * vals) @ _GL_WEIGHTS


def layer_profile(params: ModelParams, r) -> np.ndarray:
    """Leading layer profile U(r) obtained with the gradient remainder set to zero.

    Meant for r within O(eps) of R; further inside it overshoots.
    """
    _require_unequal(params)
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r_arr < 0) or np.any(r_arr > params.R * (1 + 1e-14)):
        raise OutOfDomain(f"r must lie in [0, {params.R}]")
    r_arr = np.minimum(r_arr, params.R)
    mirrored = params.A > params.B
    base = _mirror(params) if mirrored else params
    A, B, q, R, N, gR, eps = base.A, base.B, base.q, base.R, base.N, base.gR, base.eps
    seed = N * math.sqrt(2 * A * gR / q) / (R * (B - A))
    psi = seed + math.sqrt(q * A / 2) * _inv_sqrt_g_integral(base, r_arr) / eps**2
    U = 2.0 / q * (math.log(eps) + np.log(psi))
    if mirrored:
        U = -U
    if np.ndim(r) == 0:
        return float(U[0])
    return U


def gradient_closure(params: ModelParams, U_value, r) -> np.ndarray:
    """Predicted eps^2 U'(r) from the local value U(r)."""
    if np.any(np.asarray(r) <= 0) or np.any(np.asarray(r) > params.R):
        raise OutOfDomain(f"r must lie in (0, {params.R}]")
    U_value = np.asarray(U_value, dtype=float)
    eps = params.eps
    if params.A <= params.B:
        out = -np.sqrt(2 * params.A / (params.q * params.g(r))) * eps * np.exp(-params.q * U_value / 2)
    else:
        out = np.sqrt(2 * params.B / (params.p * params.g(r))) * eps * np.exp(params.p * U_value / 2)
    return out if out.ndim else float(out)


def capacitance_limit(params: ModelParams, gamma: float) -> CapacitanceReport:
    """Limit of the annular capacitance over [R - gamma eps^2, R] and its series form."""
    if not gamma > 0:
        raise NonPositiveGamma(f"gamma={gamma} must be positive")
    _require_unequal(params)
    R, N, gR = params.R, params.N, params.gR
    valence = params.q if params.A < params.B else params.p
    Cb = R**N * abs(params.B - params.A)
    x = Cb * gamma * valence / (2 * N * R ** (N - 1) * gR)
    C2 = Cb * valence / (2 * N)
    exact = C2 / ((1 + 1 / x) * math.log1p(x))
    C1 = R ** (N - 1) * gR / gamma
    return CapacitanceReport(
        gamma=float(gamma),
        exact=exact,
        C1=C1,
        C2=C2,
        combination=1.0 / (1.0 / C1 + 1.0 / C2),
        supremum=C2,
    )
