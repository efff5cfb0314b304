"""Model parameters, dielectric profiles and parameter-level constants."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import (
    DielectricNotPositive,
    InvalidDimension,
    NonPositiveParameter,
    ParameterError,
)

# Number of sample points used to check positivity of g and to take max/min.
_DIELECTRIC_SAMPLES = 2001

_ERROR_CLASSES = {
    "NonPositiveParameter": NonPositiveParameter,
    "DielectricNotPositive": DielectricNotPositive,
    "InvalidDimension": InvalidDimension,
}


class DielectricProfile:
    """Radial dielectric coefficient g(r) and its derivative.

    Build one with :meth:`constant`, :meth:`polynomial` or :meth:`tabulated`.
    Tabulated profiles use PCHIP interpolation, which is monotone between
    samples, so positive samples give a positive interpolant.
    """

    def __init__(self, kind, data):
        self.kind = kind
        self._data = data
        if kind == "constant":
            self._g0 = float(data)
        elif kind == "polynomial":
            # coefficients in increasing powers of r
            self._poly = np.polynomial.Polynomial(np.asarray(data, dtype=float))
            self._dpoly = self._poly.deriv()
        elif kind == "tabulated":
            r, g = data
            self._interp = PchipInterpolator(np.asarray(r, float), np.asarray(g, float))
            self._dinterp = self._interp.derivative()
        else:
            raise ValueError(f"unknown dielectric kind {kind!r}")

    @classmethod
    def constant(cls, g0=1.0):
        return cls("constant", float(g0))

    @classmethod
    def polynomial(cls, coefficients: Sequence[float]):
        """g(r) = c0 + c1 r + c2 r^2 + ..."""
        return cls("polynomial", tuple(float(c) for c in coefficients))

    @classmethod
    def tabulated(cls, r: Sequence[float], g: Sequence[float]):
        r = np.asarray(r, dtype=float)
        g = np.asarray(g, dtype=float)
        if r.ndim != 1 or r.shape != g.shape or r.size < 2:
            raise ValueError("tabulated dielectric needs matching 1-d arrays of length >= 2")
        if np.any(np.diff(r) <= 0):
            raise ValueError("tabulated dielectric sample points must be strictly increasing")
        return cls("tabulated", (tuple(r), tuple(g)))

    def eval(self, r):
        if self.kind == "constant":
            return np.full_like(np.asarray(r, dtype=float), self._g0) + 0.0
        if self.kind == "polynomial":
            return self._poly(np.asarray(r, dtype=float))
        return self._interp(np.asarray(r, dtype=float))

    def deriv(self, r):
        if self.kind == "constant":
            return np.zeros_like(np.asarray(r, dtype=float))
        if self.kind == "polynomial":
            return self._dpoly(np.asarray(r, dtype=float))
        return self._dinterp(np.asarray(r, dtype=float))

    def __call__(self, r):
        return self.eval(r)

    def to_dict(self):
        if self.kind == "constant":
            return {"kind": "constant", "g0": self._g0}
        if self.kind == "polynomial":
            return {"kind": "polynomial", "coefficients": list(self._data)}
        r, g = self._data
        return {"kind": "tabulated", "r": list(r), "g": list(g)}

    def __eq__(self, other):
        return (
            isinstance(other, DielectricProfile)
            and self.kind == other.kind
            and self._data == other._data
        )

    def __hash__(self):
        return hash((self.kind, self._data))

    def __repr__(self):
        return f"DielectricProfile({self.kind}, {self._data!r})"


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless parameters of the radial CCPB problem.

    ``A`` and ``B`` are the total anion/cation concentrations, ``p`` and
    ``q`` their valences, ``eps`` the singular perturbation parameter,
    ``R`` the ball radius and ``N`` the space dimension.  ``eta`` is the
    optional Stern-layer (Robin) coefficient.
    """

    A: float
    B: float
    p: float
    q: float
    eps: float
    R: float = 1.0
    N: int = 2
    dielectric: DielectricProfile = field(default_factory=DielectricProfile.constant)
    eta: Optional[float] = None
    g_min: float = field(default=float("nan"), compare=False, repr=False)
    g_max: float = field(default=float("nan"), compare=False, repr=False)

    def g(self, r):
        return self.dielectric.eval(r)

    def dg(self, r):
        return self.dielectric.deriv(r)

    @property
    def gR(self) -> float:
        return float(self.dielectric.eval(self.R))

    @property
    def volume(self) -> float:
        """Radial measure of the ball, R^N / N (unit sphere area taken as 1)."""
        return self.R**self.N / self.N

    @property
    def sign(self) -> int:
        """+1 when A > B, -1 when A < B, 0 for the neutral case."""
        return int(np.sign(self.A - self.B))

    def with_eps(self, eps: float) -> "ModelParams":
        return dataclasses.replace(self, eps=float(eps))

    def replace(self, **changes) -> "ModelParams":
        return validate_params({**self.to_dict(), **changes})

    def to_dict(self):
        return {
            "A": self.A,
            "B": self.B,
            "p": self.p,
            "q": self.q,
            "eps": self.eps,
            "R": self.R,
            "N": self.N,
            "eta": self.eta,
            "dielectric": self.dielectric.to_dict(),
        }


@dataclass(frozen=True)
class DerivedConstants:
    boundary_slope: float
    robin_boundary_value: Optional[float]
    decay_rate: float
    total_charge: float


def _dielectric_from_raw(raw):
    if raw is None:
        return DielectricProfile.constant(1.0)
    if isinstance(raw, DielectricProfile):
        return raw
    if isinstance(raw, (int, float)):
        return DielectricProfile.constant(raw)
    if callable(raw):
        raise TypeError("pass a DielectricProfile, a number or a dict, not a bare callable")
    kind = raw.get("kind", "constant")
    if kind == "constant":
        return DielectricProfile.constant(raw.get("g0", 1.0))
    if kind == "polynomial":
        return DielectricProfile.polynomial(raw["coefficients"])
    if kind == "tabulated":
        return DielectricProfile.tabulated(raw["r"], raw["g"])
    raise ValueError(f"unknown dielectric kind {kind!r}")


def validate_params(raw: Mapping) -> ModelParams:
    """Check a raw parameter mapping and build a :class:`ModelParams`.

    Every violated constraint is collected; the raised error carries the
    full list in ``violations``.
    """
    violations = []

    def number(name, default=None):
        value = raw.get(name, default)
        if value is None:
            violations.append(("NonPositiveParameter", f"{name} is missing"))
            return float("nan")
        try:
            return float(value)
        except (TypeError, ValueError):
            violations.append(("NonPositiveParameter", f"{name}={value!r} is not a number"))
            return float("nan")

    values = {name: number(name) for name in ("A", "B", "p", "q", "eps")}
    values["R"] = number("R", 1.0)
    for name, value in values.items():
        if not (math.isfinite(value) and value > 0):
            if not any(name in text for _, text in violations):
                violations.append(("NonPositiveParameter", f"{name}={value} must be > 0"))

    N_raw = raw.get("N", 2)
    N = None
    if isinstance(N_raw, bool) or not isinstance(N_raw, (int, float, np.integer, np.floating)):
        violations.append(("InvalidDimension", f"N={N_raw!r} must be an integer >= 2"))
    elif float(N_raw) != int(N_raw) or int(N_raw) < 2:
        violations.append(("InvalidDimension", f"N={N_raw!r} must be an integer >= 2"))
    else:
        N = int(N_raw)

    eta = raw.get("eta")
    if eta is not None:
        eta = float(eta)
        if not (math.isfinite(eta) and eta >= 0):
            violations.append(("NonPositiveParameter", f"eta={eta} must be >= 0"))

    try:
        dielectric = _dielectric_from_raw(raw.get("dielectric"))
    except (TypeError, ValueError, KeyError) as exc:
        violations.append(("DielectricNotPositive", f"invalid dielectric: {exc}"))
        dielectric = None

    g_min = g_max = float("nan")
    R = values["R"]
    if dielectric is not None and math.isfinite(R) and R > 0:
        r = np.linspace(0.0, R, _DIELECTRIC_SAMPLES)
        g = dielectric.eval(r)
        dg = dielectric.deriv(r)
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(dg))):
            violations.append(("DielectricNotPositive", "g or g' is not finite on [0, R]"))
        elif np.min(g) <= 0:
            i = int(np.argmin(g))
            violations.append(
                ("DielectricNotPositive", f"g({r[i]:.6g}) = {g[i]:.6g} is not positive")
            )
        else:
            g_min, g_max = float(np.min(g)), float(np.max(g))

    if violations:
        cls = _ERROR_CLASSES.get(violations[0][0], ParameterError)
        raise cls(violations)

    return ModelParams(
        A=values["A"],
        B=values["B"],
        p=values["p"],
        q=values["q"],
        eps=values["eps"],
        R=R,
        N=N,
        dielectric=dielectric,
        eta=eta,
        g_min=g_min,
        g_max=g_max,
    )


def derived_constants(params: ModelParams) -> DerivedConstants:
    A, B, p, q, eps, R, N = (params.A, params.B, params.p, params.q, params.eps, params.R, params.N)
    gR = params.gR
    slope = R * (A - B) / (eps**2 * N * gR)
    robin = None
    if params.eta is not None:
        robin = params.eta * R * (B - A) / (eps**2 * N * gR)
    decay = math.sqrt(min(A, B) * (p + q) / params.g_max * (q / p) ** ((p - q) / (p + q)))
    return DerivedConstants(
        boundary_slope=slope,
        robin_boundary_value=robin,
        decay_rate=decay,
        total_charge=R**N * abs(A - B),
    )


def p0(eps=0.1, **overrides) -> ModelParams:
    """Reference configuration A=1, B=2, p=q=1, R=1, N=2, g=1."""
    raw = {"A": 1.0, "B": 2.0, "p": 1.0, "q": 1.0, "eps": eps, "R": 1.0, "N": 2}
    raw.update(overrides)
    return validate_params(raw)
