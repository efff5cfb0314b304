"""Boundary-layer adapted radial grids on [0, R] with trapezoidal quadrature."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import DegenerateSpec, LengthMismatch, MeshTooLarge

DEFAULT_NODE_CAP = 2_000_000


@dataclass(frozen=True)
class UniformSpec:
    M: int

    def to_dict(self):
        return {"kind": "uniform", "M": self.M}


@dataclass(frozen=True)
class GeometricSpec:
    """Cells of width ``h0`` at r=R growing by ``ratio`` inward, capped at ``cap``.

    ``None`` entries take the defaults h0 = eps^2 R / 20, ratio = 1.15,
    cap = R / 200 when the mesh is built.
    """

    h0: Optional[float] = None
    ratio: float = 1.15
    cap: Optional[float] = None

    def to_dict(self):
        return {"kind": "geometric", "h0": self.h0, "ratio": self.ratio, "cap": self.cap}


@dataclass(frozen=True)
class TwoZoneSpec:
    """Uniform cells on [0, transition] and on [transition, R]."""

    transition: float
    n_inner: int
    n_outer: int

    def to_dict(self):
        return {
            "kind": "two-zone",
            "transition": self.transition,
            "n_inner": self.n_inner,
            "n_outer": self.n_outer,
        }


MeshSpec = Union[UniformSpec, GeometricSpec, TwoZoneSpec]


def spec_from_dict(raw) -> MeshSpec:
    kind = raw.get("kind", "geometric")
    if kind == "uniform":
        return UniformSpec(int(raw["M"]))
    if kind == "geometric":
        def opt(key):
            value = raw.get(key)
            return None if value in (None, "", "default") else float(value)

        ratio = opt("ratio")
        return GeometricSpec(h0=opt("h0"), ratio=1.15 if ratio is None else ratio, cap=opt("cap"))
    if kind in ("two-zone", "two_zone", "twozone"):
        return TwoZoneSpec(float(raw["transition"]), int(raw["n_inner"]), int(raw["n_outer"]))
    raise DegenerateSpec(f"unknown mesh kind {kind!r}")


@dataclass(frozen=True, eq=False)
class Mesh:
    nodes: np.ndarray
    N: int
    spec: Optional[MeshSpec] = None
    w_radial: np.ndarray = field(init=False, repr=False)
    w_plain: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        r = np.ascontiguousarray(self.nodes, dtype=float)
        r.setflags(write=False)
        object.__setattr__(self, "nodes", r)
        dual = np.zeros_like(r)
        h = np.diff(r)
        dual[:-1] += 0.5 * h
        dual[1:] += 0.5 * h
        dual.setflags(write=False)
        w_rad = dual * r ** (self.N - 1)
        w_rad.setflags(write=False)
        object.__setattr__(self, "w_plain", dual)
        object.__setattr__(self, "w_radial", w_rad)

    @property
    def R(self) -> float:
        return float(self.nodes[-1])

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def spacings(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.nodes[1:] + self.nodes[:-1])

    def nodes_within(self, width: float) -> int:
        """Number of nodes in [R - width, R]."""
        return int(np.count_nonzero(self.R - self.nodes <= width))

    def refine(self) -> "Mesh":
        """Bisect every cell."""
        r = self.nodes
        fine = np.empty(2 * r.size - 1)
        fine[0::2] = r
        fine[1::2] = 0.5 * (r[1:] + r[:-1])
        return Mesh(fine, self.N, self.spec)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["node", "r", "w_radial", "w_plain"])
            for i, (r, wr, wp) in enumerate(zip(self.nodes, self.w_radial, self.w_plain)):
                writer.writerow([i, f"{r:.17g}", f"{wr:.17g}", f"{wp:.17g}"])


def _geometric_distances(R, h0, ratio, cap, node_cap):
    # distances from r=R, starting at 0
    d = [0.0]
    step = h0
    while True:
        step = min(step, cap)
        if d[-1] + step >= R:
            break
        d.append(d[-1] + step)
        if len(d) > node_cap:
            raise MeshTooLarge(f"geometric mesh exceeds {node_cap} nodes")
        if step >= cap:
            break
        step *= ratio
    rest = R - d[-1]
    if step >= cap and rest > 0:
        n = max(1, math.ceil(rest / cap - 1e-12))
        if len(d) + n > node_cap:
            raise MeshTooLarge(f"geometric mesh exceeds {node_cap} nodes")
        d.extend(d[-1] + rest * np.arange(1, n) / n)
    elif len(d) > 1 and rest < 0.5 * (d[-1] - d[-2]):
        # fold a sliver into its neighbour
        d.pop()
    d.append(R)
    return np.asarray(d)


def build_mesh(params, spec: Optional[MeshSpec] = None, node_cap: int = DEFAULT_NODE_CAP) -> Mesh:
    """Build a radial mesh on [0, params.R].

    The default spec is geometric with h0 = eps^2 R / 20, which puts at
    least ten nodes inside the eps^2 layer next to r = R.
    """
    R, N, eps = params.R, params.N, params.eps
    spec = GeometricSpec() if spec is None else spec

    if isinstance(spec, UniformSpec):
        if spec.M < 1:
            raise DegenerateSpec("uniform mesh needs M >= 1")
        if spec.M + 1 > node_cap:
            raise MeshTooLarge(f"uniform mesh exceeds {node_cap} nodes")
        nodes = R * np.arange(spec.M + 1) / spec.M
        nodes[-1] = R
        return Mesh(nodes, N, spec)

    if isinstance(spec, TwoZoneSpec):
        t = spec.transition
        if not (0 < t < R) or spec.n_inner < 1 or spec.n_outer < 1:
            raise DegenerateSpec("two-zone mesh needs 0 < transition < R and positive counts")
        if spec.n_inner + spec.n_outer + 1 > node_cap:
            raise MeshTooLarge(f"two-zone mesh exceeds {node_cap} nodes")
        inner = np.linspace(0.0, t, spec.n_inner + 1)
        # build the outer zone from R inward to keep spacing exact near R
        outer = R - (R - t) * np.arange(spec.n_outer, -1, -1) / spec.n_outer
        return Mesh(np.concatenate([inner, outer[1:]]), N, spec)

    if isinstance(spec, GeometricSpec):
        h0 = eps**2 * R / 20 if spec.h0 is None else spec.h0
        cap = R / 200 if spec.cap is None else spec.cap
        ratio = spec.ratio
        if not (h0 > 0 and cap > 0 and ratio > 0):
            raise DegenerateSpec("geometric spec parameters must be positive")
        if h0 >= R:
            raise DegenerateSpec(f"h0={h0} must be smaller than R={R}")
        if ratio <= 1 or ratio > 2:
            raise DegenerateSpec(f"growth ratio {ratio} must lie in (1, 2]")
        resolved = GeometricSpec(h0=h0, ratio=ratio, cap=cap)
        d = _geometric_distances(R, h0, ratio, cap, node_cap)
        nodes = (R - d)[::-1]
        nodes[0] = 0.0
        nodes[-1] = R
        return Mesh(nodes, N, resolved)

    raise DegenerateSpec(f"unsupported mesh spec {spec!r}")


def integrate_radial(mesh: Mesh, samples, weight: str = "radial") -> float:
    """Trapezoidal value of the integral of ``samples`` over [0, R].

    ``weight="radial"`` integrates against r^{N-1} dr, ``"plain"`` against dr.
    """
    f = np.asarray(samples, dtype=float)
    if f.shape != mesh.nodes.shape:
        raise LengthMismatch(f"expected {mesh.size} samples, got {f.shape}")
    if weight in ("radial", "r^{N-1}dr"):
        return float(np.dot(mesh.w_radial, f))
    if weight in ("plain", "dr"):
        return float(np.dot(mesh.w_plain, f))
    raise ValueError(f"unknown weight {weight!r}")
