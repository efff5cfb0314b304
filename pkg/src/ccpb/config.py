"""Run configuration: INI-style sections of key = value pairs, or JSON.

See the README for the full grammar.  Both formats map onto the same
nested dictionary ``{section: {key: value}}`` before being checked.
"""

from __future__ import annotations

import configparser
import json
import math
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from . import asymptotics
from .diagnostics import ValidationOptions
from .errors import ConfigParse
from .mesh import GeometricSpec, MeshSpec, spec_from_dict
from .model import ModelParams, validate_params
from .solver import SolverOptions

SECTIONS = ("model", "dielectric", "mesh", "solver", "diagnostics", "output")
FORMATS = ("csv", "json")
KEYS = {
    "model": {"A", "B", "p", "q", "eps", "R", "N", "eta", "dielectric"},
    "dielectric": {"kind", "g0", "coefficients", "r", "g"},
    "mesh": {"kind", "M", "h0", "ratio", "cap", "transition", "n_inner", "n_outer"},
    "solver": {"tol", "max_iter", "min_step", "linear_solver", "substeps", "seed", "ladder"},
    "output": {"dir", "format"},
}
QUERY_KEYS = {"case", "eps", "kappa", "beta", "gamma", "Theta", "n", "tau", "beta0", "limit_class",
              "exponent", "coefficient", "log_power"}


@dataclass
class RunConfig:
    params: ModelParams
    mesh: MeshSpec = field(default_factory=GeometricSpec)
    solver: SolverOptions = field(default_factory=SolverOptions)
    ladder: Optional[List[float]] = None
    seed: str = "zero"
    substeps: int = 2
    kappa: float = 0.5
    thetas: Tuple[float, ...] = (1.0, 1.5)
    gammas: Tuple[float, ...] = (0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0)
    tolerances: Dict[str, float] = field(default_factory=dict)
    queries: List[Tuple[str, object, Optional[float]]] = field(default_factory=list)
    out_dir: str = "ccpb-out"
    format: str = "csv"

    def validation_options(self) -> ValidationOptions:
        return ValidationOptions(
            kappa=self.kappa,
            thetas=tuple(self.thetas),
            substeps=self.substeps,
            solver=self.solver,
            mesh_policy=self.mesh,
            seed=self.seed,
            **self.tolerances,
        )


def parse_ladder(text: str) -> List[float]:
    """``START:FACTOR:COUNT`` or a comma separated list of eps values."""
    text = str(text).strip()
    try:
        if ":" in text:
            start, factor, count = text.split(":")
            start, factor, n = float(start), float(factor), int(count)
            if not (start > 0 and 0 < factor < 1 and n >= 1):
                raise ValueError
            ladder = [start * factor**k for k in range(n)]
        else:
            ladder = [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise ConfigParse(f"bad ladder {text!r}; expected START:FACTOR:COUNT with 0 < FACTOR < 1") from None
    if not ladder or any(e <= 0 for e in ladder) or any(b >= a for a, b in zip(ladder, ladder[1:])):
        raise ConfigParse(f"ladder {text!r} must be positive and strictly decreasing")
    return ladder


def _floats(value) -> Tuple[float, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(float(v) for v in value)
    if isinstance(value, (int, float)):
        return (float(value),)
    return tuple(float(v) for v in str(value).replace(",", " ").split())


def read_raw(path: str) -> dict:
    """Load a config file into ``{section: {key: value}}``."""
    if not os.path.isfile(path):
        raise ConfigParse(f"config file not found: {path}")
    with open(path) as fh:
        text = fh.read()
    if path.endswith(".json") or text.lstrip().startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigParse(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(raw, dict) or not all(isinstance(v, dict) for v in raw.values()):
            raise ConfigParse(f"{path}: top level must map section names to objects")
        return raw
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keep A and B distinct from a and b
    try:
        parser.read_string(text, source=path)
    except configparser.Error as exc:
        raise ConfigParse(f"{path}: {exc}") from exc
    return {name: dict(parser[name]) for name in parser.sections()}


def _query_from_dict(raw: dict):
    case = str(raw.get("case", "power")).replace("-", "_")
    eps = float(raw["eps"]) if raw.get("eps") not in (None, "") else None
    try:
        if case == "interior":
            q = asymptotics.Interior(float(raw.get("kappa", 0.5)))
        elif case == "power":
            q = asymptotics.Power(float(raw["beta"]), float(raw.get("gamma", 1.0)))
        elif case == "theta_case":
            q = asymptotics.ThetaCase(float(raw["Theta"]), float(raw["gamma"]))
        elif case == "iterated_log":
            q = asymptotics.IteratedLog(int(raw["n"]), float(raw["gamma"]), float(raw.get("tau", 0.0)))
        elif case == "pi_spec":
            # pi(eps) = coefficient * eps^exponent * log(1/eps)^log_power
            c = float(raw.get("coefficient", 1.0))
            e = float(raw["exponent"])
            k = float(raw.get("log_power", 0.0))
            q = asymptotics.PiSpec(
                float(raw["beta0"]),
                str(raw["limit_class"]),
                lambda x, c=c, e=e, k=k: c * x**e * math.log(1.0 / x) ** k,
            )
        else:
            raise ConfigParse(f"unknown query case {case!r}")
    except (KeyError, ValueError) as exc:
        raise ConfigParse(f"query {raw!r}: {exc}") from exc
    return case, q, eps


def build_config(raw: dict) -> RunConfig:
    """Check a raw nested mapping and turn it into a :class:`RunConfig`."""
    unknown = [s for s in raw if s not in SECTIONS and not s.startswith("query")]
    if unknown:
        raise ConfigParse(f"unknown section(s): {', '.join(sorted(unknown))}")
    for section, entries in raw.items():
        allowed = QUERY_KEYS if section.startswith("query") else KEYS.get(section)
        extra = sorted(set(entries) - allowed) if allowed is not None else []
        if extra:
            raise ConfigParse(f"[{section}]: unknown key(s) {', '.join(extra)}")
    model = dict(raw.get("model", {}))
    if "dielectric" in raw:
        diel = dict(raw["dielectric"])
        kind = diel.get("kind", "constant")
        if kind == "constant":
            model["dielectric"] = {"kind": "constant", "g0": float(diel.get("g0", 1.0))}
        elif kind == "polynomial":
            model["dielectric"] = {"kind": "polynomial", "coefficients": list(_floats(diel["coefficients"]))}
        elif kind == "tabulated":
            model["dielectric"] = {"kind": "tabulated", "r": list(_floats(diel["r"])), "g": list(_floats(diel["g"]))}
        else:
            raise ConfigParse(f"unknown dielectric kind {kind!r}")
    if "N" in model and isinstance(model["N"], str):
        try:
            model["N"] = int(model["N"])
        except ValueError:
            raise ConfigParse(f"N={model['N']!r} is not an integer") from None
    model.setdefault("eps", 0.1)
    params = validate_params(model)

    try:
        mesh = spec_from_dict(raw["mesh"]) if "mesh" in raw else GeometricSpec()
    except (KeyError, ValueError) as exc:
        raise ConfigParse(f"[mesh]: {exc}") from exc

    s = raw.get("solver", {})
    try:
        solver = SolverOptions(
            tol=float(s.get("tol", 1e-10)),
            max_iter=int(s.get("max_iter", 50)),
            min_step=float(s.get("min_step", 2.0**-20)),
            linear_solver=str(s.get("linear_solver", "woodbury")),
        )
        substeps = int(s.get("substeps", 2))
    except ValueError as exc:
        raise ConfigParse(f"[solver]: {exc}") from exc
    if solver.linear_solver not in ("woodbury", "dense"):
        raise ConfigParse("[solver] linear_solver must be woodbury or dense")
    seed = str(s.get("seed", "zero"))
    if seed not in ("zero", "layer"):
        raise ConfigParse("[solver] seed must be zero or layer")
    ladder = None
    if "ladder" in s:
        ladder = parse_ladder(s["ladder"]) if not isinstance(s["ladder"], list) else parse_ladder(
            ",".join(str(v) for v in s["ladder"])
        )

    d = dict(raw.get("diagnostics", {}))
    try:
        kappa = float(d.pop("kappa", 0.5))
        thetas = _floats(d.pop("thetas", "1 1.5"))
        gammas = _floats(d.pop("gammas", "0.1 0.25 0.5 1 2 4 8"))
        tolerances = {}
        allowed = {f.name for f in ValidationOptions.__dataclass_fields__.values()}
        for key, value in d.items():
            if key not in allowed or key in ("solver", "mesh_policy", "seed", "thetas", "kappa"):
                raise ConfigParse(f"[diagnostics]: unknown key {key!r}")
            tolerances[key] = int(value) if key == "trend_points" else float(value)
    except ValueError as exc:
        raise ConfigParse(f"[diagnostics]: {exc}") from exc

    queries = [_query_from_dict(v) for k, v in sorted(raw.items()) if k.startswith("query")]

    o = raw.get("output", {})
    fmt = str(o.get("format", "csv"))
    if fmt not in FORMATS:
        raise ConfigParse(f"[output] format must be one of {FORMATS}")
    return RunConfig(
        params=params,
        mesh=mesh,
        solver=solver,
        ladder=ladder,
        seed=seed,
        substeps=substeps,
        kappa=kappa,
        thetas=thetas,
        gammas=gammas,
        tolerances=tolerances,
        queries=queries,
        out_dir=str(o.get("dir", "ccpb-out")),
        format=fmt,
    )


def load_config(path: Optional[str]) -> RunConfig:
    """Read and check a config file; ``None`` gives the reference configuration P0."""
    if path is None:
        raw = {"model": {"A": 1.0, "B": 2.0, "p": 1.0, "q": 1.0, "eps": 0.1}}
    else:
        raw = read_raw(path)
    return build_config(raw)
