"""Instance files and distance reports as JSON.

Infinite values are written as the strings ``"+inf"`` and ``"-inf"`` (JSON
has no literal for them) and every float is written with 17 significant
digits, so a report read back reproduces the stored doubles exactly.
"""

from __future__ import annotations

import json
import math
import numbers
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from . import lp_core
from .cones import PolyhedralCone
from .distance.certificates import RankOneCertificate, dual_residual
from .distance.config import SolverConfig
from .distance.phi import primal_residual
from .distance.verify import DistanceReport
from .numerics import NormKind
from .process import ConicProcess, StructureBlock

POS_INF = "+inf"
NEG_INF = "-inf"
NAN = "nan"
CONE_TYPES = ("full", "nonneg", "nonpos", "zero", "rays")
NORM_SPACES = ("X", "Y")
RESIDUAL_MATCH = 1e-12


class SchemaError(ValueError):
    """Invalid instance or report data; the message starts with the field path."""


# JSON text ------------------------------------------------------------------


def _float_text(x: float) -> str:
    if math.isnan(x):
        return json.dumps(NAN)
    if math.isinf(x):
        return json.dumps(POS_INF if x > 0 else NEG_INF)
    return format(x, ".17g")


def dumps(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON text with the infinity sentinels and 17-digit floats."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, numbers.Integral):
        return str(int(obj))
    if isinstance(obj, numbers.Real):
        return _float_text(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def decode_sentinels(obj: Any) -> Any:
    """Replace the ``"+inf"``, ``"-inf"`` and ``"nan"`` strings by floats."""
    if isinstance(obj, dict):
        return {k: decode_sentinels(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [decode_sentinels(v) for v in obj]
    if obj == POS_INF:
        return math.inf
    if obj == NEG_INF:
        return -math.inf
    if obj == NAN:
        return math.nan
    return obj


# instance files ---------------------------------------------------------------


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise SchemaError(f"{path}: expected a number, got {type(value).__name__}")
    x = float(value)
    if not math.isfinite(x):
        raise SchemaError(f"{path}: expected a finite number")
    return x


def _vector(value, path: str, size: Optional[int] = None) -> list:
    if not isinstance(value, list):
        raise SchemaError(f"{path}: expected a list")
    if size is not None and len(value) != size:
        raise SchemaError(f"{path}: expected {size} entries, got {len(value)}")
    return [_number(v, f"{path}[{j}]") for j, v in enumerate(value)]


def _matrix(value, path: str, rows: Optional[int] = None, cols: Optional[int] = None) -> list:
    if not isinstance(value, list):
        raise SchemaError(f"{path}: expected a list of rows")
    if rows is not None and len(value) != rows:
        raise SchemaError(f"{path}: expected {rows} rows, got {len(value)}")
    if not value:
        raise SchemaError(f"{path}: expected at least one row")
    if cols is None:
        if not isinstance(value[0], list):
            raise SchemaError(f"{path}[0]: expected a list")
        cols = len(value[0])
    if cols == 0:
        raise SchemaError(f"{path}[0]: expected at least one entry")
    return [_vector(r, f"{path}[{i}]", cols) for i, r in enumerate(value)]


def _integer(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < 1:
        raise SchemaError(f"{path}: expected a positive integer")
    return int(value)


def _norm_tag(value, path: str) -> str:
    try:
        return NormKind.parse(value).value
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from None


@dataclass
class BlockSpec:
    P: list
    Q: list
    norm_U: str = NormKind.L2.value
    norm_V: str = NormKind.L2.value

    def to_dict(self) -> dict:
        return {"P": self.P, "Q": self.Q, "norm_U": self.norm_U, "norm_V": self.norm_V}


@dataclass
class InstanceFile:
    """Schema-checked contents of an instance file."""

    x_dim: int
    y_dim: int
    A: list
    cone_type: str
    rays: Optional[list] = None
    norms: dict = field(default_factory=dict)
    blocks: list = field(default_factory=list)
    name: str = ""

    @classmethod
    def from_dict(cls, data) -> "InstanceFile":
        if not isinstance(data, dict):
            raise SchemaError("<root>: expected an object")
        unknown = set(data) - {"x_dim", "y_dim", "norms", "A", "cone", "blocks", "name"}
        if unknown:
            raise SchemaError(f"<root>: unknown fields {sorted(unknown)}")
        if "A" not in data:
            raise SchemaError("A: missing")
        y_dim = _integer(data["y_dim"], "y_dim") if "y_dim" in data else None
        x_dim = _integer(data["x_dim"], "x_dim") if "x_dim" in data else None
        A = _matrix(data["A"], "A", y_dim, x_dim)
        y_dim, x_dim = len(A), len(A[0])

        cone = data.get("cone", {"type": "full"})
        if not isinstance(cone, dict):
            raise SchemaError("cone: expected an object")
        ctype = cone.get("type")
        if ctype not in CONE_TYPES:
            raise SchemaError(f"cone.type: expected one of {', '.join(CONE_TYPES)}, got {ctype!r}")
        rays = None
        if ctype == "rays":
            if "rays" not in cone:
                raise SchemaError("cone.rays: missing")
            if not isinstance(cone["rays"], list):
                raise SchemaError("cone.rays: expected a list of vectors")
            rays = [_vector(r, f"cone.rays[{j}]", x_dim) for j, r in enumerate(cone["rays"])]
        elif set(cone) - {"type"}:
            raise SchemaError(f"cone: unexpected fields for type {ctype!r}")

        norms = data.get("norms", {})
        if not isinstance(norms, dict):
            raise SchemaError("norms: expected an object")
        for key in norms:
            if key not in NORM_SPACES:
                raise SchemaError(f"norms.{key}: unknown space (expected X or Y)")
        norms = {k: _norm_tag(v, f"norms.{k}") for k, v in norms.items()}

        raw_blocks = data.get("blocks", [])
        if not isinstance(raw_blocks, list):
            raise SchemaError("blocks: expected a list")
        blocks = []
        for i, b in enumerate(raw_blocks):
            path = f"blocks[{i}]"
            if not isinstance(b, dict):
                raise SchemaError(f"{path}: expected an object")
            for key in ("P", "Q"):
                if key not in b:
                    raise SchemaError(f"{path}.{key}: missing")
            extra = set(b) - {"P", "Q", "norm_U", "norm_V"}
            if extra:
                raise SchemaError(f"{path}: unknown fields {sorted(extra)}")
            blocks.append(BlockSpec(
                _matrix(b["P"], f"{path}.P", rows=y_dim),
                _matrix(b["Q"], f"{path}.Q", cols=x_dim),
                _norm_tag(b.get("norm_U", "L2"), f"{path}.norm_U"),
                _norm_tag(b.get("norm_V", "L2"), f"{path}.norm_V"),
            ))
        name = data.get("name", "")
        if not isinstance(name, str):
            raise SchemaError("name: expected a string")
        return cls(x_dim, y_dim, A, ctype, rays, norms, blocks, name)

    def to_dict(self) -> dict:
        out = {}
        if self.name:
            out["name"] = self.name
        out["x_dim"] = self.x_dim
        out["y_dim"] = self.y_dim
        if self.norms:
            out["norms"] = dict(self.norms)
        out["A"] = self.A
        out["cone"] = {"type": self.cone_type} if self.rays is None else {"type": "rays", "rays": self.rays}
        out["blocks"] = [b.to_dict() for b in self.blocks]
        return out

    def cone(self) -> PolyhedralCone:
        if self.cone_type == "rays":
            if not self.rays:
                return PolyhedralCone.zero(self.x_dim)
            return PolyhedralCone.from_rays(np.array(self.rays), self.x_dim)
        return getattr(PolyhedralCone, self.cone_type)(self.x_dim)

    def process(self) -> ConicProcess:
        return ConicProcess(np.array(self.A), self.cone(), self.norms.get("X", "L2"), self.norms.get("Y", "L2"))

    def structure(self) -> list:
        return [StructureBlock(np.array(b.P), np.array(b.Q), b.norm_U, b.norm_V) for b in self.blocks]

    @classmethod
    def from_problem(cls, F: ConicProcess, blocks: Sequence[StructureBlock], name: str = "") -> "InstanceFile":
        cone = F.K.to_dict()
        return cls(
            F.x_dim, F.y_dim, F.A.tolist(), cone["type"], cone.get("rays"),
            {"X": F.x_norm.value, "Y": F.y_norm.value},
            [BlockSpec(b.P.tolist(), b.Q.tolist(), b.norm_U.value, b.norm_V.value) for b in blocks],
            name,
        )


def parse_instance(text: str) -> InstanceFile:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"<root>: invalid JSON ({exc})") from None
    return InstanceFile.from_dict(data)


def load_instance(path) -> InstanceFile:
    return parse_instance(Path(path).read_text())


def save_instance(inst: InstanceFile, path) -> None:
    Path(path).write_text(dumps(inst.to_dict()) + "\n")


def bundled_instances() -> list:
    """Names of the instance files shipped with the package."""
    root = resources.files("conicdist") / "instances"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def bundled_instance_path(name: str) -> Path:
    path = Path(str(resources.files("conicdist") / "instances" / f"{name}.json"))
    if not path.exists():
        raise FileNotFoundError(f"no bundled instance named {name!r}")
    return path


# reports ----------------------------------------------------------------------


def _perturbation_dict(T) -> Optional[dict]:
    if T is None:
        return None
    return {"T": [t.tolist() for t in T.T], "block_norms": list(map(float, T.norms)), "value": T.size}


def report_to_dict(report: DistanceReport, config: Optional[SolverConfig] = None) -> dict:
    """Plain-data form of ``report``; ``timings`` is the only nondeterministic field."""
    cfg = config or SolverConfig()
    certs = {
        "nonsurjectivity_witness": None if report.witness is None else np.asarray(report.witness).tolist(),
        "dual": None if report.dual is None else report.dual.to_dict(),
        "rank_one": None if report.rank_one is None else report.rank_one.to_dict(),
        "general": _perturbation_dict(report.general),
        "phi_min": None,
    }
    residuals = {
        "dual": None if report.dual is None else report.dual.residual,
        "rank_one": None if report.rank_one is None else report.rank_one.residual,
        "phi_min": None,
    }
    if report.phi_min is not None:
        ev = report.phi_min.evaluation
        certs["phi_min"] = {"v": [np.asarray(v).tolist() for v in report.phi_min.v],
                            "evaluation": None if ev is None else ev.to_dict()}
        if ev is not None and ev.x is not None:
            residuals["phi_min"] = ev.residual
    return {
        "mode": report.mode,
        "seed": report.seed,
        "surjective": report.surjective,
        "values": dict(report.values),
        "gaps": report.gaps,
        "ok": report.ok,
        "failures": list(report.failures),
        "checks": {
            "rank_one_breaks_surjectivity": None if report.rank_one is None else report.rank_one.verified,
            "scaled_back_surjective": report.scaled_back_surjective,
            "dichotomy": [
                {"rho": c.rho, "expected": c.expected, "found": c.found, "residual": c.residual,
                 "margin": c.margin, "error": c.error}
                for c in report.dichotomy
            ],
        },
        "certificates": certs,
        "residuals": residuals,
        "tolerances": {
            "gap": report.tol,
            "certificate": cfg.verify_tol,
            "bisection_abs": cfg.bisection.abs_tol,
            "bisection_rel": cfg.bisection.rel_tol,
            "lp_feasibility": lp_core.FEAS_TOL,
        },
        "budget": cfg.budget,
        "notes": list(report.notes),
        "timings": dict(report.timings),
    }


def write_report(data: dict, path) -> None:
    Path(path).write_text(dumps(data) + "\n")


def load_report(path) -> dict:
    return decode_sentinels(json.loads(Path(path).read_text()))


def recompute_residuals(data: dict, F: ConicProcess, blocks: Sequence[StructureBlock]) -> dict:
    """Residuals recomputed from the stored certificate coordinates."""
    certs = data.get("certificates", {})
    out = {}
    d = certs.get("dual")
    if d is not None:
        out["dual"] = dual_residual(F, blocks, np.array(d["y_star"]), [np.array(u) for u in d["u_star"]], d["z"])
    r = certs.get("rank_one")
    if r is not None:
        cert = RankOneCertificate.build(F, blocks, np.array(r["y_star"]), [np.array(v) for v in r["v"]],
                                        [np.array(a) for a in r["a"]])
        out["rank_one"] = cert.residual
    p = certs.get("phi_min")
    if p is not None and p.get("evaluation") is not None and "x" in p["evaluation"]:
        ev = p["evaluation"]
        out["phi_min"] = primal_residual(F, [np.array(y) for y in ev["y_list"]], np.array(ev["x"]),
                                          np.array(ev["w"]))
    return out


def residual_mismatches(data: dict, F: ConicProcess, blocks: Sequence[StructureBlock],
                        tol: float = RESIDUAL_MATCH) -> list:
    """Stored residuals that differ from their recomputation by more than ``tol``."""
    stored = data.get("residuals", {})
    bad = []
    for key, value in recompute_residuals(data, F, blocks).items():
        s = stored.get(key)
        if s is None or not abs(float(s) - value) <= tol:
            bad.append(f"residuals.{key}: stored {s}, recomputed {value:.17g}")
    return bad
