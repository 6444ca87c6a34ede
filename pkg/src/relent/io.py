"""JSON file formats for states, POVMs, run configuration, and reports.

All floating-point values are serialized in decimal with up to 17 significant
digits, which round-trips IEEE doubles exactly. Complex matrices are stored
entrywise as {"re": x, "im": y} objects. Malformed files raise FormatError
naming the violated invariant.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, fields

import numpy as np

from .qops import DensityOperator, ProductDecomposition, dim_total
from .refsets import SolverConfig

FORMAT_VERSION = 1

__all__ = [
    "FormatError",
    "RunConfig",
    "emit_povm",
    "emit_state",
    "parse_povm",
    "parse_state",
    "report_to_csv",
    "report_to_json",
    "result_to_json",
]


class FormatError(ValueError):
    """A file violated the format or a state/POVM invariant."""


def _f17(x: float) -> float:
    # round through 17 significant decimal digits (identity on doubles)
    return float(f"{float(x):.17g}")


def _c_to_obj(z: complex) -> dict:
    return {"re": _f17(z.real), "im": _f17(z.imag)}


def _obj_to_c(obj) -> complex:
    if not isinstance(obj, dict) or set(obj) != {"re", "im"}:
        raise FormatError("complex entries must be {re, im} objects")
    return complex(float(obj["re"]), float(obj["im"]))


def _matrix_to_obj(m: np.ndarray) -> list:
    return [[_c_to_obj(z) for z in row] for row in np.asarray(m, dtype=complex)]


def _obj_to_matrix(rows) -> np.ndarray:
    return np.array([[_obj_to_c(z) for z in row] for row in rows], dtype=complex)


def _vector_to_obj(v: np.ndarray) -> list:
    return [_c_to_obj(z) for z in np.asarray(v, dtype=complex)]


def _obj_to_vector(entries) -> np.ndarray:
    return np.array([_obj_to_c(z) for z in entries], dtype=complex)


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------


def emit_state(state: DensityOperator, path, witness: ProductDecomposition | None = None,
               metadata: dict | None = None) -> None:
    doc = {
        "format": "relent-state",
        "version": FORMAT_VERSION,
        "dims": list(state.dims),
        "matrix": _matrix_to_obj(state.mat),
        "metadata": metadata or {},
    }
    if witness is not None:
        doc["witness"] = {
            "weights": [_f17(w) for w in witness.weights],
            "components": [
                [_vector_to_obj(v) for v in comp] for comp in witness.local_states
            ],
        }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def parse_state(path) -> tuple[DensityOperator, ProductDecomposition | None, dict]:
    """Read a state file; returns (state, witness or None, metadata)."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"not valid JSON: {exc}") from exc
    if doc.get("format") != "relent-state":
        raise FormatError("missing or wrong format tag (expected relent-state)")
    dims = doc.get("dims")
    if not isinstance(dims, list) or not all(isinstance(d, int) and d >= 1 for d in dims):
        raise FormatError("dims must be a list of positive integers")
    mat = _obj_to_matrix(doc["matrix"])
    D = dim_total(dims)
    if mat.shape != (D, D):
        raise FormatError(
            f"dimension mismatch: dims {dims} imply {D}x{D}, matrix is {mat.shape[0]}x{mat.shape[1]}"
        )
    tr = np.trace(mat).real
    if abs(tr - 1.0) > 1e-9:
        raise FormatError(f"trace invariant violated: trace is {tr:.12g}, not 1")
    try:
        state = DensityOperator(mat, tuple(dims))
    except ValueError as exc:
        raise FormatError(f"state invariant violated: {exc}") from exc
    witness = None
    if "witness" in doc:
        w = doc["witness"]
        witness = ProductDecomposition(
            tuple(float(x) for x in w["weights"]),
            tuple(tuple(_obj_to_vector(v) for v in comp) for comp in w["components"]),
        )
        err = float(np.max(np.abs(witness.assemble() - state.mat)))
        if err > 1e-9:
            raise FormatError(f"witness does not reassemble the state (error {err:.3e})")
    return state, witness, doc.get("metadata", {})


# ---------------------------------------------------------------------------
# POVMs
# ---------------------------------------------------------------------------


def emit_povm(povm, path, metadata: dict | None = None) -> None:
    structure = None
    if povm.structure is not None:
        structure = _structure_to_obj(povm.structure)
    doc = {
        "format": "relent-povm",
        "version": FORMAT_VERSION,
        "dims": list(povm.dims),
        "class": povm.class_tag,
        "effects": [_matrix_to_obj(m) for m in povm.effects],
        "structure": structure,
        "metadata": metadata or {},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def _structure_to_obj(st: dict):
    kind = st.get("kind")
    if kind == "lo":
        return {
            "kind": "lo",
            "locals": [[_matrix_to_obj(m) for m in loc] for loc in st["locals"]],
        }
    if kind == "locc1":
        return {
            "kind": "locc1",
            "leader": st["leader"],
            "leader_effects": [_matrix_to_obj(m) for m in st["leader_effects"]],
            "conditional": [[_matrix_to_obj(m) for m in cond] for cond in st["conditional"]],
        }
    if kind == "sep":
        return {
            "kind": "sep",
            "product_terms": [
                [[_matrix_to_obj(f) for f in factors] for factors in terms]
                for terms in st["product_terms"]
            ],
        }
    return None


def _obj_to_structure(obj):
    if obj is None:
        return None
    kind = obj.get("kind")
    if kind == "lo":
        return {
            "kind": "lo",
            "locals": [[_obj_to_matrix(m) for m in loc] for loc in obj["locals"]],
        }
    if kind == "locc1":
        return {
            "kind": "locc1",
            "leader": int(obj["leader"]),
            "leader_effects": [_obj_to_matrix(m) for m in obj["leader_effects"]],
            "conditional": [[_obj_to_matrix(m) for m in cond] for cond in obj["conditional"]],
        }
    if kind == "sep":
        return {
            "kind": "sep",
            "product_terms": [
                [[_obj_to_matrix(f) for f in factors] for factors in terms]
                for terms in obj["product_terms"]
            ],
        }
    raise FormatError(f"unknown structure kind {kind!r}")


def parse_povm(path):
    from .povm import Povm

    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"not valid JSON: {exc}") from exc
    if doc.get("format") != "relent-povm":
        raise FormatError("missing or wrong format tag (expected relent-povm)")
    dims = tuple(int(d) for d in doc["dims"])
    effects = tuple(_obj_to_matrix(m) for m in doc["effects"])
    try:
        return Povm(effects, dims, doc.get("class", "all"), _obj_to_structure(doc.get("structure")))
    except ValueError as exc:
        raise FormatError(f"POVM invariant violated: {exc}") from exc


# ---------------------------------------------------------------------------
# run configuration
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    """Flat, serializable knob set for the CLI; unknown keys are rejected."""

    set_kind: str = "sep"
    measurement_class: str = "lo"
    outcomes_per_party: int = 4
    fw_gap_tol: float = 1e-5
    fw_max_iters: int = 2000
    lmo_restarts: int = 20
    lmo_sweeps: int = 200
    pgd_max_iters: int = 600
    ascent_restarts: int = 10
    ascent_iters: int = 500
    rounds: int = 30
    samples: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.set_kind not in ("sep", "ppt"):
            raise FormatError(f"set_kind must be sep or ppt, got {self.set_kind!r}")
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, (int, float)) and not isinstance(v, bool) and v <= 0:
                if f.name != "seed":
                    raise FormatError(f"config field {f.name} must be positive, got {v}")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise FormatError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            fw_gap_tol=self.fw_gap_tol,
            fw_max_iters=self.fw_max_iters,
            lmo_restarts=self.lmo_restarts,
            lmo_sweeps=self.lmo_sweeps,
            pgd_max_iters=self.pgd_max_iters,
        )

    def measurement_spec(self):
        from .povm import MeasurementClassSpec

        return MeasurementClassSpec(
            self.measurement_class,
            self.outcomes_per_party,
            ascent_restarts=self.ascent_restarts,
            ascent_iters=self.ascent_iters,
        )


# ---------------------------------------------------------------------------
# results and reports
# ---------------------------------------------------------------------------


def _finite(x: float):
    if x is None or not math.isfinite(x):
        return None
    return _f17(x)


def result_to_json(res, extra: dict | None = None) -> dict:
    """OptimizationResult (or CertifiedValue) as a JSON-ready dict."""
    doc = dict(extra or {})
    if hasattr(res, "estimate"):
        doc.update(
            estimate=_f17(res.estimate),
            certified_lower=_f17(res.certified_lower),
        )
        det = {
            k: _finite(v) for k, v in res.details.items() if isinstance(v, (int, float))
        }
        doc["details"] = det
    else:
        doc.update(
            value=_f17(res.value),
            bound_direction=res.bound_direction,
            iterations=res.iterations,
            final_gap=_finite(res.final_gap),
            dual_bound=_finite(res.dual_bound),
            converged=res.converged,
            trace=[_f17(v) for v in res.trace],
        )
    return doc


def report_to_json(report) -> dict:
    return {
        "format": "relent-report",
        "version": FORMAT_VERSION,
        "suite": report.suite,
        "n_instances": report.n_instances,
        "seed": report.seed,
        "min_margin": _finite(report.min_margin),
        "n_failures": len(report.failures),
        "passed": report.passed,
        "margins": [
            {
                "label": m.label,
                "lhs": _finite(m.lhs),
                "rhs": _finite(m.rhs),
                "margin": _finite(m.margin),
                "tolerance": _f17(m.tolerance),
                "ok": m.ok,
            }
            for m in report.margins
        ],
    }


CSV_COLUMNS = ("suite", "label", "lhs", "rhs", "margin", "tolerance", "ok")


def report_to_csv(report, path) -> None:
    """One row per margin; fixed column order and 17-digit decimals."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for m in report.margins:
            writer.writerow(
                [
                    report.suite,
                    m.label,
                    f"{m.lhs:.17g}",
                    f"{m.rhs:.17g}",
                    f"{m.margin:.17g}",
                    f"{m.tolerance:.17g}",
                    int(m.ok),
                ]
            )
