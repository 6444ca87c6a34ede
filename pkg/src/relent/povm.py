"""POVM classes, measurement-restricted relative entropies, and certified bounds.

Measurement classes form the hierarchy LO ⊂ LOCC1 ⊂ SEP ⊂ PPT ⊂ ALL.
The restricted relative entropy sup_{M∈class} S(M(ρ)||M(σ)) is estimated by
gradient ascent over an isometry (square-root) parametrization of the class,
so completeness Σ M_i = I holds by construction at every iterate. Restricted
relative entropy of entanglement is estimated by alternating best response
and certified from below by re-solving inf_σ KL at a fixed feasible
measurement with the Frank-Wolfe machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .entropy import apply_measurement, classical_kl, measured_relative_entropy
from .qops import DensityOperator, as_rng, dim_total, herm, permute_systems
from .refsets import (
    OptimizationResult,
    ReferenceSetSpec,
    SolverConfig,
    is_ppt_all_cuts,
    min_kl_over_reference_set,
    sep_lmo,
    trace_distance_to_set,
)

LN2 = math.log(2.0)
CLASS_TAGS = ("lo", "locc1", "sep", "ppt", "all")
# index in this ordering = how permissive the class is
_CLASS_RANK = {t: i for i, t in enumerate(CLASS_TAGS)}

__all__ = [
    "CLASS_TAGS",
    "CertifiedValue",
    "MeasurementClassSpec",
    "Povm",
    "PovmValidation",
    "controlled_locc1_povm",
    "informationally_complete_lo",
    "random_lo_povm",
    "tensor_lo_povm",
    "matthews_faithfulness_bound",
    "pinsker_lower_bound",
    "restricted_ree",
    "restricted_relative_entropy",
    "validate_povm",
]


@dataclass(frozen=True)
class Povm:
    """A finite POVM on a multipartite space, annotated with its class.

    ``structure`` holds the class witness: per-party local POVMs for LO,
    leader/conditional stages for LOCC1, per-effect product factors for SEP.
    Construction enforces positivity and completeness; use validate_povm for
    report-style checking of raw effect lists.
    """

    effects: tuple
    dims: tuple[int, ...]
    class_tag: str = "all"
    structure: dict | None = field(default=None, repr=False)

    def __post_init__(self):
        effects = tuple(np.asarray(m, dtype=complex) for m in self.effects)
        object.__setattr__(self, "effects", effects)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if self.class_tag not in CLASS_TAGS:
            raise ValueError(f"unknown class tag {self.class_tag!r}")
        rep = validate_povm(effects, self.dims, self.class_tag, self.structure)
        if not rep.valid:
            raise ValueError(f"invalid POVM: {rep.failures()}")

    @property
    def n_outcomes(self) -> int:
        return len(self.effects)

    def probabilities(self, state) -> np.ndarray:
        return apply_measurement(list(self.effects), state)


@dataclass
class PovmValidation:
    """Completeness / positivity / class-structure report with margins."""

    completeness_error: float
    min_effect_eig: float
    structure_error: float | None
    class_ok: bool
    ppt_ok: bool | None = None

    @property
    def complete(self) -> bool:
        return self.completeness_error <= 1e-10

    @property
    def positive(self) -> bool:
        return self.min_effect_eig >= -1e-10

    @property
    def valid(self) -> bool:
        return self.complete and self.positive and self.class_ok

    def failures(self) -> list[str]:
        out = []
        if not self.complete:
            out.append(f"completeness error {self.completeness_error:.3e}")
        if not self.positive:
            out.append(f"effect eigenvalue {self.min_effect_eig:.3e}")
        if not self.class_ok:
            out.append("class structure check failed")
        return out


def _effect_is_entangled(effect: np.ndarray, dims, rng) -> bool:
    """sep_lmo-based test: a rank-one effect with maximal product overlap
    below its norm is entangled; higher-rank effects are screened by PPT."""
    w = np.linalg.eigvalsh(herm(effect))
    if w[-1] <= 1e-12:
        return False
    rank = int(np.sum(w > 1e-10))
    if rank == 1:
        best_vecs, val = sep_lmo(-effect, dims, rng, restarts=12, sweeps=80)
        return -val < w[-1] * (1 - 1e-8)
    ok, _ = is_ppt_all_cuts(effect / np.trace(effect).real, dims)
    return not ok


def validate_povm(
    effects: Sequence[np.ndarray],
    dims: Sequence[int],
    class_tag: str | None = None,
    structure: dict | None = None,
    seed=0,
) -> PovmValidation:
    """Report-style POVM validation (never raises on invalid input)."""
    dims = tuple(int(d) for d in dims)
    D = dim_total(dims)
    effects = [np.asarray(m, dtype=complex) for m in effects]
    total = sum(effects)
    completeness = float(np.max(np.abs(total - np.eye(D))))
    min_eig = min(float(np.linalg.eigvalsh(herm(m)).min()) for m in effects)

    structure_error = None
    class_ok = True
    ppt_ok = None
    rng = as_rng(seed)
    if class_tag in ("lo", "locc1", "sep") and structure is not None:
        rebuilt = _assemble_structure(structure, dims)
        if rebuilt is None or len(rebuilt) != len(effects):
            class_ok = False
        else:
            structure_error = max(
                float(np.max(np.abs(a - b))) for a, b in zip(rebuilt, effects)
            )
            class_ok = structure_error <= 1e-9
    elif class_tag in ("lo", "locc1", "sep") and len(dims) > 1:
        # no witness: screen with necessary conditions (PPT and, for rank-one
        # effects, the maximal product-overlap test)
        class_ok = not any(_effect_is_entangled(m, dims, rng) for m in effects)
    if class_tag == "ppt" and len(dims) > 1:
        ppt_ok = all(
            is_ppt_all_cuts(m / max(np.trace(m).real, 1e-30), dims, tol=1e-9)[0]
            for m in effects
            if np.trace(m).real > 1e-12
        )
        class_ok = bool(ppt_ok)
    return PovmValidation(completeness, min_eig, structure_error, class_ok, ppt_ok)


def _assemble_structure(structure: dict, dims) -> list[np.ndarray] | None:
    kind = structure.get("kind")
    if kind == "lo":
        locals_ = structure["locals"]
        effects = [np.eye(1, dtype=complex)]
        out = []
        idx = [range(len(loc)) for loc in locals_]
        for multi in np.ndindex(*[len(loc) for loc in locals_]):
            m = np.asarray(locals_[0][multi[0]], dtype=complex)
            for j in range(1, len(locals_)):
                m = np.kron(m, np.asarray(locals_[j][multi[j]], dtype=complex))
            out.append(m)
        return out
    if kind == "locc1":
        leader = structure["leader"]
        out = []
        for a, na in enumerate(structure["leader_effects"]):
            for cb in structure["conditional"][a]:
                m = np.kron(np.asarray(na, dtype=complex), np.asarray(cb, dtype=complex))
                out.append(_from_leader_order(m, dims, leader))
        return out
    if kind == "sep":
        out = []
        for terms in structure["product_terms"]:
            m = None
            for factors in terms:
                t = np.asarray(factors[0], dtype=complex)
                for f in factors[1:]:
                    t = np.kron(t, np.asarray(f, dtype=complex))
                m = t if m is None else m + t
            out.append(m)
        return out
    return None


def _from_leader_order(m: np.ndarray, dims, leader: int) -> np.ndarray:
    """Reorder an operator built as (leader ⊗ rest) back to the native order."""
    dims = tuple(dims)
    if leader == 0:
        return m
    rest = [i for i in range(len(dims)) if i != leader]
    order = [leader] + rest
    inverse = [order.index(i) for i in range(len(dims))]
    return permute_systems(m, tuple(dims[p] for p in order), inverse)


# ---------------------------------------------------------------------------
# informationally complete local measurements
# ---------------------------------------------------------------------------


def _qubit_ic_effects() -> list[np.ndarray]:
    s = 1 / np.sqrt(2)
    vecs = [
        np.array([1, 0]), np.array([0, 1]),
        np.array([s, s]), np.array([s, -s]),
        np.array([s, 1j * s]), np.array([s, -1j * s]),
    ]
    return [np.outer(v, np.conj(v)) / 3 for v in vecs]


def _prime_mub_effects(d: int) -> list[np.ndarray]:
    """d+1 mutually unbiased bases for odd prime d, each weighted 1/(d+1)."""
    omega = np.exp(2j * np.pi / d)
    bases = [np.eye(d, dtype=complex)]
    for b in range(d):
        cols = []
        for j in range(d):
            v = np.array([omega ** ((b * k * k + j * k) % d) for k in range(d)])
            cols.append(v / np.sqrt(d))
        bases.append(np.array(cols).T)
    effs = []
    for basis in bases:
        for j in range(d):
            v = basis[:, j]
            effs.append(np.outer(v, v.conj()) / (d + 1))
    return effs


def _is_prime(d: int) -> bool:
    return d >= 2 and all(d % k for k in range(2, int(d**0.5) + 1))


def _local_ic_effects(d: int, rng) -> list[np.ndarray]:
    if d == 2:
        effs = _qubit_ic_effects()
    elif _is_prime(d):
        effs = _prime_mub_effects(d)
    else:
        # random bases until the outcome map has full rank d^2
        from .qops import random_unitary

        n_bases = d + 1
        while True:
            effs = []
            for _ in range(n_bases):
                u = random_unitary(d, rng)
                effs += [np.outer(u[:, j], u[:, j].conj()) / n_bases for j in range(d)]
            if _outcome_map_rank(effs) == d * d:
                break
            n_bases += 1
    if _outcome_map_rank(effs) != d * d:
        raise RuntimeError(f"IC construction failed for local dimension {d}")
    return effs


def _outcome_map_rank(effects: Sequence[np.ndarray]) -> int:
    a = np.array([m.reshape(-1) for m in effects])
    return int(np.linalg.matrix_rank(a, tol=1e-10))


def informationally_complete_lo(dims: Sequence[int], seed=0) -> Povm:
    """Tensor product of single-party IC POVMs; injective on operators."""
    dims = tuple(int(d) for d in dims)
    rng = as_rng(seed)
    locals_ = [_local_ic_effects(d, rng) for d in dims]
    effects = []
    for multi in np.ndindex(*[len(loc) for loc in locals_]):
        m = locals_[0][multi[0]]
        for j in range(1, len(dims)):
            m = np.kron(m, locals_[j][multi[j]])
        effects.append(m)
    return Povm(
        tuple(effects), dims, "lo", {"kind": "lo", "locals": locals_}
    )


# ---------------------------------------------------------------------------
# ascent over measurement classes
# ---------------------------------------------------------------------------


def _polar(v: np.ndarray) -> np.ndarray:
    u, _, wh = np.linalg.svd(v, full_matrices=False)
    return u @ wh


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(herm(m))
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def _random_isometry(rows: int, cols: int, rng) -> np.ndarray:
    g = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    return _polar(g)


def _contract_except(gt: np.ndarray, n: int, j: int, factors: dict) -> np.ndarray:
    """Local operator K on party j with Tr(G ⊗N) = Tr(K N_j), factors on others."""
    operands = [gt, list(range(2 * n))]
    for l, f in factors.items():
        operands += [f, [n + l, l]]
    operands += [[j, n + j]]
    return np.einsum(*operands)


class _AllParam:
    """Unrestricted POVM as a stacked isometry V; M_i = A_i† A_i."""

    tag = "all"

    def __init__(self, dims, m, rng, seed_effects=None):
        self.dims = tuple(dims)
        self.D = dim_total(dims)
        self.m = m
        if seed_effects is not None:
            self.m = len(seed_effects)
            self.v = _polar(np.vstack([_psd_sqrt(e) for e in seed_effects]))
        else:
            self.v = _random_isometry(self.m * self.D, self.D, rng)

    def blocks(self):
        return [self.v[i * self.D : (i + 1) * self.D] for i in range(self.m)]

    def effects(self):
        return [herm(a.conj().T @ a) for a in self.blocks()]

    def direction(self, gs):
        return np.vstack([a @ g for a, g in zip(self.blocks(), gs)])

    def stepped(self, eta, direction):
        new = object.__new__(_AllParam)
        new.dims, new.D, new.m = self.dims, self.D, self.m
        new.v = _polar(self.v + eta * direction)
        return new

    def structure(self):
        return None


class _LOParam:
    """Product POVM: one stacked local isometry per party."""

    tag = "lo"

    def __init__(self, dims, budgets, rng, seed_locals=None):
        self.dims = tuple(dims)
        if seed_locals is not None:
            self.vs = [
                _polar(np.vstack([_psd_sqrt(e) for e in loc])) for loc in seed_locals
            ]
            self.budgets = [len(loc) for loc in seed_locals]
        else:
            self.budgets = list(budgets)
            self.vs = [
                _random_isometry(b * d, d, rng) for b, d in zip(self.budgets, dims)
            ]

    def local_effects(self, j):
        d = self.dims[j]
        v = self.vs[j]
        return [
            herm(v[k * d : (k + 1) * d].conj().T @ v[k * d : (k + 1) * d])
            for k in range(self.budgets[j])
        ]

    def effects(self):
        locals_ = [self.local_effects(j) for j in range(len(self.dims))]
        self._locals = locals_
        out = []
        for multi in np.ndindex(*[len(l) for l in locals_]):
            m = locals_[0][multi[0]]
            for j in range(1, len(self.dims)):
                m = np.kron(m, locals_[j][multi[j]])
            out.append(m)
        self._index = list(np.ndindex(*[len(l) for l in locals_]))
        return out

    def direction(self, gs):
        n = len(self.dims)
        locals_ = self._locals
        # accumulate local effect-space gradients
        egrads = [
            [np.zeros((self.dims[j], self.dims[j]), dtype=complex) for _ in loc]
            for j, loc in enumerate(locals_)
        ]
        for g, multi in zip(gs, self._index):
            gt = g.reshape(self.dims + self.dims)
            for j in range(n):
                factors = {
                    l: locals_[l][multi[l]] for l in range(n) if l != j
                }
                egrads[j][multi[j]] += _contract_except(gt, n, j, factors)
        dirs = []
        for j in range(n):
            d = self.dims[j]
            v = self.vs[j]
            rows = [
                v[k * d : (k + 1) * d] @ egrads[j][k] for k in range(self.budgets[j])
            ]
            dirs.append(np.vstack(rows))
        return dirs

    def stepped(self, eta, direction):
        new = object.__new__(_LOParam)
        new.dims, new.budgets = self.dims, list(self.budgets)
        new.vs = [_polar(v + eta * dv) for v, dv in zip(self.vs, direction)]
        return new

    def structure(self):
        return {"kind": "lo", "locals": [self.local_effects(j) for j in range(len(self.dims))]}


class _Locc1Param:
    """One-way two-stage POVM: leader party measures, the rest conditions."""

    tag = "locc1"

    def __init__(self, dims, leader, m_leader, m_cond, rng, seed=None):
        self.dims = tuple(dims)
        self.leader = leader
        self.dl = self.dims[leader]
        self.dr = dim_total([d for i, d in enumerate(self.dims) if i != leader])
        if seed is not None:
            leader_effects, conditional = seed
            self.ml = len(leader_effects)
            self.mc = len(conditional[0])
            self.vl = _polar(np.vstack([_psd_sqrt(e) for e in leader_effects]))
            self.ws = [
                _polar(np.vstack([_psd_sqrt(e) for e in cond])) for cond in conditional
            ]
        else:
            self.ml, self.mc = m_leader, m_cond
            self.vl = _random_isometry(self.ml * self.dl, self.dl, rng)
            self.ws = [
                _random_isometry(self.mc * self.dr, self.dr, rng) for _ in range(self.ml)
            ]

    def stages(self):
        dl, dr = self.dl, self.dr
        leader_effects = [
            herm(self.vl[a * dl : (a + 1) * dl].conj().T @ self.vl[a * dl : (a + 1) * dl])
            for a in range(self.ml)
        ]
        conditional = [
            [
                herm(w[b * dr : (b + 1) * dr].conj().T @ w[b * dr : (b + 1) * dr])
                for b in range(self.mc)
            ]
            for w in self.ws
        ]
        return leader_effects, conditional

    def effects(self):
        leader_effects, conditional = self.stages()
        self._stages = (leader_effects, conditional)
        out = []
        for a in range(self.ml):
            for b in range(self.mc):
                m = np.kron(leader_effects[a], conditional[a][b])
                out.append(_from_leader_order(m, self.dims, self.leader))
        return out

    def direction(self, gs):
        leader_effects, conditional = self._stages
        dl, dr = self.dl, self.dr
        rest = [i for i in range(len(self.dims)) if i != self.leader]
        order = [self.leader] + rest
        odims = tuple(self.dims[p] for p in order)
        grad_l = [np.zeros((dl, dl), dtype=complex) for _ in range(self.ml)]
        grad_c = [
            [np.zeros((dr, dr), dtype=complex) for _ in range(self.mc)]
            for _ in range(self.ml)
        ]
        i = 0
        for a in range(self.ml):
            for b in range(self.mc):
                g = permute_systems(gs[i], self.dims, order)
                gt = g.reshape((dl, dr, dl, dr))
                grad_l[a] += _contract_except(gt, 2, 0, {1: conditional[a][b]})
                grad_c[a][b] += _contract_except(gt, 2, 1, {0: leader_effects[a]})
                i += 1
        dir_l = np.vstack(
            [self.vl[a * dl : (a + 1) * dl] @ grad_l[a] for a in range(self.ml)]
        )
        dir_c = [
            np.vstack(
                [w[b * dr : (b + 1) * dr] @ grad_c[a][b] for b in range(self.mc)]
            )
            for a, w in enumerate(self.ws)
        ]
        return dir_l, dir_c

    def stepped(self, eta, direction):
        dir_l, dir_c = direction
        new = object.__new__(_Locc1Param)
        for attr in ("dims", "leader", "dl", "dr", "ml", "mc"):
            setattr(new, attr, getattr(self, attr))
        new.vl = _polar(self.vl + eta * dir_l)
        new.ws = [_polar(w + eta * dw) for w, dw in zip(self.ws, dir_c)]
        return new

    def structure(self):
        leader_effects, conditional = self.stages()
        return {
            "kind": "locc1",
            "leader": self.leader,
            "leader_effects": leader_effects,
            "conditional": conditional,
        }


def _measured_kl(effects, rho, sigma):
    p = np.einsum("mij,ji->m", np.array(effects), rho).real
    q = np.einsum("mij,ji->m", np.array(effects), sigma).real
    p = np.clip(p, 0.0, None)
    q = np.clip(q, 0.0, None)
    on = p > 1e-14
    if np.any(q[on] <= 1e-15):
        return math.inf, p, q
    val = float(np.sum(p[on] * np.log2(p[on] / q[on])))
    return max(val, 0.0), p, q


def _effect_gradients(p, q, rho, sigma):
    qs = np.clip(q, 1e-15, None)
    ps = np.clip(p, 1e-15, None)
    dfdp = np.log2(ps / qs) + 1 / LN2
    dfdq = -ps / (qs * LN2)
    return [float(a) * rho + float(b) * sigma for a, b in zip(dfdp, dfdq)]


def _ascend(param, rho, sigma, iters, tol=1e-10):
    """Gradient ascent of measured KL with polar retraction and step halving."""
    effects = param.effects()
    fval, p, q = _measured_kl(effects, rho, sigma)
    if math.isinf(fval):
        return param, fval
    eta = 0.05
    stall = 0
    for _ in range(iters):
        gs = _effect_gradients(p, q, rho, sigma)
        direction = param.direction(gs)
        improved = False
        for _ in range(20):
            cand = param.stepped(eta, direction)
            ceffects = cand.effects()
            cval, cp, cq = _measured_kl(ceffects, rho, sigma)
            if math.isinf(cval):
                return cand, cval
            if cval > fval + 1e-14:
                improved = True
                break
            eta *= 0.5
        if not improved:
            break
        gain = cval - fval
        param, fval, p, q = cand, cval, cp, cq
        eta = min(eta * 1.5, 1.0)
        if gain < tol:
            stall += 1
            if stall >= 5:
                break
        else:
            stall = 0
    return param, fval


@dataclass(frozen=True)
class MeasurementClassSpec:
    """Measurement class plus the size of its ascent parametrization."""

    class_tag: str
    outcomes_per_party: int = 4
    ascent_restarts: int = 10
    ascent_iters: int = 500

    def __post_init__(self):
        if self.class_tag not in CLASS_TAGS:
            raise ValueError(f"unknown class tag {self.class_tag!r}")
        if self.outcomes_per_party < 1:
            raise ValueError("outcome budget must be >= 1")


@dataclass
class CertifiedValue:
    """Heuristic estimate with a rigorous certified lower bound."""

    estimate: float
    certified_lower: float
    witness_measurement: Povm | None = field(default=None, repr=False)
    witness_state: np.ndarray | None = field(default=None, repr=False)
    details: dict = field(default_factory=dict, repr=False)


def _seed_params(mspec: MeasurementClassSpec, dims, rng, seed_povm: Povm | None):
    """Fresh parametrizations for one restart, honoring class structure."""
    tag = mspec.class_tag
    b = mspec.outcomes_per_party
    n = len(dims)
    params = []
    if tag == "lo":
        params.append(_LOParam(dims, [b] * n, rng))
    elif tag == "locc1":
        params.append(_Locc1Param(dims, 0, b, b, rng))
    elif tag in ("sep", "ppt"):
        # feasible subset: one-way measurements in both directions; any
        # LOCC1 POVM is separable and its effects are PPT
        params.append(_Locc1Param(dims, 0, b, b, rng))
        if n >= 2:
            params.append(_Locc1Param(dims, n - 1, b, b, rng))
    else:
        params.append(_AllParam(dims, b ** n, rng))
    if seed_povm is not None:
        seeded = _param_from_povm(mspec, dims, seed_povm)
        if seeded is not None:
            params.append(seeded)
    return params


def _param_from_povm(mspec: MeasurementClassSpec, dims, povm: Povm):
    tag = mspec.class_tag
    st = povm.structure or {}
    if tag == "all":
        return _AllParam(dims, len(povm.effects), None, seed_effects=list(povm.effects))
    if tag == "lo" and st.get("kind") == "lo":
        return _LOParam(dims, None, None, seed_locals=st["locals"])
    if tag in ("locc1", "sep", "ppt"):
        if st.get("kind") == "locc1":
            return _Locc1Param(
                dims, st["leader"], None, None, None,
                seed=(st["leader_effects"], st["conditional"]),
            )
        if st.get("kind") == "lo":
            # an LO POVM is a degenerate LOCC1 POVM (conditionals all equal)
            locals_ = st["locals"]
            leader_effects = locals_[0]
            rest = locals_[1:]
            cond = []
            for m in rest[0] if len(rest) == 1 else _product_local(rest):
                cond.append(m)
            conditional = [list(cond) for _ in leader_effects]
            return _Locc1Param(dims, 0, None, None, None, seed=(leader_effects, conditional))
    return None


def _product_local(locals_rest):
    out = []
    for multi in np.ndindex(*[len(l) for l in locals_rest]):
        m = locals_rest[0][multi[0]]
        for j in range(1, len(locals_rest)):
            m = np.kron(m, locals_rest[j][multi[j]])
        out.append(m)
    return out


def _povm_from_param(param, dims, class_tag: str | None = None) -> Povm:
    effects = [herm(m) for m in param.effects()]
    # clip tiny negative eigenvalues from round-off
    cleaned = []
    for m in effects:
        w, v = np.linalg.eigh(m)
        if w.min() < 0:
            m = (v * np.clip(w, 0.0, None)) @ v.conj().T
        cleaned.append(m)
    total = sum(cleaned)
    # restore exact completeness after clipping
    cleaned[-1] = cleaned[-1] + (np.eye(total.shape[0]) - total)
    return Povm(tuple(cleaned), dims, class_tag or param.tag, param.structure())


def random_lo_povm(dims: Sequence[int], outcomes_per_party: int = 2, seed=None) -> Povm:
    """Haar-random product POVM: an independent random POVM on each party."""
    rng = as_rng(seed)
    dims = tuple(int(d) for d in dims)
    param = _LOParam(dims, [outcomes_per_party] * len(dims), rng)
    return _povm_from_param(param, dims)


def tensor_lo_povm(p1: Povm, p2: Povm) -> Povm:
    """Product of two LO POVMs on matching party counts, party by party.

    Party j of the result carries the pair (party j of p1, party j of p2),
    so the result acts on dims (d1_j * d2_j)_j. Used for superadditivity
    checks where X and Y copies of each party are merged.
    """
    if p1.class_tag != "lo" or p2.class_tag != "lo":
        raise ValueError("tensor_lo_povm needs LO-structured inputs")
    l1 = p1.structure["locals"]
    l2 = p2.structure["locals"]
    if len(l1) != len(l2):
        raise ValueError("party counts differ")
    locals_ = [
        [np.kron(a, b) for a in la for b in lb] for la, lb in zip(l1, l2)
    ]
    dims = tuple(d1 * d2 for d1, d2 in zip(p1.dims, p2.dims))
    effects = []
    for multi in np.ndindex(*[len(l) for l in locals_]):
        m = locals_[0][multi[0]]
        for j in range(1, len(dims)):
            m = np.kron(m, locals_[j][multi[j]])
        effects.append(m)
    return Povm(tuple(effects), dims, "lo", {"kind": "lo", "locals": locals_})


def controlled_locc1_povm(components: Sequence[Povm], flag_dim: int) -> Povm:
    """Flag-controlled measurement Σ_i M^(i) ⊗ |i⟩⟨i| as a two-party LOCC1 POVM.

    The flag register (first factor of the leading party) selects which
    component POVM is applied; components must be two-party LOCC1 or LO
    POVMs with the leader on party 0. The result acts on dims
    (flag_dim * d_A, d_B) with the merged flag+A party leading.
    """
    if len(components) > flag_dim:
        raise ValueError("more components than flag levels")
    da, db = components[0].dims
    leader_effects = []
    conditional = []
    mc = 0
    staged = []
    for i, comp in enumerate(components):
        st = comp.structure or {}
        if st.get("kind") == "lo":
            la, lb = st["locals"]
            pairs = [(a, list(lb)) for a in la]
        elif st.get("kind") == "locc1" and st.get("leader") == 0:
            pairs = list(zip(st["leader_effects"], st["conditional"]))
        else:
            raise ValueError("components must be LO or leader-0 LOCC1 POVMs")
        flag = np.zeros((flag_dim, flag_dim), dtype=complex)
        flag[i, i] = 1.0
        for a, cond in pairs:
            leader_effects.append(np.kron(flag, a))
            staged.append(list(cond))
            mc = max(mc, len(cond))
    # unused flag levels terminate in a single extra leader outcome
    rest = np.eye(flag_dim * da) - sum(leader_effects)
    if np.linalg.norm(rest) > 1e-12:
        leader_effects.append(herm(rest))
        staged.append([np.eye(db, dtype=complex)])
    zero = np.zeros((db, db), dtype=complex)
    conditional = [cond + [zero] * (mc - len(cond)) for cond in staged]
    dims = (flag_dim * da, db)
    effects = []
    for a, cond in zip(leader_effects, conditional):
        for c in cond:
            effects.append(np.kron(a, c))
    return Povm(
        tuple(effects),
        dims,
        "locc1",
        {
            "kind": "locc1",
            "leader": 0,
            "leader_effects": leader_effects,
            "conditional": conditional,
        },
    )


def restricted_relative_entropy(
    rho,
    sigma,
    mspec: MeasurementClassSpec,
    config: SolverConfig | None = None,
    seed=None,
    seed_povm: Povm | None = None,
) -> CertifiedValue:
    """sup over the class of the measured relative entropy, by ascent.

    The estimate is always a valid lower bound on the class supremum since
    every iterate is a feasible measurement of the class.
    """
    rho_m = rho.mat if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=complex)
    sig_m = sigma.mat if isinstance(sigma, DensityOperator) else np.asarray(sigma, dtype=complex)
    dims = rho.dims if isinstance(rho, DensityOperator) else None
    if dims is None:
        raise ValueError("rho must be a DensityOperator (dims required)")
    rng = as_rng(seed)
    best_val = -math.inf
    best_param = None
    for r in range(max(1, mspec.ascent_restarts)):
        for param in _seed_params(mspec, dims, rng, seed_povm if r == 0 else None):
            param, val = _ascend(param, rho_m, sig_m, mspec.ascent_iters)
            if val > best_val:
                best_val, best_param = val, param
    witness = _povm_from_param(best_param, dims, mspec.class_tag)
    # the witness must reproduce the estimate exactly
    est = measured_relative_entropy(list(witness.effects), rho_m, sig_m)
    return CertifiedValue(
        estimate=est,
        certified_lower=est,
        witness_measurement=witness,
        witness_state=sig_m,
    )


def pinsker_lower_bound(rho, sigma, povm: Povm) -> float:
    """(1/2ln2) ||M(ρ)−M(σ)||₁² ≤ measured relative entropy."""
    p = povm.probabilities(rho)
    q = povm.probabilities(sigma)
    tv = float(np.abs(p - q).sum())
    return tv * tv / (2 * LN2)


def _cert_score(res: OptimizationResult, pspec: ReferenceSetSpec) -> float:
    """Certified lower value carried by a min-KL solve, floored at zero."""
    if pspec.kind == "sep":
        return max(0.0, res.dual_bound)
    # PGD has no dual certificate; use the converged value minus its last
    # observed decrease as a conservative proxy
    slack = abs(res.trace[-1] - res.trace[-2]) if len(res.trace) > 1 else 0.0
    return max(0.0, res.value - 10 * slack - 1e-6)


def restricted_ree(
    rho,
    pspec: ReferenceSetSpec,
    mspec: MeasurementClassSpec,
    config: SolverConfig | None = None,
    seed=None,
    rounds: int = 30,
    seed_povm: Povm | None = None,
    certify_config: SolverConfig | None = None,
) -> CertifiedValue:
    """inf_{σ∈P} sup_{M∈class} KL(M(ρ)||M(σ)) with a certified lower bound.

    Alternates inner measurement ascent with outer convex descent over σ.
    The certificate re-solves inf_σ KL at the final fixed measurement to
    convergence; its Frank-Wolfe dual bound is a true lower bound on the
    restricted measure.
    """
    config = config or SolverConfig()
    rng = as_rng(seed)
    if not isinstance(rho, DensityOperator):
        raise ValueError("rho must be a DensityOperator")
    dims = rho.dims
    D = rho.dim

    # starting measurement: informationally complete product POVM (contained
    # in every class), optionally replaced by a caller-provided seed
    current = seed_povm or informationally_complete_lo(dims, seed=rng)
    initial_povm = current
    sigma = np.eye(D) / D
    light = config.light()

    best_round_val = math.inf
    best_povm = current
    best_sigma = sigma
    prev_val = math.inf
    r = -1
    # a uniform disjoint-union mixture of round measurements: the measured KL
    # is linear under such mixing, so alternating best responses against the
    # running mixture is fictitious play and its certificate converges to the
    # minimax value instead of oscillating. Coin-controlled mixing needs the
    # coin to be announced, which plain LO cannot do, so LO keeps the
    # single-measurement dynamics.
    allow_mix = mspec.class_tag != "lo"
    collected = [list(current.effects)]
    # rounds=0 skips the alternation and certifies the seed measurement only
    for r in range(max(0, rounds)):
        # outer: descend over σ ∈ P at the running measurement (mixture)
        if allow_mix:
            k = len(collected)
            played = [m / k for eff in collected for m in eff]
        else:
            played = list(current.effects)
        out = min_kl_over_reference_set(played, rho, pspec, light, seed=rng)
        sigma = out.sigma
        # inner: ascend over the class at the new σ
        inner = restricted_relative_entropy(
            rho,
            DensityOperator(herm(_mix_floor(sigma, D)), dims),
            mspec,
            seed=rng,
            seed_povm=current,
        )
        current = inner.witness_measurement
        collected.append(list(current.effects))
        val = inner.estimate
        # report the final (converged) round; a single under-ascended round
        # would poison a min-over-rounds estimate
        best_round_val = val
        best_povm = current
        best_sigma = sigma
        if abs(prev_val - val) < 1e-5:
            break
        prev_val = val

    # certify at the round mixture and the final measurement, with the IC
    # product POVM as a fallback candidate (its statistics always separate
    # ρ from P)
    ccfg = certify_config or config
    candidates = [(list(best_povm.effects), best_povm)]
    if allow_mix and len(collected) > 1:
        k = len(collected)
        candidates.insert(0, ([m / k for eff in collected for m in eff], None))
    if best_povm is not initial_povm:
        candidates.append((list(initial_povm.effects), initial_povm))
    cert = None
    cert_povm = best_povm
    for effects, cand in candidates:
        res = min_kl_over_reference_set(effects, rho, pspec, ccfg, seed=rng)
        if cert is None or _cert_score(res, pspec) > _cert_score(cert, pspec):
            cert, cert_povm = res, cand
    certified = _cert_score(cert, pspec)
    if math.isinf(best_round_val):
        best_sigma = cert.sigma
        estimate = cert.value
    else:
        estimate = max(best_round_val, cert.value)
    certified = min(certified, estimate)
    return CertifiedValue(
        estimate=float(estimate),
        certified_lower=float(certified),
        witness_measurement=best_povm,
        witness_state=best_sigma,
        details={
            "certification_value": cert.value,
            "certification_gap": cert.final_gap,
            "certification_dual": cert.dual_bound,
            "certificate_measurement": cert_povm,
            "certificate_kind": "round-mixture" if cert_povm is None else "single",
            "rounds": r + 1,
        },
    )


def _mix_floor(sigma: np.ndarray, D: int, eps: float = 1e-9) -> np.ndarray:
    """Tiny maximally-mixed admixture so σ passes density-operator validation."""
    s = herm(sigma)
    s = (1 - eps) * s / np.trace(s).real + eps * np.eye(D) / D
    w, v = np.linalg.eigh(s)
    if w.min() < 0:
        s = (v * np.clip(w, 0.0, None)) @ v.conj().T
        s = s / np.trace(s).real
    return s


def matthews_faithfulness_bound(
    rho,
    pspec: ReferenceSetSpec,
    config: SolverConfig | None = None,
    seed=None,
) -> float:
    """Explicit lower bound on the SEP-measured restricted measure.

    Returns (1 / (2^{n−1} D ln2)) · dist² with n the number of groups of the
    partition. The solver's trace-norm distance is an upper bound (it
    evaluates ‖ρ−σ*‖₁ at a feasible σ*), which squared would overstate the
    bound, so for SEP sets the distance is replaced by the one-sided witness
    value 2(Tr Pρ − max_{σ∈P} Tr Pσ) with P the positive eigenprojector of
    ρ−σ* and the product-overlap maximum from the separability oracle.
    """
    n = len(pspec.groups)
    D = pspec.dim
    prefactor = 1.0 / (2 ** (n - 1) * D * LN2)
    res = trace_distance_to_set(rho, pspec, config, seed=seed)
    dist = res.value
    rho_m = rho.mat if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=complex)
    if pspec.kind == "sep":
        w, v = np.linalg.eigh(herm(rho_m - res.sigma))
        pos = v[:, w > 0]
        proj = pos @ pos.conj().T
        _, overlap = sep_lmo(
            -proj, pspec.group_dims, as_rng(seed), restarts=24, sweeps=120
        )
        witness_dist = 2 * (float(np.trace(proj @ rho_m).real) + overlap)
        dist = min(dist, max(0.0, witness_dist))
    if dist < 1e-7:
        return 0.0
    return prefactor * dist * dist
