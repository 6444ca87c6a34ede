"""Reference sets of states (separable, PPT) and convex optimization over them.

The central quantity is E_R^P(ρ) = inf_{σ∈P} S(ρ||σ). For P the separable
states the solver is Frank-Wolfe with an alternating-eigenvector linear
minimization oracle over product pure states; for P the PPT states it is
projected gradient descent with Dykstra's alternating projections onto the
intersection of the PSD cone, the partial-transpose cones, and the unit
trace hyperplane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .entropy import quantum_relative_entropy, von_neumann_entropy
from .qops import (
    DensityOperator,
    ProductDecomposition,
    as_rng,
    dim_total,
    herm,
    partial_trace,
    partial_transpose,
    trace_norm,
)

LN2 = math.log(2.0)

__all__ = [
    "MeasuredKLObjective",
    "OptimizationResult",
    "ReferenceSetSpec",
    "RelativeEntropyObjective",
    "SmoothedTraceDistObjective",
    "SolverConfig",
    "is_ppt_all_cuts",
    "min_kl_over_reference_set",
    "minimize_over_reference_set",
    "multipartite_mutual_information",
    "project_ppt",
    "relative_entropy_of_entanglement",
    "sep_lmo",
    "trace_distance_to_set",
]


@dataclass(frozen=True)
class ReferenceSetSpec:
    """Choice of reference set P plus the partition it refers to.

    ``groups`` collects parties into the effective local systems of the
    partition: SEP means mixtures of states that are product across the
    groups, PPT means positive partial transpose across every bipartition
    of the groups. Groups must be contiguous runs of parties (reorder the
    state first if needed).
    """

    kind: str
    dims: tuple[int, ...]
    groups: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self):
        if self.kind not in ("sep", "ppt"):
            raise ValueError(f"unknown reference set kind {self.kind!r}")
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        groups = self.groups or tuple((i,) for i in range(len(dims)))
        groups = tuple(tuple(g) for g in groups)
        flat = [p for g in groups for p in g]
        if flat != list(range(len(dims))):
            raise ValueError("groups must partition the parties in order")
        object.__setattr__(self, "groups", groups)
        if len(groups) < 2:
            raise ValueError("reference sets need at least two groups")

    @property
    def group_dims(self) -> tuple[int, ...]:
        return tuple(dim_total([self.dims[p] for p in g]) for g in self.groups)

    @property
    def dim(self) -> int:
        return dim_total(self.dims)

    def cuts(self) -> list[tuple[int, ...]]:
        """All nontrivial bipartitions of the groups (as group-index subsets)."""
        n = len(self.groups)
        out = []
        for mask in range(1, 2 ** (n - 1)):
            out.append(tuple(i for i in range(n) if mask >> i & 1))
        return out


@dataclass
class SolverConfig:
    """Tolerances, iteration caps, and restart counts for the solvers."""

    fw_gap_tol: float = 1e-5
    fw_max_iters: int = 2000
    fw_stall_tol: float = 1e-9
    fw_stall_iters: int = 120
    dual_check_every: int = 200
    lmo_restarts: int = 20
    lmo_sweeps: int = 200
    interior_floor: float = 1e-6
    pgd_max_iters: int = 600
    pgd_value_tol: float = 1e-10
    dykstra_tol: float = 1e-9
    dykstra_max_iters: int = 500
    line_search_tol: float = 1e-7

    def light(self) -> "SolverConfig":
        """Cheaper settings for inner loops and large test batches."""
        return replace(
            self,
            fw_gap_tol=max(self.fw_gap_tol, 1e-4),
            fw_max_iters=min(self.fw_max_iters, 400),
            lmo_restarts=min(self.lmo_restarts, 8),
            lmo_sweeps=min(self.lmo_sweeps, 60),
            pgd_max_iters=min(self.pgd_max_iters, 300),
        )


@dataclass
class OptimizationResult:
    """Outcome of a convex optimization over a reference set."""

    value: float
    sigma: np.ndarray = field(repr=False)
    bound_direction: str = "upper"
    witness: ProductDecomposition | None = field(default=None, repr=False)
    iterations: int = 0
    final_gap: float = math.inf
    dual_bound: float = -math.inf
    converged: bool = False
    trace: list = field(default_factory=list, repr=False)


# ---------------------------------------------------------------------------
# membership and projections
# ---------------------------------------------------------------------------


def is_ppt_all_cuts(state, dims=None, tol: float = 1e-10):
    """PPT check across every bipartition of the parties.

    Returns (bool, {cut: min eigenvalue}) where each cut is the tuple of
    parties that are transposed.
    """
    if isinstance(state, DensityOperator):
        mat, dims = state.mat, state.dims
    else:
        mat = np.asarray(state, dtype=complex)
        if dims is None:
            raise ValueError("dims required for raw arrays")
    n = len(dims)
    if n < 2:
        raise ValueError("need at least two parties")
    min_eigs = {}
    ok = True
    for mask in range(1, 2 ** (n - 1)):
        cut = tuple(i for i in range(n) if mask >> i & 1)
        w = np.linalg.eigvalsh(herm(partial_transpose(mat, dims, cut)))
        min_eigs[cut] = float(w.min())
        ok = ok and w.min() >= -tol
    return ok, min_eigs


def _project_psd(x: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(herm(x))
    w = np.clip(w, 0.0, None)
    return (v * w) @ v.conj().T


def _project_simplex_spectrum(x: np.ndarray) -> np.ndarray:
    """Projection onto {PSD, trace one} = simplex projection of the spectrum."""
    w, v = np.linalg.eigh(herm(x))
    u = np.sort(w)[::-1]
    css = np.cumsum(u)
    ks = np.arange(1, len(u) + 1)
    cond = u - (css - 1.0) / ks > 0
    k = ks[cond][-1]
    tau = (css[k - 1] - 1.0) / k
    w = np.clip(w - tau, 0.0, None)
    return (v * w) @ v.conj().T


def project_ppt(x: np.ndarray, spec: ReferenceSetSpec, config: SolverConfig | None = None):
    """Euclidean (Frobenius) projection onto the PPT states via Dykstra.

    Alternates between {PSD ∩ trace 1} and the partial-transpose cones of
    every bipartition of the groups, with Dykstra correction terms.
    """
    config = config or SolverConfig()
    gdims = spec.group_dims
    cuts = spec.cuts()

    def proj_cut(y, cut):
        pt = partial_transpose(y, gdims, cut)
        return partial_transpose(_project_psd(pt), gdims, cut)

    projections: list[Callable] = [_project_simplex_spectrum]
    projections += [lambda y, c=cut: proj_cut(y, c) for cut in cuts]

    z = herm(np.asarray(x, dtype=complex))
    errs = [np.zeros_like(z) for _ in projections]
    for _ in range(config.dykstra_max_iters):
        z_prev = z
        for i, proj in enumerate(projections):
            y = proj(z + errs[i])
            errs[i] = z + errs[i] - y
            z = y
        if np.max(np.abs(z - z_prev)) < config.dykstra_tol:
            break
    # final cleanup keeps PSD/trace exact; PT feasibility holds within tol
    z = _project_simplex_spectrum(z)
    return herm(z)


# ---------------------------------------------------------------------------
# linear minimization oracle over product pure states
# ---------------------------------------------------------------------------


def _product_vector(vecs: Sequence[np.ndarray]) -> np.ndarray:
    out = vecs[0]
    for v in vecs[1:]:
        out = np.kron(out, v)
    return out


def sep_lmo(
    g: np.ndarray,
    group_dims: Sequence[int],
    rng,
    restarts: int = 20,
    sweeps: int = 200,
    tol: float = 1e-9,
    seeds: Sequence[Sequence[np.ndarray]] | None = None,
):
    """Minimize ⟨ψ_1 ⊗ … ⊗ ψ_n| g |ψ_1 ⊗ … ⊗ ψ_n⟩ over product pure states.

    Alternating smallest-eigenvector sweeps from random restarts, evaluated
    in a single batch. One restart is seeded at the product basis state with
    the smallest diagonal entry so diagonal inputs are solved exactly;
    callers may inject further warm starts via ``seeds``.
    Returns (local vectors of the best restart, value).
    """
    rng = as_rng(rng)
    gdims = tuple(int(d) for d in group_dims)
    n = len(gdims)
    D = dim_total(gdims)
    gt = np.asarray(g, dtype=complex).reshape(gdims + gdims)

    seeds = list(seeds or [])
    R = max(2, restarts) + len(seeds)
    psis = []
    for d in gdims:
        v = rng.standard_normal((R, d)) + 1j * rng.standard_normal((R, d))
        psis.append(v / np.linalg.norm(v, axis=1, keepdims=True))
    # deterministic seed: smallest diagonal product basis entry
    diag_idx = np.unravel_index(int(np.argmin(np.diag(g).real)), gdims)
    for j, d in enumerate(gdims):
        e = np.zeros(d, dtype=complex)
        e[diag_idx[j]] = 1.0
        psis[j][0] = e
    for s, vecs in enumerate(seeds):
        for j in range(n):
            v = np.asarray(vecs[j], dtype=complex)
            psis[j][R - 1 - s] = v / np.linalg.norm(v)

    in_ax = list(range(n))
    out_ax = list(range(n, 2 * n))

    def local_field(j):
        # H[r, a, b] = <other ψ's| g |other ψ's> as an operator on party j
        operands = [gt, in_ax + out_ax]
        for k in range(n):
            if k == j:
                continue
            operands += [psis[k].conj(), [2 * n, k]]
            operands += [psis[k], [2 * n, n + k]]
        operands += [[2 * n, j, n + j]]
        return np.einsum(*operands)

    best_val = math.inf
    for sweep in range(max(1, sweeps)):
        for j in range(n):
            H = local_field(j)
            w, v = np.linalg.eigh(0.5 * (H + np.conj(np.transpose(H, (0, 2, 1)))))
            psis[j] = v[:, :, 0]
            vals = w[:, 0]
        new_best = float(vals.min())
        improvement = best_val - new_best
        best_val = min(best_val, new_best)
        if sweep >= 2 and improvement < max(tol, 1e-9 * (1.0 + abs(new_best))):
            break
    best = int(np.argmin(vals))
    return [psis[j][best].copy() for j in range(n)], float(vals[best])


# ---------------------------------------------------------------------------
# objectives
# ---------------------------------------------------------------------------


class RelativeEntropyObjective:
    """f(σ) = S(ρ||σ) with Daleckii-Krein gradient −(1/ln2) U (K ∘ U†ρU) U†."""

    def __init__(self, rho: np.ndarray):
        self.rho = herm(np.asarray(rho, dtype=complex))
        self._entropy = von_neumann_entropy(self.rho)

    def value(self, sigma: np.ndarray) -> float:
        """Fast path: eigh-based evaluation, huge-but-finite on support leaks.

        Interior iterates never hit the kernel case; final reported values
        are recomputed with the rigorous support-checked routine.
        """
        w, v = np.linalg.eigh(herm(sigma))
        d = np.einsum("ij,jk,ki->i", v.conj().T, self.rho, v).real
        w = np.clip(w, 1e-300, None)
        return float(-self._entropy - np.sum(d * np.log2(w)))

    def exact_value(self, sigma: np.ndarray) -> float:
        return quantum_relative_entropy(self.rho, sigma)

    def grad(self, sigma: np.ndarray) -> np.ndarray:
        w, v = np.linalg.eigh(herm(sigma))
        w = np.clip(w, 1e-300, None)
        logw = np.log(w)
        denom = w[:, None] - w[None, :]
        num = logw[:, None] - logw[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            k = np.where(np.abs(denom) > 1e-14, num / denom, 0.0)
        k[np.abs(denom) <= 1e-14] = 0.0
        k += np.diag(1.0 / w) - np.diag(np.diag(k))
        rr = v.conj().T @ self.rho @ v
        return herm(-(v @ (k * rr) @ v.conj().T) / LN2)


class MeasuredKLObjective:
    """f(σ) = Σ_i p_i log2(p_i / Tr(M_i σ)) at a fixed measurement and ρ-distribution."""

    def __init__(self, effects: Sequence[np.ndarray], p: np.ndarray):
        self.effects = np.asarray(effects, dtype=complex)
        self.p = np.asarray(p, dtype=float)
        self._on = self.p > 1e-14
        self._plogp = float(np.sum(self.p[self._on] * np.log2(self.p[self._on])))

    def _q(self, sigma: np.ndarray) -> np.ndarray:
        return np.einsum("mij,ji->m", self.effects, sigma).real

    def value(self, sigma: np.ndarray) -> float:
        q = self._q(sigma)
        if np.any(q[self._on] <= 0.0):
            return math.inf
        return self._plogp - float(np.sum(self.p[self._on] * np.log2(q[self._on])))

    def grad(self, sigma: np.ndarray) -> np.ndarray:
        q = self._q(sigma)
        q = np.clip(q, 1e-300, None)
        coeff = np.where(self._on, self.p / q, 0.0)
        return herm(-np.einsum("m,mij->ij", coeff, self.effects) / LN2)


class SmoothedTraceDistObjective:
    """Smoothed trace norm f(σ) = Tr sqrt((ρ−σ)² + μ²) used for distance-to-set."""

    def __init__(self, rho: np.ndarray, mu: float = 1e-4):
        self.rho = herm(np.asarray(rho, dtype=complex))
        self.mu = float(mu)

    def value(self, sigma: np.ndarray) -> float:
        w = np.linalg.eigvalsh(herm(self.rho - sigma))
        return float(np.sum(np.sqrt(w * w + self.mu * self.mu)))

    def grad(self, sigma: np.ndarray) -> np.ndarray:
        w, v = np.linalg.eigh(herm(self.rho - sigma))
        d = w / np.sqrt(w * w + self.mu * self.mu)
        return herm(-(v * d) @ v.conj().T)

    def true_value(self, sigma: np.ndarray) -> float:
        return trace_norm(self.rho - sigma)


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------


def _identity_witness(spec: ReferenceSetSpec) -> tuple[list[float], list[tuple]]:
    gdims = spec.group_dims
    weights, comps = [], []
    D = spec.dim
    for idx in np.ndindex(*gdims):
        vecs = []
        for j, d in enumerate(gdims):
            e = np.zeros(d, dtype=complex)
            e[idx[j]] = 1.0
            vecs.append(e)
        weights.append(1.0 / D)
        comps.append(tuple(vecs))
    return weights, comps


def _frank_wolfe_sep(obj, spec: ReferenceSetSpec, config: SolverConfig, rng, sigma0=None):
    """Pairwise Frank-Wolfe over the separable set.

    Iterates are kept as an explicit active set of product-state atoms, so
    every iterate carries its own separability witness. Pairwise steps move
    weight from the worst active atom to the LMO atom, which converges far
    faster than vanilla FW near low-rank optima.
    """
    rng = as_rng(rng)
    D = spec.dim
    gdims = spec.group_dims
    eye = np.eye(D)
    eps = config.interior_floor

    if sigma0 is None:
        weights, comps = _identity_witness(spec)
    else:
        weights, comps = list(sigma0[0]), list(sigma0[1])
    w = np.array(weights, dtype=float)
    vecs_full = np.array([_product_vector(c) for c in comps])  # (m, D)
    atoms = np.einsum("ai,aj->aij", vecs_full, vecs_full.conj())
    sigma = herm(np.einsum("a,aij->ij", w, atoms))

    best_dual = -math.inf
    trace = []
    gap = math.inf
    fval = obj.value(sigma)
    best_fval = fval
    last_improve = 0
    lmo_seeds: list = []
    it = 0
    for it in range(1, config.fw_max_iters + 1):
        if it - last_improve > config.fw_stall_iters:
            break
        floored = (1 - eps) * sigma + eps * eye / D
        g = obj.grad(floored)
        # cheap warm-started LMO inside the loop; the honest gap is
        # recomputed with full restarts and sweeps after termination
        vecs, _ = sep_lmo(
            g,
            gdims,
            rng,
            restarts=min(config.lmo_restarts, 8),
            sweeps=min(config.lmo_sweeps, 25),
            tol=1e-8,
            seeds=lmo_seeds,
        )
        lmo_seeds = [vecs]
        pv = _product_vector(vecs)
        omega = np.outer(pv, pv.conj())
        fw_lin = float(np.einsum("ij,ji->", g, omega).real)
        gap = float(np.einsum("ij,ji->", g, sigma).real) - fw_lin
        trace.append(fval)
        if it % config.dual_check_every == 0:
            pvecs, _ = sep_lmo(
                g, gdims, rng,
                restarts=config.lmo_restarts,
                sweeps=config.lmo_sweeps,
                tol=1e-12,
                seeds=[vecs],
            )
            ppv = _product_vector(pvecs)
            pgap = float(
                np.einsum("ij,ji->", g, sigma - np.outer(ppv, ppv.conj())).real
            )
            best_dual = max(best_dual, fval - pgap)
        if gap <= config.fw_gap_tol:
            break

        # merge the LMO atom with an existing one when they coincide
        overlaps = np.abs(vecs_full @ pv.conj()) ** 2
        hit = int(np.argmax(overlaps)) if len(overlaps) else -1
        if hit >= 0 and overlaps[hit] > 1.0 - 1e-12:
            fw_idx = hit
        else:
            w = np.append(w, 0.0)
            comps.append(tuple(vecs))
            vecs_full = np.vstack([vecs_full, pv[None, :]])
            atoms = np.concatenate([atoms, omega[None, :, :]], axis=0)
            fw_idx = len(w) - 1

        lin_all = np.einsum("aij,ji->a", atoms, g).real
        active = w > 1e-15
        away_idx = int(np.argmax(np.where(active, lin_all, -np.inf)))
        gamma_max = float(w[away_idx])
        direction = atoms[fw_idx] - atoms[away_idx]
        pairwise = away_idx != fw_idx and gamma_max > 1e-14

        if pairwise:
            def phi(gamma):
                return obj.value(sigma + gamma * direction)
            hi = gamma_max
        else:
            def phi(gamma):
                return obj.value((1 - gamma) * sigma + gamma * atoms[fw_idx])
            hi = 1.0

        res = minimize_scalar(
            phi, bounds=(0.0, hi), method="bounded",
            options={"xatol": max(config.line_search_tol, 1e-4 * hi)},
        )
        gamma = float(res.x)
        new_val = float(res.fun)
        if phi(hi) <= new_val:
            gamma, new_val = hi, phi(hi)
        if not np.isfinite(new_val) or new_val > fval + 1e-14:
            break
        if pairwise:
            w[fw_idx] += gamma
            w[away_idx] -= gamma
            sigma = herm(sigma + gamma * direction)
        else:
            w = (1 - gamma) * w
            w[fw_idx] += gamma
            sigma = herm((1 - gamma) * sigma + gamma * atoms[fw_idx])
        fval = new_val
        if best_fval - fval > config.fw_stall_tol:
            best_fval = fval
            last_improve = it
        if it % 50 == 0:
            sigma = herm(np.einsum("a,aij->ij", w, atoms))
            fval = obj.value(sigma)

    sigma = herm(np.einsum("a,aij->ij", w, atoms))
    # honest final gap and dual bound from a full-precision LMO
    g = obj.grad((1 - eps) * sigma + eps * eye / D)
    vecs, _ = sep_lmo(
        g,
        gdims,
        rng,
        restarts=config.lmo_restarts,
        sweeps=config.lmo_sweeps,
        tol=1e-12,
        seeds=lmo_seeds,
    )
    pv = _product_vector(vecs)
    omega = np.outer(pv, pv.conj())
    gap = float(np.einsum("ij,ji->", g, sigma - omega).real)
    fval = obj.value(sigma)
    best_dual = max(best_dual, fval - gap)
    keep = np.flatnonzero(w > 1e-15)
    total = float(w[keep].sum())
    witness = ProductDecomposition(
        tuple(float(w[i]) / total for i in keep), tuple(comps[i] for i in keep)
    )
    fval = obj.exact_value(sigma) if hasattr(obj, "exact_value") else obj.value(sigma)
    return OptimizationResult(
        value=fval,
        sigma=sigma,
        bound_direction="upper",
        witness=witness,
        iterations=it,
        final_gap=gap,
        dual_bound=best_dual,
        converged=gap <= config.fw_gap_tol,
        trace=trace,
    )


def _pgd_ppt(obj, spec: ReferenceSetSpec, config: SolverConfig, sigma0=None):
    D = spec.dim
    eye = np.eye(D)
    eps = config.interior_floor
    sigma = eye / D if sigma0 is None else herm(sigma0)
    fval = obj.value(sigma)
    trace = [fval]
    step = 0.5
    it = 0
    stall = 0
    for it in range(1, config.pgd_max_iters + 1):
        floored = (1 - eps) * sigma + eps * eye / D
        g = obj.grad(floored)
        improved = False
        t = step
        for _ in range(25):
            cand = project_ppt(sigma - t * g, spec, config)
            cval = obj.value(cand)
            if np.isfinite(cval) and cval < fval - 1e-14:
                improved = True
                break
            t *= 0.5
        if not improved:
            break
        # mild step growth keeps progress once the region is safe
        step = min(t * 2.0, 4.0)
        delta = fval - cval
        sigma, fval = cand, cval
        trace.append(fval)
        if delta < config.pgd_value_tol:
            stall += 1
            if stall >= 3:
                break
        else:
            stall = 0
    return OptimizationResult(
        value=fval,
        sigma=sigma,
        bound_direction="upper",
        witness=None,
        iterations=it,
        final_gap=math.nan,
        dual_bound=-math.inf,
        converged=True,
        trace=trace,
    )


def minimize_over_reference_set(
    obj, spec: ReferenceSetSpec, config: SolverConfig | None = None, seed=None, sigma0=None
) -> OptimizationResult:
    """Minimize a smooth convex objective over the reference set."""
    config = config or SolverConfig()
    if spec.kind == "sep":
        # sigma0, when given, is a (weights, local-vector tuples) atom list
        return _frank_wolfe_sep(obj, spec, config, as_rng(seed), sigma0=sigma0)
    return _pgd_ppt(obj, spec, config, sigma0=sigma0)


def relative_entropy_of_entanglement(
    state, spec: ReferenceSetSpec, config: SolverConfig | None = None, seed=None
) -> OptimizationResult:
    """E_R^P(ρ) = inf_{σ∈P} S(ρ||σ), reported as an upper bound at a feasible σ*."""
    mat = state.mat if isinstance(state, DensityOperator) else np.asarray(state, dtype=complex)
    if mat.shape[0] != spec.dim:
        raise ValueError("state dimension does not match reference set spec")
    obj = RelativeEntropyObjective(mat)
    return minimize_over_reference_set(obj, spec, config, seed)


def min_kl_over_reference_set(
    effects: Sequence[np.ndarray],
    state,
    spec: ReferenceSetSpec,
    config: SolverConfig | None = None,
    seed=None,
) -> OptimizationResult:
    """inf_{σ∈P} of the outcome-distribution KL at a fixed measurement.

    For the separable set the result carries a Frank-Wolfe dual bound
    (``dual_bound``), giving a certified lower value on the infimum.
    """
    from .entropy import apply_measurement

    p = apply_measurement(list(effects), state)
    obj = MeasuredKLObjective(effects, p)
    return minimize_over_reference_set(obj, spec, config, seed)


def trace_distance_to_set(
    state, spec: ReferenceSetSpec, config: SolverConfig | None = None, seed=None, mu: float = 1e-4
) -> OptimizationResult:
    """Approximate inf_{σ∈P} ||ρ−σ||₁ (trace norm, not halved).

    Minimizes a smoothed trace norm over P and reports the true trace norm
    at the optimizer, an upper bound on the distance.
    """
    mat = state.mat if isinstance(state, DensityOperator) else np.asarray(state, dtype=complex)
    obj = SmoothedTraceDistObjective(mat, mu=mu)
    res = minimize_over_reference_set(obj, spec, config, seed)
    res.value = obj.true_value(res.sigma)
    return res


def multipartite_mutual_information(state: DensityOperator) -> float:
    """I(A_1:…:A_n) = S(ρ || ρ_{A_1} ⊗ … ⊗ ρ_{A_n}) = Σ S(ρ_j) − S(ρ)."""
    if state.n_parties < 2:
        raise ValueError("need at least two parties")
    total = -von_neumann_entropy(state.mat)
    for j in range(state.n_parties):
        total += von_neumann_entropy(partial_trace(state.mat, state.dims, [j]))
    return max(total, 0.0)
