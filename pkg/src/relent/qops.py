"""Operator algebra on multipartite Hilbert spaces.

Conventions used throughout the package:

- Operators are dense complex ``numpy`` arrays of shape (D, D) with
  D = d_1 * d_2 * ... * d_n the product of the local dimensions.
- Subsystems are ordered row-major (Kronecker convention): party 0 is the
  slowest index, so ``tensor_product(a, b)`` is ``np.kron(a, b)``.
- All logarithms are base 2, so entropies are measured in bits/ebits.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

HERMITICITY_TOL = 1e-10
PSD_EIG_TOL = 1e-10
TRACE_TOL = 1e-10
SUPPORT_CUTOFF = 1e-9

__all__ = [
    "DensityOperator",
    "as_rng",
    "dagger",
    "dim_total",
    "embed_operator",
    "ginibre_state",
    "herm",
    "is_hermitian",
    "is_psd",
    "matrix_log_on_support",
    "partial_trace",
    "partial_transpose",
    "permute_systems",
    "projector",
    "random_product",
    "random_pure",
    "random_separable",
    "random_state",
    "random_unitary",
    "spectral_decompose",
    "tensor_product",
    "trace_norm",
]


def as_rng(seed) -> np.random.Generator:
    """Coerce an int seed, None, or a Generator into a numpy Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def dim_total(dims: Sequence[int]) -> int:
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise ValueError(f"invalid dimension vector {dims}")
    return int(np.prod(dims))


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def herm(a: np.ndarray) -> np.ndarray:
    """Symmetrize (A + A†)/2 to suppress round-off drift before spectral calls."""
    return 0.5 * (a + a.conj().T)


def is_hermitian(a: np.ndarray, tol: float = HERMITICITY_TOL) -> bool:
    return bool(np.max(np.abs(a - a.conj().T)) <= tol)


def is_psd(a: np.ndarray, tol: float = PSD_EIG_TOL) -> bool:
    if not is_hermitian(a, max(tol, HERMITICITY_TOL)):
        return False
    return bool(np.linalg.eigvalsh(herm(a)).min() >= -tol)


def tensor_product(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of one or more operators, party 0 slowest."""
    out = np.asarray(ops[0], dtype=complex)
    for op in ops[1:]:
        out = np.kron(out, np.asarray(op, dtype=complex))
    return out


def projector(vec: np.ndarray) -> np.ndarray:
    v = np.asarray(vec, dtype=complex).reshape(-1)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def _as_tensor(op: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    dims = tuple(dims)
    D = dim_total(dims)
    if op.shape != (D, D):
        raise ValueError(f"operator shape {op.shape} does not match dims {dims}")
    return op.reshape(dims + dims)


def permute_systems(op: np.ndarray, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder the subsystems of ``op`` so that new party k is old party perm[k]."""
    dims = tuple(dims)
    n = len(dims)
    perm = tuple(perm)
    if sorted(perm) != list(range(n)):
        raise ValueError(f"invalid permutation {perm} for {n} parties")
    t = _as_tensor(np.asarray(op, dtype=complex), dims)
    axes = perm + tuple(p + n for p in perm)
    D = dim_total(dims)
    return t.transpose(axes).reshape(D, D)


def embed_operator(
    op: np.ndarray, dims: Sequence[int], positions: Sequence[int]
) -> np.ndarray:
    """Embed an operator acting on the subsystems ``positions`` into the full space.

    ``op`` must act on the tensor product of ``dims[p]`` for p in ``positions``
    (in that order); identity is applied on the remaining parties.
    """
    dims = tuple(dims)
    positions = tuple(positions)
    rest = tuple(i for i in range(len(dims)) if i not in positions)
    sub = tuple(dims[p] for p in positions)
    other = tuple(dims[p] for p in rest)
    full = tensor_product(np.asarray(op, dtype=complex), np.eye(dim_total(other) if other else 1))
    # full currently ordered [positions..., rest...]; permute back
    order = positions + rest
    inverse = tuple(order.index(i) for i in range(len(dims)))
    return permute_systems(full, sub + other, inverse)


def partial_trace(rho: np.ndarray, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every party not listed in ``keep`` (order of kept parties preserved)."""
    dims = tuple(dims)
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep set must be nonempty")
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ValueError(f"keep indices {keep} out of range for {len(dims)} parties")
    t = _as_tensor(np.asarray(rho, dtype=complex), dims)
    n = len(dims)
    traced = [i for i in range(n) if i not in keep]
    for offset, i in enumerate(traced):
        ax = i - offset
        t = np.trace(t, axis1=ax, axis2=ax + t.ndim // 2)
    d_keep = dim_total([dims[k] for k in keep])
    return t.reshape(d_keep, d_keep)


def partial_transpose(
    op: np.ndarray, dims: Sequence[int], parties: int | Iterable[int]
) -> np.ndarray:
    """Transpose the listed parties (an int is treated as a single party)."""
    dims = tuple(dims)
    if isinstance(parties, (int, np.integer)):
        parties = (int(parties),)
    parties = tuple(sorted(set(int(p) for p in parties)))
    if any(p < 0 or p >= len(dims) for p in parties):
        raise ValueError(f"party indices {parties} out of range")
    n = len(dims)
    t = _as_tensor(np.asarray(op, dtype=complex), dims)
    axes = list(range(2 * n))
    for p in parties:
        axes[p], axes[p + n] = axes[p + n], axes[p]
    D = dim_total(dims)
    return t.transpose(axes).reshape(D, D)


def spectral_decompose(h: np.ndarray, tol: float = HERMITICITY_TOL):
    """Eigendecompose a Hermitian operator.

    Returns (eigenvalues, eigenvectors) with real eigenvalues sorted in
    descending order and eigenvectors as columns.
    """
    h = np.asarray(h, dtype=complex)
    if not is_hermitian(h, max(tol, 1e-8)):
        raise ValueError("operator is not Hermitian within tolerance")
    w, v = np.linalg.eigh(herm(h))
    order = np.argsort(w)[::-1]
    return w[order], v[:, order]


def matrix_log_on_support(rho: np.ndarray, cutoff: float = SUPPORT_CUTOFF):
    """Base-2 logarithm on the support of a PSD operator.

    Eigenvalues below ``cutoff`` are treated as kernel (0 log 0 = 0).
    Returns (log2 of rho on its support, support projector).
    """
    w, v = spectral_decompose(rho)
    on = w > cutoff
    logw = np.zeros_like(w)
    logw[on] = np.log2(w[on])
    vs = v[:, on]
    log_op = (v * logw) @ v.conj().T
    support = vs @ vs.conj().T
    return herm(log_op), herm(support)


def trace_norm(a: np.ndarray) -> float:
    """Sum of singular values, Tr sqrt(A†A)."""
    return float(np.linalg.svd(np.asarray(a, dtype=complex), compute_uv=False).sum())


@dataclass(frozen=True)
class DensityOperator:
    """A positive unit-trace operator together with its subsystem dimensions.

    Validation enforces Hermiticity, positivity of the spectrum, and unit
    trace, each within 1e-10.
    """

    mat: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        mat = np.asarray(self.mat, dtype=complex)
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "mat", mat)
        object.__setattr__(self, "dims", dims)
        D = dim_total(dims)
        if mat.shape != (D, D):
            raise ValueError(f"matrix shape {mat.shape} does not match dims {dims}")
        if not is_hermitian(mat, HERMITICITY_TOL):
            raise ValueError("density operator is not Hermitian within 1e-10")
        tr = complex(np.trace(mat))
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"trace {tr.real:.12g} differs from 1 beyond 1e-10")
        if np.linalg.eigvalsh(herm(mat)).min() < -PSD_EIG_TOL:
            raise ValueError("density operator has eigenvalue below -1e-10")

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def n_parties(self) -> int:
        return len(self.dims)

    def reduce(self, keep: Iterable[int]) -> "DensityOperator":
        keep = sorted(set(keep))
        sub = partial_trace(self.mat, self.dims, keep)
        return DensityOperator(herm(sub), tuple(self.dims[k] for k in keep))


@dataclass(frozen=True)
class ProductDecomposition:
    """Explicit mixture of product pure states certifying separability.

    ``components`` is a list of (weight, [local pure vectors]) pairs.
    """

    weights: tuple[float, ...]
    local_states: tuple[tuple[np.ndarray, ...], ...] = field(repr=False)

    def assemble(self) -> np.ndarray:
        out = None
        for w, vecs in zip(self.weights, self.local_states):
            vec = vecs[0]
            for v in vecs[1:]:
                vec = np.kron(vec, v)
            term = w * np.outer(vec, vec.conj())
            out = term if out is None else out + term
        return out


def haar_vector(dim: int, rng) -> np.ndarray:
    rng = as_rng(rng)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def random_unitary(dim: int, rng) -> np.ndarray:
    """Haar-random unitary via QR of a Ginibre matrix."""
    rng = as_rng(rng)
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def ginibre_state(dims: Sequence[int], rank: int | None, rng) -> DensityOperator:
    """Random mixed state from the Ginibre-induced ensemble G G† / Tr."""
    dims = tuple(dims)
    D = dim_total(dims)
    rank = D if rank is None else int(rank)
    if rank < 1 or rank > D:
        raise ValueError(f"rank {rank} invalid for dimension {D}")
    rng = as_rng(rng)
    g = rng.standard_normal((D, rank)) + 1j * rng.standard_normal((D, rank))
    m = g @ g.conj().T
    return DensityOperator(herm(m / np.trace(m).real), dims)


def random_state(dims: Sequence[int], rank: int | None = None, seed=None) -> DensityOperator:
    return ginibre_state(dims, rank, as_rng(seed))


def random_pure(dims: Sequence[int], seed=None) -> DensityOperator:
    dims = tuple(dims)
    v = haar_vector(dim_total(dims), as_rng(seed))
    return DensityOperator(np.outer(v, v.conj()), dims)


def random_product(dims: Sequence[int], seed=None) -> DensityOperator:
    """Product of independent Haar-random local pure states."""
    rng = as_rng(seed)
    vecs = [haar_vector(d, rng) for d in dims]
    vec = vecs[0]
    for v in vecs[1:]:
        vec = np.kron(vec, v)
    return DensityOperator(np.outer(vec, vec.conj()), tuple(dims))


def random_separable(
    dims: Sequence[int], n_terms: int = 8, seed=None
) -> tuple[DensityOperator, ProductDecomposition]:
    """Random mixture of product pure states, with its decomposition witness."""
    dims = tuple(dims)
    rng = as_rng(seed)
    weights = rng.dirichlet(np.ones(n_terms))
    comps = tuple(tuple(haar_vector(d, rng) for d in dims) for _ in range(n_terms))
    witness = ProductDecomposition(tuple(float(w) for w in weights), comps)
    return DensityOperator(herm(witness.assemble()), dims), witness
