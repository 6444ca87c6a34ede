"""Canonical few-qubit (and qutrit) states used for calibration and verification."""

from __future__ import annotations

import numpy as np

from .qops import DensityOperator, dim_total, herm, projector

__all__ = [
    "bell_phi_plus",
    "bell_diagonal",
    "ghz_state",
    "ket",
    "maximally_mixed",
    "tiles_state",
    "werner_state",
]


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def maximally_mixed(dims) -> DensityOperator:
    D = dim_total(dims)
    return DensityOperator(np.eye(D) / D, tuple(dims))


def bell_phi_plus() -> DensityOperator:
    """|Φ⁺⟩ = (|00⟩ + |11⟩)/√2."""
    v = (ket(0, 4) + ket(3, 4)) / np.sqrt(2)
    return DensityOperator(projector(v), (2, 2))


def _bell_vectors() -> list[np.ndarray]:
    s = 1 / np.sqrt(2)
    return [
        s * (ket(0, 4) + ket(3, 4)),  # Φ⁺
        s * (ket(0, 4) - ket(3, 4)),  # Φ⁻
        s * (ket(1, 4) + ket(2, 4)),  # Ψ⁺
        s * (ket(1, 4) - ket(2, 4)),  # Ψ⁻
    ]


def bell_diagonal(weights) -> DensityOperator:
    """Mixture of the four Bell projectors with the given weights."""
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (4,) or abs(weights.sum() - 1) > 1e-10 or weights.min() < -1e-12:
        raise ValueError("weights must be a probability 4-vector")
    mat = sum(w * projector(v) for w, v in zip(weights, _bell_vectors()))
    return DensityOperator(herm(mat), (2, 2))


def werner_state(lam: float) -> DensityOperator:
    """Bell-diagonal state with largest weight λ on Φ⁺ and the rest uniform.

    W(λ) = λ Φ⁺ + (1−λ)(I − Φ⁺)/3, equivalently the isotropic mixture
    p Φ⁺ + (1−p) I/4 with p = (4λ−1)/3. Entangled iff λ > 1/2, with
    E_R = 1 − h₂(λ) in that regime.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError("λ must lie in [0, 1]")
    return bell_diagonal([lam, (1 - lam) / 3, (1 - lam) / 3, (1 - lam) / 3])


def ghz_state(n: int = 3) -> DensityOperator:
    """n-qubit GHZ state (|0…0⟩ + |1…1⟩)/√2."""
    D = 2**n
    v = (ket(0, D) + ket(D - 1, D)) / np.sqrt(2)
    return DensityOperator(projector(v), (2,) * n)


def tiles_state() -> DensityOperator:
    """The 3⊗3 bound entangled state from the Tiles unextendible product basis.

    Uniform mixture on the orthogonal complement of the five tile vectors;
    PPT across the cut yet entangled.
    """
    s = 1 / np.sqrt(2)
    k = [ket(i, 3) for i in range(3)]
    tiles = [
        np.kron(k[0], s * (k[0] - k[1])),
        np.kron(k[2], s * (k[1] - k[2])),
        np.kron(s * (k[0] - k[1]), k[2]),
        np.kron(s * (k[1] - k[2]), k[0]),
        np.kron(k[0] + k[1] + k[2], k[0] + k[1] + k[2]) / 3.0,
    ]
    comp = np.eye(9, dtype=complex)
    for t in tiles:
        comp -= np.outer(t, t.conj())
    return DensityOperator(herm(comp / 4.0), (3, 3))
