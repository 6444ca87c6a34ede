"""Classical and quantum relative entropies and measurement maps.

All entropic quantities are in base 2. Infinite relative entropy (support
of the first argument not contained in the support of the second) is
returned as ``math.inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .qops import DensityOperator, herm, matrix_log_on_support, trace_norm

PROB_ZERO_TOL = 1e-14
SUPPORT_LEAK_TOL = 1e-9

__all__ = [
    "LabeledEnsemble",
    "apply_measurement",
    "classical_kl",
    "ensemble_block_relative_entropy",
    "measured_relative_entropy",
    "quantum_relative_entropy",
    "von_neumann_entropy",
]


def _as_mat(state) -> np.ndarray:
    return state.mat if isinstance(state, DensityOperator) else np.asarray(state, dtype=complex)


def _clean_probs(p: np.ndarray, zero_tol: float = PROB_ZERO_TOL) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.min() < -1e-12:
        raise ValueError(f"negative probability {p.min():.3e}")
    p = np.where(p < zero_tol, 0.0, p)
    if abs(p.sum() - 1.0) > 1e-10:
        raise ValueError(f"probabilities sum to {p.sum():.12g}, not 1")
    return p


def classical_kl(p: Sequence[float], q: Sequence[float]) -> float:
    """Relative entropy Σ p_i log2(p_i / q_i); +inf if p charges a q-null outcome.

    Tiny positive q entries are kept: zeroing them would turn a negligible
    finite contribution p·log2(p/q) into a spurious infinity whenever the
    matching p survives its own cutoff.
    """
    p = _clean_probs(np.asarray(p, dtype=float))
    q = _clean_probs(np.asarray(q, dtype=float), zero_tol=0.0)
    if p.shape != q.shape:
        raise ValueError("distributions have different lengths")
    on = p > 0
    if np.any(q[on] == 0.0):
        return math.inf
    return float(np.sum(p[on] * np.log2(p[on] / q[on])))


def von_neumann_entropy(rho) -> float:
    w = np.linalg.eigvalsh(herm(_as_mat(rho)))
    w = w[w > PROB_ZERO_TOL]
    return float(-np.sum(w * np.log2(w)))


def quantum_relative_entropy(rho, sigma, support_tol: float = SUPPORT_LEAK_TOL) -> float:
    """S(ρ||σ) = Tr ρ log2 ρ − Tr ρ log2 σ, +inf when supp(ρ) ⊄ supp(σ).

    Support inclusion is tested by the trace norm of ρ compressed onto the
    kernel of σ, with the eigenvalue cutoff used by matrix_log_on_support.
    """
    r = herm(_as_mat(rho))
    s = herm(_as_mat(sigma))
    if r.shape != s.shape:
        raise ValueError("states have different dimensions")
    log_s, supp_s = matrix_log_on_support(s)
    kernel = np.eye(s.shape[0]) - supp_s
    if trace_norm(kernel @ r @ kernel) > support_tol:
        return math.inf
    value = -von_neumann_entropy(r) - float(np.trace(r @ log_s).real)
    return max(value, 0.0)


def apply_measurement(effects: Sequence[np.ndarray], state) -> np.ndarray:
    """Born-rule outcome distribution p_i = Tr(M_i ρ) of a POVM."""
    r = _as_mat(state)
    if effects[0].shape != r.shape:
        raise ValueError("effect dimension does not match state")
    p = np.array([float(np.trace(m @ r).real) for m in effects])
    return _clean_probs(p, zero_tol=0.0)


def measured_relative_entropy(effects: Sequence[np.ndarray], rho, sigma) -> float:
    """Classical relative entropy between the two outcome distributions."""
    return classical_kl(apply_measurement(effects, rho), apply_measurement(effects, sigma))


@dataclass(frozen=True)
class LabeledEnsemble:
    """Weighted list of states sharing the same dimensions."""

    weights: tuple[float, ...]
    states: tuple

    def __post_init__(self):
        _clean_probs(np.asarray(self.weights, dtype=float))
        if len(self.weights) != len(self.states):
            raise ValueError("weights and states have different lengths")

    def block_state(self) -> np.ndarray:
        """Σ_k w_k ρ_k ⊗ |k⟩⟨k| on an ancillary label register."""
        k = len(self.weights)
        d = _as_mat(self.states[0]).shape[0]
        out = np.zeros((d * k, d * k), dtype=complex)
        for i, (w, st) in enumerate(zip(self.weights, self.states)):
            out[i * d : (i + 1) * d, i * d : (i + 1) * d] = w * _as_mat(st)
        return out


def ensemble_block_relative_entropy(e1: LabeledEnsemble, e2: LabeledEnsemble):
    """Block-state relative entropy and its label/conditional decomposition.

    Returns (block value, label KL, weighted conditional term); the block
    value equals the sum of the other two (up to round-off) by the chain
    rule for classically flagged ensembles.
    """
    if len(e1.weights) != len(e2.weights):
        raise ValueError("ensembles have different lengths")
    block = quantum_relative_entropy(e1.block_state(), e2.block_state())
    label = classical_kl(e1.weights, e2.weights)
    cond = 0.0
    for w, a, b in zip(e1.weights, e1.states, e2.states):
        if w <= PROB_ZERO_TOL:
            continue
        s = quantum_relative_entropy(a, b)
        if math.isinf(s):
            cond = math.inf
            break
        cond += w * s
    return block, label, cond
