import math

import numpy as np
import pytest

from relent.entropy import (
    LabeledEnsemble,
    apply_measurement,
    classical_kl,
    ensemble_block_relative_entropy,
    measured_relative_entropy,
    quantum_relative_entropy,
    von_neumann_entropy,
)
from relent.qops import as_rng, random_state, random_unitary
from relent.states import bell_phi_plus, maximally_mixed, werner_state


def test_classical_kl_basics():
    assert classical_kl([0.5, 0.5], [0.5, 0.5]) == 0.0
    assert np.isclose(classical_kl([1.0, 0.0], [0.5, 0.5]), 1.0)
    assert math.isinf(classical_kl([0.5, 0.5], [1.0, 0.0]))
    # zero-probability outcomes in p contribute nothing
    assert np.isclose(classical_kl([1.0, 0.0], [0.9, 0.1]), -np.log2(0.9))


def test_classical_kl_rejects_bad_distributions():
    with pytest.raises(ValueError):
        classical_kl([0.6, 0.6], [0.5, 0.5])
    with pytest.raises(ValueError):
        classical_kl([0.5, 0.5], [0.5, 0.5, 0.0])


def test_von_neumann_entropy():
    assert np.isclose(von_neumann_entropy(maximally_mixed((2, 2)).mat), 2.0)
    assert np.isclose(von_neumann_entropy(bell_phi_plus().mat), 0.0, atol=1e-12)
    assert np.isclose(von_neumann_entropy(np.diag([0.5, 0.5, 0, 0])), 1.0)


def test_relative_entropy_calibrations():
    bell = bell_phi_plus().mat
    mixed = maximally_mixed((2, 2)).mat
    assert np.isclose(quantum_relative_entropy(bell, mixed), 2.0)
    assert quantum_relative_entropy(mixed, mixed) == 0.0
    # Werner state against the maximally mixed state, computed two ways
    w = werner_state(0.75).mat
    expect = -von_neumann_entropy(w) + 2.0
    assert np.isclose(quantum_relative_entropy(w, mixed), expect)


def test_relative_entropy_infinite_on_support_leak():
    p0 = np.diag([1.0, 0.0]).astype(complex)
    p1 = np.diag([0.0, 1.0]).astype(complex)
    assert math.isinf(quantum_relative_entropy(p0, p1))
    assert quantum_relative_entropy(p1, p1) == 0.0


def test_relative_entropy_nonnegative_and_unitary_invariant():
    rng = as_rng(0)
    for k in range(10):
        rho = random_state((2, 2), seed=rng).mat
        sig = random_state((2, 2), seed=rng).mat
        s = quantum_relative_entropy(rho, sig)
        assert s >= 0.0
        u = random_unitary(4, rng)
        s2 = quantum_relative_entropy(u @ rho @ u.conj().T, u @ sig @ u.conj().T)
        assert np.isclose(s, s2, atol=1e-9)


def test_apply_measurement():
    z = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
    p = apply_measurement(z, np.diag([0.3, 0.7]).astype(complex))
    assert np.allclose(p, [0.3, 0.7])
    with pytest.raises(ValueError):
        apply_measurement(z, np.eye(4) / 4)


def test_measured_relative_entropy_data_processing():
    rng = as_rng(1)
    basis = random_unitary(4, rng)
    effects = [np.outer(basis[:, i], basis[:, i].conj()) for i in range(4)]
    for k in range(20):
        rho = random_state((2, 2), seed=rng).mat
        sig = random_state((2, 2), seed=rng).mat
        assert measured_relative_entropy(effects, rho, sig) <= (
            quantum_relative_entropy(rho, sig) + 1e-9
        )


def test_lemma1_block_decomposition():
    rng = as_rng(2)
    for k in range(20):
        r = rng.dirichlet(np.ones(3))
        s = rng.dirichlet(np.ones(3))
        e1 = LabeledEnsemble(tuple(r), tuple(random_state((2,), seed=rng).mat for _ in range(3)))
        e2 = LabeledEnsemble(tuple(s), tuple(random_state((2,), seed=rng).mat for _ in range(3)))
        block, label, cond = ensemble_block_relative_entropy(e1, e2)
        assert np.isclose(block, label + cond, atol=1e-9)


def test_ensemble_block_infinite_branch():
    p0 = np.diag([1.0, 0.0]).astype(complex)
    p1 = np.diag([0.0, 1.0]).astype(complex)
    e1 = LabeledEnsemble((0.5, 0.5), (p0, p0))
    e2 = LabeledEnsemble((0.5, 0.5), (p1, p1))
    block, label, cond = ensemble_block_relative_entropy(e1, e2)
    assert math.isinf(block) and math.isinf(cond) and label == 0.0
