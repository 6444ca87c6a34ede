import numpy as np
import pytest

from relent.qops import (
    DensityOperator,
    as_rng,
    dim_total,
    embed_operator,
    ginibre_state,
    herm,
    matrix_log_on_support,
    partial_trace,
    partial_transpose,
    permute_systems,
    projector,
    random_product,
    random_separable,
    random_state,
    random_unitary,
    spectral_decompose,
    tensor_product,
    trace_norm,
)


def test_density_operator_validation():
    good = DensityOperator(np.eye(4) / 4, (2, 2))
    assert good.dim == 4 and good.n_parties == 2
    with pytest.raises(ValueError):
        DensityOperator(np.eye(4) / 2, (2, 2))  # trace 2
    with pytest.raises(ValueError):
        DensityOperator(np.diag([1.5, -0.5, 0, 0]), (2, 2))  # not PSD
    m = np.eye(4, dtype=complex) / 4
    m[0, 1] = 0.1
    with pytest.raises(ValueError):
        DensityOperator(m, (2, 2))  # not Hermitian
    with pytest.raises(ValueError):
        DensityOperator(np.eye(4) / 4, (2, 3))  # shape mismatch


def test_partial_trace_product_state():
    rng = as_rng(0)
    a = ginibre_state((2,), None, rng).mat
    b = ginibre_state((3,), None, rng).mat
    ab = np.kron(a, b)
    assert np.allclose(partial_trace(ab, (2, 3), [0]), a)
    assert np.allclose(partial_trace(ab, (2, 3), [1]), b)
    assert np.isclose(np.trace(partial_trace(ab, (2, 3), [0])).real, 1.0)


def test_partial_trace_three_parties():
    rho = random_state((2, 2, 2), seed=1).mat
    r01 = partial_trace(rho, (2, 2, 2), [0, 1])
    r0 = partial_trace(r01, (2, 2), [0])
    assert np.allclose(r0, partial_trace(rho, (2, 2, 2), [0]))


def test_partial_transpose_involution_and_trace():
    rho = random_state((2, 3), seed=2).mat
    pt = partial_transpose(rho, (2, 3), [1])
    assert np.isclose(np.trace(pt).real, 1.0)
    assert np.allclose(partial_transpose(pt, (2, 3), [1]), rho)
    # transposing both parties is a full transpose
    both = partial_transpose(rho, (2, 3), [0, 1])
    assert np.allclose(both, rho.T)


def test_permute_systems_roundtrip():
    rho = random_state((2, 3, 2), seed=3).mat
    perm = (2, 0, 1)
    out = permute_systems(rho, (2, 3, 2), perm)
    # invert: new party k is old perm[k]
    inverse = [perm.index(i) for i in range(3)]
    back = permute_systems(out, (2, 2, 3), inverse)
    assert np.allclose(back, rho)


def test_permute_matches_kron_swap():
    a = random_state((2,), seed=4).mat
    b = random_state((3,), seed=5).mat
    swapped = permute_systems(np.kron(a, b), (2, 3), (1, 0))
    assert np.allclose(swapped, np.kron(b, a))


def test_embed_operator():
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    full = embed_operator(x, (2, 2, 2), (1,))
    assert np.allclose(full, np.kron(np.kron(np.eye(2), x), np.eye(2)))
    # embedding at non-adjacent positions
    xz = np.kron(x, np.diag([1.0, -1.0])).astype(complex)
    full = embed_operator(xz, (2, 2, 2), (0, 2))
    expect = np.kron(np.kron(x, np.eye(2)), np.diag([1.0, -1.0]))
    assert np.allclose(full, expect)


def test_spectral_decompose_reconstructs():
    h = herm(random_state((2, 2), seed=6).mat)
    w, vecs = spectral_decompose(h)
    assert np.all(np.diff(w) <= 1e-12)  # descending
    recon = sum(l * projector(v) for l, v in zip(w, vecs.T))
    assert np.allclose(recon, h)


def test_matrix_log_on_support():
    p = np.diag([0.5, 0.5, 0.0, 0.0]).astype(complex)
    log_p, supp = matrix_log_on_support(p)
    assert np.isclose(np.trace(p @ log_p).real, -1.0)  # S = 1 bit
    assert np.isclose(np.trace(supp).real, 2.0)


def test_trace_norm():
    a = np.diag([1.0, -2.0, 0.5])
    assert np.isclose(trace_norm(a), 3.5)


def test_random_unitary_is_unitary():
    u = random_unitary(5, as_rng(7))
    assert np.allclose(u @ u.conj().T, np.eye(5), atol=1e-12)


def test_random_separable_witness_reassembles():
    state, witness = random_separable((2, 3), n_terms=5, seed=8)
    assert np.max(np.abs(witness.assemble() - state.mat)) < 1e-12
    assert np.isclose(sum(witness.weights), 1.0)


def test_random_product_is_pure_product():
    rho = random_product((2, 2), seed=9)
    w = np.linalg.eigvalsh(rho.mat)
    assert np.isclose(w[-1], 1.0)
    ra = partial_trace(rho.mat, (2, 2), [0])
    assert np.isclose(np.linalg.eigvalsh(ra)[-1], 1.0, atol=1e-10)


def test_seed_determinism():
    assert np.allclose(random_state((2, 2), seed=11).mat, random_state((2, 2), seed=11).mat)
    assert not np.allclose(random_state((2, 2), seed=11).mat, random_state((2, 2), seed=12).mat)


def test_tensor_product_and_dim_total():
    assert dim_total((2, 3, 4)) == 24
    a, b = np.eye(2), np.ones((3, 3))
    assert tensor_product(a, b).shape == (6, 6)
