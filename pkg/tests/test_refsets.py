import numpy as np
import pytest

from relent.entropy import quantum_relative_entropy
from relent.qops import as_rng, partial_transpose, random_separable, random_state
from relent.refsets import (
    ReferenceSetSpec,
    SolverConfig,
    is_ppt_all_cuts,
    min_kl_over_reference_set,
    multipartite_mutual_information,
    project_ppt,
    relative_entropy_of_entanglement,
    sep_lmo,
    trace_distance_to_set,
)
from relent.states import bell_phi_plus, maximally_mixed, tiles_state, werner_state

LIGHT = SolverConfig().light()


def test_reference_set_spec_validation():
    spec = ReferenceSetSpec("sep", (2, 2, 2), ((0, 1), (2,)))
    assert spec.group_dims == (4, 2)
    assert spec.dim == 8
    with pytest.raises(ValueError):
        ReferenceSetSpec("bad", (2, 2))
    with pytest.raises(ValueError):
        ReferenceSetSpec("sep", (2, 2), ((0,),))  # single group
    with pytest.raises(ValueError):
        ReferenceSetSpec("sep", (2, 2), ((1,), (0,)))  # out of order


def test_is_ppt_all_cuts():
    ok, eigs = is_ppt_all_cuts(bell_phi_plus().mat, (2, 2))
    assert not ok and min(eigs.values()) < -0.4
    ok, _ = is_ppt_all_cuts(maximally_mixed((2, 2)).mat, (2, 2))
    assert ok
    # the Tiles state is PPT yet entangled
    ok, _ = is_ppt_all_cuts(tiles_state().mat, (3, 3))
    assert ok


def test_project_ppt_feasibility():
    spec = ReferenceSetSpec("ppt", (2, 2))
    out = project_ppt(bell_phi_plus().mat, spec)
    assert np.isclose(np.trace(out).real, 1.0)
    assert np.linalg.eigvalsh(out).min() > -1e-8
    pt = partial_transpose(out, (2, 2), [1])
    assert np.linalg.eigvalsh(pt).min() > -1e-7
    # already-PPT states are (nearly) fixed points
    mixed = maximally_mixed((2, 2)).mat
    assert np.max(np.abs(project_ppt(mixed, spec) - mixed)) < 1e-9


def test_sep_lmo_diagonal_exact():
    g = np.diag([3.0, -1.0, 2.0, 0.5]).astype(complex)
    vecs, val = sep_lmo(g, (2, 2), as_rng(0), restarts=4, sweeps=20)
    assert np.isclose(val, -1.0, atol=1e-9)
    prod = np.kron(vecs[0], vecs[1])
    assert np.isclose((prod.conj() @ g @ prod).real, -1.0, atol=1e-9)


def test_sep_lmo_beats_product_overlap_on_bell():
    # max product overlap with Phi+ is 1/2
    g = -bell_phi_plus().mat
    _, val = sep_lmo(g, (2, 2), as_rng(1), restarts=8, sweeps=60)
    assert np.isclose(val, -0.5, atol=1e-7)


def test_ree_bell_calibration_sep():
    res = relative_entropy_of_entanglement(bell_phi_plus(), ReferenceSetSpec("sep", (2, 2)), seed=0)
    assert abs(res.value - 1.0) < 5e-3
    assert res.bound_direction == "upper"
    assert res.dual_bound <= res.value + 1e-12
    # the witness reassembles the reported reference state
    assert np.max(np.abs(res.witness.assemble() - res.sigma)) < 1e-8


def test_ree_bell_calibration_ppt():
    res = relative_entropy_of_entanglement(bell_phi_plus(), ReferenceSetSpec("ppt", (2, 2)), seed=0)
    assert abs(res.value - 1.0) < 5e-3


def test_ree_zero_on_separable():
    state, _ = random_separable((2, 2), 6, seed=3)
    for kind in ("sep", "ppt"):
        res = relative_entropy_of_entanglement(state, ReferenceSetSpec(kind, (2, 2)), LIGHT, seed=0)
        assert res.value < 5e-4


def test_ree_werner_against_binary_entropy():
    lam = 0.75
    # closed form: 1 - h2(lam) for Bell-diagonal with largest weight lam
    h2 = -(lam * np.log2(lam) + (1 - lam) * np.log2(1 - lam))
    res = relative_entropy_of_entanglement(werner_state(lam), ReferenceSetSpec("sep", (2, 2)), seed=0)
    assert abs(res.value - (1 - h2)) < 5e-3


def test_min_kl_dual_is_lower_bound():
    from relent.povm import informationally_complete_lo

    ic = informationally_complete_lo((2, 2), seed=0)
    res = min_kl_over_reference_set(
        list(ic.effects), bell_phi_plus(), ReferenceSetSpec("sep", (2, 2)), seed=0
    )
    assert res.dual_bound <= res.value + 1e-12
    assert res.dual_bound > 0.1


def test_trace_distance_to_set():
    res = trace_distance_to_set(bell_phi_plus(), ReferenceSetSpec("sep", (2, 2)), LIGHT, seed=0)
    assert 0.9 < res.value < 1.1  # known distance 1 for Phi+
    state, _ = random_separable((2, 2), 6, seed=5)
    res = trace_distance_to_set(state, ReferenceSetSpec("sep", (2, 2)), LIGHT, seed=0)
    assert res.value < 5e-2


def test_sep_value_upper_bounds_relative_entropy_at_witness():
    rho = random_state((2, 2), seed=7)
    res = relative_entropy_of_entanglement(rho, ReferenceSetSpec("sep", (2, 2)), LIGHT, seed=0)
    direct = quantum_relative_entropy(rho.mat, res.witness.assemble())
    assert np.isclose(res.value, direct, atol=1e-8)


def test_multipartite_mutual_information():
    assert np.isclose(multipartite_mutual_information(bell_phi_plus()), 2.0)
    state = random_state((2,), seed=8)
    prod = np.kron(state.mat, state.mat)
    from relent.qops import DensityOperator

    assert multipartite_mutual_information(DensityOperator(prod, (2, 2))) < 1e-10
