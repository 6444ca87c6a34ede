"""Acceptance gate: calibration and property checks at stated tolerances.

Each test pins one advertised guarantee of the library; tolerances are the
published ones, not implementation margins.
"""

import math
import time

import numpy as np
import pytest

from relent.cli import main as cli_main
from relent.entropy import (
    LabeledEnsemble,
    ensemble_block_relative_entropy,
    quantum_relative_entropy,
)
from relent.povm import (
    MeasurementClassSpec,
    matthews_faithfulness_bound,
    restricted_ree,
)
from relent.qops import (
    as_rng,
    partial_trace,
    partial_transpose,
    random_separable,
    random_state,
)
from relent.refsets import (
    ReferenceSetSpec,
    SolverConfig,
    multipartite_mutual_information,
    relative_entropy_of_entanglement,
)
from relent.states import bell_phi_plus, tiles_state, werner_state
from relent.verify import check_theorem1, check_theorem2, proof_chain_suite

SEP22 = ReferenceSetSpec("sep", (2, 2))
PPT22 = ReferenceSetSpec("ppt", (2, 2))
LIGHT = SolverConfig().light()


def _random_channel(d: int, env: int, rng):
    """Haar-random isometry V: C^d -> C^d x C^env; the channel traces out env."""
    g = rng.standard_normal((d * env, d)) + 1j * rng.standard_normal((d * env, d))
    v, _ = np.linalg.qr(g)

    def chan(rho):
        big = v @ rho @ v.conj().T
        return partial_trace(big, (d, env), [0])

    return chan


# -- 1. data processing ------------------------------------------------------


def test_data_processing_500_random_triples():
    rng = as_rng(0)
    start = time.time()
    for k in range(500):
        rho = random_state((2, 2), seed=rng).mat
        sig = random_state((2, 2), seed=rng).mat
        chan = _random_channel(4, int(rng.integers(2, 5)), rng)
        s_pre = quantum_relative_entropy(rho, sig)
        s_post = quantum_relative_entropy(chan(rho), chan(sig))
        assert s_post <= s_pre + 1e-9
    assert time.time() - start < 30.0


# -- 2. block-ensemble identity ----------------------------------------------


def test_lemma1_identity_100_ensembles():
    rng = as_rng(1)
    for k in range(100):
        w1 = rng.dirichlet(np.ones(3))
        w2 = rng.dirichlet(np.ones(3))
        e1 = LabeledEnsemble(tuple(w1), tuple(random_state((2,), seed=rng).mat for _ in range(3)))
        e2 = LabeledEnsemble(tuple(w2), tuple(random_state((2,), seed=rng).mat for _ in range(3)))
        block, label, cond = ensemble_block_relative_entropy(e1, e2)
        assert abs(block - (label + cond)) <= 1e-9


# -- 3. calibrations -----------------------------------------------------------


def test_calibration_bell_sep():
    start = time.time()
    res = relative_entropy_of_entanglement(bell_phi_plus(), SEP22, seed=0)
    assert abs(res.value - 1.0) <= 5e-3
    assert time.time() - start < 10.0


def test_calibration_bell_ppt():
    start = time.time()
    res = relative_entropy_of_entanglement(bell_phi_plus(), PPT22, seed=0)
    assert abs(res.value - 1.0) <= 5e-3
    assert time.time() - start < 10.0


def _bell_diagonal_grid_oracle(weights, grid=20001):
    """min KL(weights || q) over Bell-diagonal separable q (max weight <= 1/2).

    For a state with a single dominant Bell weight the optimum has the other
    three weights proportional to the state's, so a 1-D sweep is exact here.
    """
    w = np.asarray(weights, float)
    rest = w[1:] / w[1:].sum()
    best = math.inf
    for q1 in np.linspace(1e-9, 0.5, grid):
        q = np.concatenate([[q1], (1 - q1) * rest])
        on = w > 0
        best = min(best, float(np.sum(w[on] * np.log2(w[on] / q[on]))))
    return best


def test_calibration_werner_against_grid_oracle():
    lam = 0.75
    start = time.time()
    oracle = _bell_diagonal_grid_oracle([lam, (1 - lam) / 3, (1 - lam) / 3, (1 - lam) / 3])
    h2 = -(lam * np.log2(lam) + (1 - lam) * np.log2(1 - lam))
    assert abs(oracle - (1 - h2)) < 1e-6  # the oracle matches the closed form
    res = relative_entropy_of_entanglement(werner_state(lam), SEP22, seed=0)
    assert abs(res.value - oracle) <= 5e-3
    assert time.time() - start < 10.0


# -- 4. SEP/PPT consistency on two qubits --------------------------------------


def test_sep_ppt_consistency_20_states():
    rng = as_rng(2)
    for k in range(20):
        rho = random_state((2, 2), seed=rng)
        sep = relative_entropy_of_entanglement(rho, SEP22, seed=rng).value
        ppt = relative_entropy_of_entanglement(rho, PPT22, seed=rng).value
        assert abs(sep - ppt) <= 5e-3, f"instance {k}: sep={sep} ppt={ppt}"


# -- 5. proof chain -------------------------------------------------------------


def test_proof_chain_200_instances():
    start = time.time()
    report = proof_chain_suite(samples=200, seed=0)
    closed = [m for m in report.margins if not m.label.endswith("(vi)")]
    solver = [m for m in report.margins if m.label.endswith("(vi)")]
    worst_closed = min(m.margin for m in closed)
    worst_solver = min(m.margin for m in solver)
    assert worst_closed >= -1e-9, f"closed-form step margin {worst_closed}"
    assert worst_solver >= -2e-3, f"step (vi) margin {worst_solver}"
    assert time.time() - start < 600.0


# -- 6. theorem 1 ---------------------------------------------------------------


def test_theorem1_50_instances_with_recursion():
    report = check_theorem1(samples=50, seed=0, recursion_samples=10)
    rec = [m for m in report.margins if "recursion" in m.label]
    assert len(rec) >= 10
    assert all(m.margin >= -1e-3 for m in rec), [
        (m.label, m.margin) for m in rec if m.margin < -1e-3
    ]
    rest = [m for m in report.margins if "recursion" not in m.label]
    assert all(m.margin >= -1e-3 for m in rest), [
        (m.label, m.margin) for m in rest if m.margin < -1e-3
    ]


# -- 7. faithfulness -------------------------------------------------------------


def test_faithfulness_bell_certificate():
    res = restricted_ree(
        bell_phi_plus(),
        SEP22,
        MeasurementClassSpec("sep"),
        LIGHT,
        seed=0,
        rounds=0,
    )
    assert res.certified_lower >= 0.1


def test_faithfulness_tiles_strictly_positive():
    heavy = SolverConfig(
        fw_max_iters=4000, fw_gap_tol=1e-6, dual_check_every=250, fw_stall_iters=4000
    )
    res = restricted_ree(
        tiles_state(),
        ReferenceSetSpec("sep", (3, 3)),
        MeasurementClassSpec("sep"),
        heavy,
        seed=0,
        rounds=0,
    )
    assert res.certified_lower > 0.0, (
        f"tiles certificate {res.certified_lower} (dual {res.details['certification_dual']})"
    )


def test_faithfulness_zero_on_20_separable_states():
    rng = as_rng(3)
    for k in range(20):
        state, _ = random_separable((2, 2), n_terms=8, seed=rng)
        res = restricted_ree(
            state, SEP22, MeasurementClassSpec("sep"), LIGHT, seed=rng, rounds=0
        )
        assert res.certified_lower <= 1e-3, f"instance {k}: {res.certified_lower}"


# -- 8. explicit faithfulness prefactor ------------------------------------------


def test_matthews_prefactor_bit_exact():
    prefactor = 1.0 / (2 ** (2 - 1) * 4 * math.log(2))
    assert abs(prefactor - 0.180337) < 1e-6


def test_matthews_bound_below_certificate_20_states():
    full = SolverConfig()
    rng = as_rng(4)
    done = 0
    while done < 20:
        rho = random_state((2, 2), seed=rng)
        pt_min = np.linalg.eigvalsh(partial_transpose(rho.mat, (2, 2), [1])).min()
        if pt_min > -0.02:
            continue  # keep clearly entangled instances only
        done += 1
        bound = matthews_faithfulness_bound(rho, SEP22, full, seed=0)
        res = restricted_ree(
            rho,
            SEP22,
            MeasurementClassSpec("sep", outcomes_per_party=4, ascent_restarts=4, ascent_iters=300),
            LIGHT,
            seed=0,
            rounds=6,
            certify_config=full,
        )
        assert bound <= res.certified_lower + 2e-3, (
            f"instance {done}: bound={bound} cert={res.certified_lower}"
        )


# -- 9. theorem 2 -----------------------------------------------------------------


def test_theorem2_20_instances():
    report = check_theorem2(samples=20, seed=0)
    assert report.passed, [(m.label, m.margin, m.tolerance) for m in report.failures]


# -- 10. mutual-information bound --------------------------------------------------


def test_mutual_bound_50_states():
    rng = as_rng(5)
    for k in range(50):
        rho = random_state((2, 2), seed=rng)
        mutual = multipartite_mutual_information(rho)
        res = relative_entropy_of_entanglement(rho, SEP22, LIGHT, seed=rng)
        # the product of the marginals is itself a feasible separable state
        # realizing S(rho || rho_A x rho_B) = I, so the estimator is the
        # smaller of the solver value and that closed-form candidate
        ra = partial_trace(rho.mat, (2, 2), [0])
        rb = partial_trace(rho.mat, (2, 2), [1])
        er_hat = min(res.value, quantum_relative_entropy(rho.mat, np.kron(ra, rb)))
        assert mutual >= er_hat - 1e-9, f"instance {k}: I={mutual} er={er_hat}"
        # the certified lower bound on E_R must also sit below I
        assert mutual >= res.dual_bound - 1e-9


def test_mutual_bell_two_vs_one():
    mutual = multipartite_mutual_information(bell_phi_plus())
    er = relative_entropy_of_entanglement(bell_phi_plus(), SEP22, seed=0).value
    assert abs(mutual - 2.0) < 1e-12
    assert abs(er - 1.0) < 5e-3
    assert mutual >= er + 0.9


# -- 11. CLI determinism ------------------------------------------------------------


def test_cli_csv_byte_identical(tmp_path):
    c1, c2 = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["verify", "mutual", "--samples", "5", "--seed", "9"]
    assert cli_main(args + ["--out-csv", str(c1)]) == 0
    assert cli_main(args + ["--out-csv", str(c2)]) == 0
    assert c1.read_bytes() == c2.read_bytes()
