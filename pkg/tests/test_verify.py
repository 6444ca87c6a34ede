import numpy as np
import pytest

from relent.povm import random_lo_povm
from relent.qops import DensityOperator, random_separable, random_state
from relent.refsets import SolverConfig
from relent.verify import (
    FLOAT_TOL,
    InequalityMargin,
    VerificationReport,
    check_mutual_bound,
    check_proof_chain,
    check_theorem1,
    proof_chain_suite,
    run_suite,
)


def test_inequality_margin_semantics():
    m = InequalityMargin("x", 1.0, 1.0 + 0.5e-9, FLOAT_TOL)
    assert m.ok and m.margin < 0
    assert not InequalityMargin("x", 1.0, 1.1, FLOAT_TOL).ok
    assert not InequalityMargin("x", float("nan"), 0.0).ok


def test_report_aggregation():
    rep = VerificationReport("demo", 2)
    rep.extend([InequalityMargin("a", 2.0, 1.0), InequalityMargin("b", 0.0, 1.0)])
    assert rep.min_margin == -1.0
    assert not rep.passed and len(rep.failures) == 1


def test_proof_chain_requires_witness():
    rho = random_state((2, 2, 2, 2), seed=0)
    m_x = random_lo_povm((2, 2), 2, seed=0)
    with pytest.raises(ValueError):
        check_proof_chain(rho, rho, m_x)


def test_proof_chain_on_equal_states():
    # with rho = sigma in P every chain quantity reduces to E_R terms and all
    # closed-form steps hold with margin ~0
    sig44, witness = random_separable((4, 4), n_terms=8, seed=1)
    sigma = DensityOperator(sig44.mat, (2, 2, 2, 2))
    m_x = random_lo_povm((2, 2), 2, seed=2)
    rep = check_proof_chain(sigma, sigma, m_x, witness=witness, seed=3)
    assert rep.passed
    closed = [m for m in rep.margins if not m.label.endswith("(vi)")]
    assert all(abs(m.margin) < 1e-6 or m.margin >= 0 for m in closed)


def test_proof_chain_suite_small():
    rep = proof_chain_suite(samples=3, seed=0)
    assert rep.passed, [(m.label, m.margin) for m in rep.failures]
    assert rep.min_margin >= -FLOAT_TOL or all(
        m.label.endswith("(vi)") for m in rep.failures
    )


def test_theorem1_small():
    rep = check_theorem1(samples=2, seed=0, recursion_samples=1)
    assert rep.passed, [(m.label, m.margin) for m in rep.failures]
    # the Bell-pair calibration instance is always present
    assert any("cal:bellpairs" in m.label for m in rep.margins)


def test_mutual_bound_small():
    rep = check_mutual_bound(samples=5, seed=0)
    assert rep.passed
    assert rep.min_margin >= -FLOAT_TOL


def test_run_suite_dispatch():
    rep = run_suite("mutual", samples=2, seed=1)
    assert rep.suite == "mutual" and rep.passed
    with pytest.raises(ValueError):
        run_suite("unknown")


def test_run_suite_theorem2_smoke():
    cfg = SolverConfig().light()
    rep = run_suite("theorem2", samples=1, seed=0, config=cfg)
    assert rep.passed, [(m.label, m.margin) for m in rep.failures]
