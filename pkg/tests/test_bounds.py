import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from geodp.bounds import (bruteforce_bounds, dec_lowerbound, det_value, detlb_bruteforce, enumeration_cost,
                          optimality_ratio, spec_value, speclb_bruteforce)
from geodp.calibration import constant
from geodp.decomposition import decompose, decompose_workload
from geodp.errors import BudgetExceededError
from geodp.workload import PrivacyParams, diag_workload, gen_workload
from oracles import detlb_gram, speclb_gram

PP = PrivacyParams(1.0, 1e-6)


def test_spec_identity():
    for n in range(1, 5):
        assert speclb_bruteforce(np.eye(4), n).spec_lb == pytest.approx(n)


def test_spec_scalar():
    assert speclb_bruteforce(np.array([[2.0]]), 1).spec_lb == pytest.approx(4.0)


def test_spec_random_sign_matches_second_path():
    A = gen_workload("random_sign", 4, 6, 3).A
    rep = speclb_bruteforce(A, 4)
    assert rep.spec_lb == pytest.approx(speclb_gram(A, 4), abs=1e-8)
    assert spec_value(A, rep.spec_witness) == pytest.approx(rep.spec_lb, abs=1e-8)


def test_det_examples():
    assert detlb_bruteforce(np.eye(3), 3).det_lb == pytest.approx(3.0)
    assert detlb_bruteforce(np.diag([2.0, 3.0]), 2).det_lb == pytest.approx(12.0)
    A = np.random.default_rng(4).standard_normal((4, 6))
    rep = detlb_bruteforce(A, 3)
    assert rep.det_lb == pytest.approx(detlb_gram(A, 3), abs=1e-8)
    assert det_value(A, rep.det_witness) == pytest.approx(rep.det_lb, abs=1e-8)


@given(st.integers(0, 10**6), st.integers(1, 4), st.integers(1, 6))
def test_monotone_in_n_and_permutation_invariant(seed, d, N):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((d, N))
    prev_s = prev_d = 0.0
    for n in range(1, d + 1):
        rep = bruteforce_bounds(A, n)
        assert rep.spec_lb >= prev_s - 1e-12 and rep.det_lb >= prev_d - 1e-12
        prev_s, prev_d = rep.spec_lb, rep.det_lb
    perm = rng.permutation(N)
    rep2 = bruteforce_bounds(A[:, perm], d)
    assert rep2.spec_lb == pytest.approx(prev_s, abs=1e-8)
    assert rep2.det_lb == pytest.approx(prev_d, abs=1e-8)


def test_dec_bound_permutation_invariant():
    A = gen_workload("random_counting", 6, 9, 2).A
    perm = np.random.default_rng(0).permutation(9)
    a = dec_lowerbound(decompose(A, eta=1e-12, max_iters=10**5), PP).dec_lb
    b = dec_lowerbound(decompose(A[:, perm], eta=1e-12, max_iters=10**5), PP).dec_lb
    assert a == pytest.approx(b, abs=1e-8)


def test_budget_refusal_reports_requirement():
    A = np.ones((10, 30))
    with pytest.raises(BudgetExceededError) as exc:
        speclb_bruteforce(A, 10, limit=1000)
    assert exc.value.required == enumeration_cost(30, 10) and exc.value.limit == 1000
    assert exc.value.exit_code == 3


def test_dec_examples():
    assert dec_lowerbound(decompose(np.eye(1)), PP).dec_lb == pytest.approx(1.0)
    dec = decompose(np.eye(4))
    lb = dec_lowerbound(dec, PP).dec_lb
    assert lb == pytest.approx(max(di * r * r for di, r in zip(dec.dims, dec.radii)))
    assert lb <= 2 + 1e-9
    A = gen_workload("random_sign", 5, 7, 1).A
    assert dec_lowerbound(decompose(3 * A), PP).dec_lb == pytest.approx(
        9 * dec_lowerbound(decompose(A), PP).dec_lb, rel=1e-6)


def test_dec_sparse_variant():
    dec = decompose(np.diag([8.0, 4.0, 2.0, 1.0]))  # dims (2,1,1), radii (2,4,8)
    rep = dec_lowerbound(dec, PP, n=1.5)
    # eps n = 1.5: level 1 (d=2) admissible -> 1.5*4; levels 2,3 keep d_i r_i^2 = 16, 64
    assert rep.dec_lb == pytest.approx(64.0)
    rep = dec_lowerbound(decompose(np.eye(4)), PP, n=0.5)
    assert rep.dec_lb == pytest.approx(0.5 * max(decompose(np.eye(4)).radii) ** 2)
    assert rep.mode == "decomposition"


def test_sandwich_constant_on_desk_corpus():
    C = constant("C_sand")
    for W in [gen_workload("random_sign", 5, 8, 2), gen_workload("random_counting", 6, 9, 4),
              gen_workload("intervals", 6, 3), diag_workload([5.0, 2.0, 1.0])]:
        dl = dec_lowerbound(decompose_workload(W.A), PP).dec_lb
        sl = speclb_bruteforce(W.A, W.d).spec_lb
        assert dl <= C * sl


def test_ratio_identity_one():
    r = optimality_ratio(np.eye(1), PP, math.inf, "bruteforce")
    assert r["ratio"] == pytest.approx(PP.c ** 2, rel=1e-12)
    assert r["spec_lb"] == pytest.approx(1.0)


def test_ratios_finite_positive():
    for W in [gen_workload("random_sign", 4, 6, 0), gen_workload("intervals", 6, 3)]:
        r = optimality_ratio(W.A, PP, math.inf, "bruteforce")
        assert 0 < r["ratio"] < math.inf
        assert 0 < optimality_ratio(W.A, PP, math.inf, "decomposition")["ratio"] < math.inf


def test_report_json():
    d = bruteforce_bounds(np.eye(2), 2).to_dict()
    assert d["spec_witness"]["k"] == 2
    assert dec_lowerbound(decompose(np.eye(2)), PP).to_dict()["n"] == "inf"
