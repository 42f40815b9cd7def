import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from geodp.calibration import constant
from geodp.discrepancy import (MedianMechanism, approx_budget, default_repetitions, disc_bruteforce,
                               herdisc_approx, herdisc_bruteforce, hypergraph_instance, median_linf_mechanism,
                               minimax_weights)
from geodp.errors import BudgetExceededError, ConfigurationError, InputError
from geodp.workload import Histogram, PrivacyParams, gen_workload, make_rng
from oracles import disc_enumerate, herdisc_enumerate

PP = PrivacyParams(1.0, 1e-6)


def test_disc_examples():
    assert disc_bruteforce(np.eye(2))[0] == 1
    val, x = disc_bruteforce(np.array([[1.0, 1.0]]))
    assert val == 0 and x[0] == -x[1]
    H = hypergraph_instance(10, 8, True, 3).A
    val, x = disc_bruteforce(H)
    assert val <= 2 and np.abs(H @ x).max() == val


@given(st.integers(0, 10**6), st.integers(1, 4), st.integers(1, 7))
def test_disc_matches_enumeration(seed, d, N):
    A = np.random.default_rng(seed).integers(-2, 3, size=(d, N)).astype(float)
    val, x = disc_bruteforce(A)
    assert val == pytest.approx(disc_enumerate(A))
    assert set(np.unique(x)) <= {-1, 1}
    assert np.abs(A @ x).max() == pytest.approx(val)


@given(st.integers(0, 10**6), st.integers(1, 3), st.integers(1, 6))
def test_herdisc_matches_enumeration_and_dominates_disc(seed, d, N):
    A = np.random.default_rng(seed).integers(0, 2, size=(d, N)).astype(float)
    rep = herdisc_bruteforce(A)
    assert rep.herdisc_exact == pytest.approx(herdisc_enumerate(A))
    assert disc_bruteforce(A)[0] <= rep.herdisc_exact
    S = list(rep.witness_subset)
    assert disc_bruteforce(A[:, S])[0] == pytest.approx(rep.herdisc_exact)


def test_herdisc_examples():
    for d in (1, 3, 6):
        assert herdisc_bruteforce(np.eye(d)).herdisc_exact == 1
    assert herdisc_bruteforce(gen_workload("intervals", 15, 5).A).herdisc_exact <= 1
    H = hypergraph_instance(12, 9, True, 1).A
    assert herdisc_bruteforce(H).herdisc_exact <= 2
    assert herdisc_bruteforce(hypergraph_instance(1, 5, True, 0).A).herdisc_exact <= 2


def test_herdisc_monotone_under_column_deletion():
    A = gen_workload("random_counting", 5, 9, 4).A
    full = herdisc_bruteforce(A).herdisc_exact
    rng = np.random.default_rng(0)
    for _ in range(10):
        S = np.sort(rng.choice(9, size=rng.integers(1, 9), replace=False))
        assert herdisc_bruteforce(A[:, S]).herdisc_exact <= full


def test_size_limits():
    with pytest.raises(BudgetExceededError):
        disc_bruteforce(np.ones((1, 25)))
    with pytest.raises(BudgetExceededError):
        herdisc_bruteforce(np.ones((1, 17)))


def test_minimax_invariants_and_examples():
    mw = minimax_weights(np.ones((4, 3)), PP, rounds=200)
    assert np.abs(mw.p - 0.25).max() <= 0.05
    for p in mw.iterates + (mw.p,):
        assert abs(p.sum() - 1) <= 1e-12 and p.min() >= 0
    assert np.trace(mw.P @ mw.P) == pytest.approx(1.0, abs=1e-12)
    assert minimax_weights(np.array([[1.0, 2.0]]), PP).p.tolist() == [1.0]
    p = minimax_weights(np.diag([10.0, 1.0]), PP).p
    assert p[0] > p[1]


def test_minimax_deterministic():
    A = gen_workload("random_sign", 4, 6, 1).A
    assert np.array_equal(minimax_weights(A, PP, 30).p, minimax_weights(A, PP, 30).p)


def test_median_single_run_and_noise_free_limit():
    A = gen_workload("random_counting", 5, 7, 2).A
    y = A @ np.ones(7)
    mech = MedianMechanism(A, PP, 1)
    w = mech.sample_noise(1, make_rng(0))[0]
    assert np.array_equal(mech.answer_from_noise(y, w), y + w[0])
    out = median_linf_mechanism(A, PrivacyParams(1e12, 1e-6), Histogram(np.ones(7), 7), L=3, seed=1)
    assert np.allclose(out.y_tilde, y, atol=1e-6)
    assert out.meta["L"] == 3
    with pytest.raises(InputError):
        MedianMechanism(A, PP, 2)


def test_median_privacy_split():
    mech = MedianMechanism(np.eye(3), PP, 5)
    assert mech.run_pp.epsilon == pytest.approx(0.2) and mech.run_pp.delta == pytest.approx(2e-7)
    assert default_repetitions(16) == 2 * math.ceil(math.log(17)) + 1


def test_median_linf_yardstick():
    W = gen_workload("random_counting", 16, 32, 9)
    mech = MedianMechanism(W.A, PP, 9)
    y = np.zeros(16)
    errs = [np.abs(mech.answer_from_noise(y, w)).max() for w in mech.sample_noise(1000, make_rng(17))]
    yard = math.sqrt(2 * math.log(16)) * mech.coordinate_rms().max()
    assert np.mean(errs) <= 3 * yard
    assert np.mean(errs) <= constant("median_linf") * yard


@pytest.mark.parametrize("A", [np.eye(4), gen_workload("intervals", 36, 8).A])
def test_sandwich_examples(A):
    exact = herdisc_bruteforce(A).herdisc_exact
    rep = herdisc_approx(A, exact=exact)
    assert rep.lower_estimate <= rep.upper_estimate + 1e-9
    assert rep.lower_estimate <= constant("c_cal") * exact
    assert exact <= constant("c_cal_prime") * rep.upper_estimate
    assert rep.measured_factor <= rep.approx_factor_budget


def test_sandwich_homogeneity():
    A = gen_workload("random_counting", 5, 7, 3).A
    a, b = herdisc_approx(A, rounds=40), herdisc_approx(3 * A, rounds=40)
    assert b.lower_estimate == pytest.approx(3 * a.lower_estimate, rel=1e-6)
    assert b.upper_estimate == pytest.approx(3 * a.upper_estimate, rel=1e-6)


def test_approx_budget_floors():
    assert approx_budget(1, 1) == 1.0
    assert approx_budget(16, 8) == pytest.approx(16 * 3 * math.sqrt(math.log2(math.log2(18))))


def test_hypergraph_generator():
    a, b = hypergraph_instance(8, 7, True, 5), hypergraph_instance(8, 7, True, 5)
    assert np.array_equal(a.A, b.A)
    assert np.all(a.A.sum(axis=1) == 3)
    assert len({tuple(r) for r in a.A}) == 8
    assert not np.array_equal(a.A, hypergraph_instance(8, 7, True, 6).A)
    with pytest.raises(ConfigurationError):
        hypergraph_instance(5, 2)
    with pytest.raises(ConfigurationError):
        hypergraph_instance(100, 6, True)
    with pytest.raises(ConfigurationError):
        hypergraph_instance(0, 6)


def test_report_json():
    rep = herdisc_bruteforce(np.eye(2)).to_dict()
    assert rep["herdisc_exact"] == 1
