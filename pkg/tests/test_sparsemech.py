import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from geodp.decomposition import decompose, decompose_workload
from geodp.gauge import PolytopeView, alpha_T, dual_norm
from geodp.gaussmech import build_noise_spec, run_gaussian
from geodp.sparsemech import LSEMechanism, SimpleLSEMechanism, run_lse, run_simple_lse, split_level
from geodp.workload import Histogram, PrivacyParams, gen_workload, make_rng

PP = PrivacyParams(1.0, 1e-6)


def test_split_examples_identity_four():
    dec = decompose(np.eye(4))
    t, X, Y = split_level(dec, PP, 1.0)
    assert t == 3 and Y.shape == (4, 0)
    # strictly above the leading dimension: no level qualifies
    t, X, Y = split_level(dec, PP, 2.5)
    assert t == 0 and X.shape == (4, 0)
    t, X, Y = split_level(dec, PP, 2.0)
    assert t == 1 and X.shape == (4, 2)


@given(st.integers(0, 10**6), st.integers(1, 7), st.floats(0.01, 10))
def test_split_complements(seed, d, n):
    A = np.random.default_rng(seed).standard_normal((d, d + 3))
    dec = decompose(A)
    t, X, Y = split_level(dec, PP, n)
    assert 0 <= t <= dec.k
    assert np.allclose(X @ X.T + Y @ Y.T, np.eye(d), atol=1e-8)
    for i, di in enumerate(dec.dims, start=1):
        if i <= t:
            continue
        assert di < PP.epsilon * n


def test_zero_split_is_bitwise_gaussian():
    A = gen_workload("random_counting", 8, 12, 3).A
    dec = decompose(A)
    x = Histogram(np.eye(12)[0] * 10, 10)
    assert split_level(dec, PP, 10)[0] == 0
    g = run_gaussian(build_noise_spec(dec, PP), x, seed=4)
    l = run_lse(dec, PP, x, seed=4)
    assert np.array_equal(g.y_tilde, l.y_tilde)
    assert l.meta["t"] == 0


def test_tiny_n_limit():
    A = gen_workload("random_counting", 8, 12, 3).A
    n = 1e-9
    ans = run_lse(decompose(A), PP, Histogram(np.zeros(12), n), seed=1)
    assert np.linalg.norm(ans.y_tilde) <= n * np.linalg.norm(A, axis=0).max() * (1 + 1e-9)


def test_pythagorean_split_and_noise_equality():
    A = gen_workload("random_counting", 16, 24, 1).A
    dec = decompose(A)
    mech = LSEMechanism(dec, PP, 2.0)
    assert 0 < mech.t < dec.k
    x = np.zeros(24)
    x[[1, 5]] = 1
    y = A @ x
    W = mech.sample_noise(30, make_rng(9))
    G = build_noise_spec(dec, PP).sample(make_rng(9), 30)
    assert np.array_equal(W, G)
    X, Y = mech.X, mech.Y
    for w in W:
        out = mech.answer_from_noise(y, w)
        lhs = np.sum((out - y) ** 2)
        y1_hat = X @ (X.T @ out)
        rhs = np.sum((y1_hat - X @ X.T @ y) ** 2) + np.sum((Y @ Y.T @ (y + w) - Y @ Y.T @ y) ** 2)
        assert lhs == pytest.approx(rhs, rel=1e-6)


def test_run_diagnostics():
    A = gen_workload("random_counting", 16, 24, 1).A
    x = Histogram(np.eye(24)[3] * 2, 2)
    ans = run_lse(decompose(A), PP, x, seed=0)
    m = ans.meta
    assert m["mechanism"] == "lse" and m["certified"]
    assert m["gap"] <= m["alpha"]
    assert m["dual_norm_x"] >= 0
    assert np.allclose(ans.y_tilde - ans.noise, A @ x.x)


def _paired_errors(mech, gauss_spec, y, trials, seed):
    W = mech.sample_noise(trials, make_rng(seed))
    e_lse = np.array([np.sum((mech.answer_from_noise(y, w) - y) ** 2) for w in W])
    e_g = np.sum(W ** 2, axis=1)
    return e_lse, e_g


@pytest.mark.parametrize("mode", ["lse", "simple"])
def test_projection_never_hurts_on_feasible_truth(mode):
    A = gen_workload("random_counting", 12, 20, 2).A
    n = 3.0
    x = np.zeros(20)
    x[[0, 7]] = [2.0, 1.0]
    y = A @ x
    if mode == "lse":
        mech = LSEMechanism(decompose(A), PP, n)
        L = PolytopeView(mech.GX, n)
    else:
        mech = SimpleLSEMechanism(A, PP, n)
        L = PolytopeView(A, n)
    W = mech.sample_noise(1000, make_rng(5))
    e_proj = np.mean([np.sum((mech.answer_from_noise(y, w) - y) ** 2) for w in W])
    e_raw = np.mean(np.sum(W ** 2, axis=1))
    assert e_proj <= e_raw + alpha_T(L, mech.T)


def test_lse_beats_gaussian_paired_small():
    A = gen_workload("random_counting", 32, 64, 3).A
    dec = decompose(A)
    mech = LSEMechanism(dec, PP, 4.0)
    x = np.zeros(64)
    x[[2, 9, 11, 40]] = 1
    e_lse, e_g = _paired_errors(mech, None, A @ x, 200, 1)
    assert e_lse.mean() < e_g.mean()


def test_simple_lse_identity_structure():
    n = 2.0
    mech = SimpleLSEMechanism(np.eye(3), PP, n)
    assert mech.r == 1.0 and mech.sigma == pytest.approx(PP.c)
    ans = run_simple_lse(np.eye(3), PP, Histogram([2.0, 0, 0], n), seed=3)
    assert np.abs(ans.y_tilde).sum() <= n * (1 + 1e-9)


def test_simple_lse_vertex_certificate():
    A = gen_workload("random_counting", 10, 16, 0).A
    n = 3.0
    mech = SimpleLSEMechanism(A, PP, n)
    L = PolytopeView(A, n)
    y = n * A[:, 4]
    for w in mech.sample_noise(200, make_rng(2)):
        out = mech.answer_from_noise(y, w)
        assert np.sum((out - y) ** 2) <= 4 * dual_norm(L, w) + alpha_T(L, mech.T)


def test_simple_lse_error_yardstick():
    W = gen_workload("random_counting", 32, 64, 11)
    n = 2.0
    mech = SimpleLSEMechanism(W.A, PP, n)
    x = np.zeros(64)
    x[[3, 17]] = 1
    y = W.A @ x
    noise = mech.sample_noise(200, make_rng(21))
    err = np.mean([np.sum((mech.answer_from_noise(y, w) - y) ** 2) for w in noise])
    assert err <= 8 * n * mech.r ** 2 * PP.c * math.sqrt(math.log(64)) * 4


def test_simple_lse_warns_outside_unit_interval():
    with pytest.warns(UserWarning):
        SimpleLSEMechanism(np.array([[2.0, -1.0]]), PP, 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        SimpleLSEMechanism(np.array([[1.0, 0.0]]), PP, 1.0)


def test_declared_n_used_not_true_norm():
    A = gen_workload("random_counting", 6, 8, 1).A
    x = Histogram(np.zeros(8), 5.0)
    assert run_lse(decompose_workload(A), PP, x, seed=0).meta["n"] == 5.0
