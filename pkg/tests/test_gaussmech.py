import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from geodp.decomposition import decompose, decompose_workload
from geodp.errors import UnsupportedError
from geodp.gaussmech import (GaussianMechanism, analytic_error, build_noise_spec, group_privacy,
                             run_gaussian, scale_reduction_wrap)
from geodp.workload import Histogram, PrivacyParams, gen_workload, make_rng

PP = PrivacyParams(1.0, math.exp(-2))


def _corpus():
    ws = [gen_workload("identity", d, d).A for d in (1, 2, 4, 7)]
    ws += [gen_workload("intervals", 10, 5, 1).A, gen_workload("marginals", 6, 8).A,
           gen_workload("random_sign", 6, 10, 2).A, gen_workload("random_counting", 9, 12, 3).A,
           gen_workload("hypergraph", 8, 9, 4).A]
    rng = np.random.default_rng(0)
    ws.append(rng.standard_normal((5, 2)) @ rng.standard_normal((2, 7)))
    return ws


def test_noise_magnitude():
    assert build_noise_spec(decompose(np.eye(1)), PP).c == pytest.approx(3.0, rel=1e-15)


def test_scalar_covariance_and_analytic_error():
    spec = build_noise_spec(decompose(np.eye(1)), PP)
    assert spec.covariance() == pytest.approx(np.array([[9.0]]))
    assert analytic_error(spec) == pytest.approx(9.0)


def test_doubling_workload_quadruples_error():
    A = gen_workload("random_counting", 5, 8, 1).A
    e1 = analytic_error(build_noise_spec(decompose(A), PP))
    e2 = analytic_error(build_noise_spec(decompose(2 * A), PP))
    assert e2 == pytest.approx(4 * e1, rel=1e-9)


def test_pure_privacy_unsupported():
    with pytest.raises(UnsupportedError):
        build_noise_spec(decompose(np.eye(2)), PrivacyParams(1.0, 0.0))


@pytest.mark.parametrize("idx", range(10))
def test_containment_certificate_on_corpus(idx):
    A = _corpus()[idx]
    spec = build_noise_spec(decompose_workload(A), PP)
    cert = spec.certificate()
    assert cert.max() <= 1 + 1e-9
    # second route: a_j^T M^+ a_j with M = k sum r_i^2 U_i U_i^T
    M = spec.stacked() @ spec.stacked().T
    alt = np.einsum("ij,ij->j", A, np.linalg.pinv(M) @ A)
    assert np.allclose(cert, alt, atol=1e-8)


def test_identity_four_certificate():
    spec = build_noise_spec(decompose(np.eye(4)), PP)
    assert spec.k == 3
    assert np.all(spec.certificate(np.eye(4)) <= 1 + 1e-9)


def test_zero_histogram_answer_is_noise():
    spec = build_noise_spec(decompose(np.eye(3)), PP)
    ans = run_gaussian(spec, Histogram(np.zeros(3), 0))
    assert np.array_equal(ans.y_tilde, ans.noise)


def test_seed_determinism():
    spec = build_noise_spec(decompose(gen_workload("random_sign", 4, 6, 0).A), PP)
    x = Histogram([1, 0, 2, 0, 0, 1], 4)
    a, b = run_gaussian(spec, x, seed=11), run_gaussian(spec, x, seed=11)
    assert np.array_equal(a.y_tilde, b.y_tilde)
    assert not np.array_equal(a.y_tilde, run_gaussian(spec, x, seed=12).y_tilde)
    assert np.allclose(a.y_tilde - a.noise, spec.dec.source @ x.x)


@pytest.mark.parametrize("d", [2, 4])
def test_monte_carlo_error_matches_closed_form(d):
    spec = build_noise_spec(decompose(np.eye(d)), PP)
    W = spec.sample(make_rng(7), 10**5)
    emp = np.mean(np.sum(W ** 2, axis=1))
    assert emp == pytest.approx(analytic_error(spec), rel=0.03)


def test_unbiased_and_covariance():
    A = gen_workload("random_counting", 5, 9, 2).A
    spec = build_noise_spec(decompose(A), PP)
    n = 10**5
    W = spec.sample(make_rng(3), n)
    Sigma = spec.covariance()
    sd = np.sqrt(np.diag(Sigma))
    assert np.all(np.abs(W.mean(axis=0)) <= 4 * sd / math.sqrt(n))
    emp = W.T @ W / n
    assert np.linalg.norm(emp - Sigma) / np.linalg.norm(Sigma) <= 0.05


def test_group_privacy_bookkeeping():
    pp = PrivacyParams(0.5, 1e-6)
    out = group_privacy(pp, 3)
    assert out.epsilon == 1.5
    assert out.delta == pytest.approx(1e-6 * (math.exp(1.5) - 1) / (math.exp(0.5) - 1), rel=1e-14)
    mech = GaussianMechanism.from_workload(np.eye(2), pp)
    assert scale_reduction_wrap(mech, 1) is mech
    assert scale_reduction_wrap(mech, 3).privacy == out


def test_scale_wrapper_error_ratio():
    pp = PrivacyParams(1.0, 1e-3)
    mech = GaussianMechanism.from_workload(np.eye(2), pp)
    wrapped = scale_reduction_wrap(mech, 2)
    n = 10**5
    y = np.array([0.5, 0.0])
    base = mech.sample_noise(n, make_rng(1))
    inner = np.array([mech.answer_from_noise(2 * y, w) for w in base])
    inner_err = np.mean(np.sum((inner - 2 * y) ** 2, axis=1))
    Ww = wrapped.sample_noise(n, make_rng(2))
    outer = np.array([wrapped.answer_from_noise(y, w) for w in Ww])
    outer_err = np.mean(np.sum((outer - y) ** 2, axis=1))
    assert outer_err / inner_err == pytest.approx(0.25, rel=0.05)


@given(st.integers(0, 10**6), st.integers(1, 5), st.integers(0, 4))
def test_certificate_property(seed, d, extra):
    A = np.random.default_rng(seed).standard_normal((d, d + extra))
    spec = build_noise_spec(decompose(A), PP)
    assert spec.certificate().max() <= 1 + 1e-9
    assert np.all(np.linalg.eigvalsh(spec.covariance()) > 0)
