import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from ou_haar import covariance as cov
from ou_haar.basis import BasisIndex, ProcessParams, basis_eval
from ou_haar.dyadic import DyadicRational
from ou_haar.errors import DomainError

mpmath.mp.dps = 40
UNIT = ProcessParams.wiener(1.0)
OU = ProcessParams.ou(1.0, 1.0)


@st.composite
def dyadics(draw, max_level=20):
    level = draw(st.integers(0, max_level))
    return DyadicRational(draw(st.integers(0, 1 << level)), level)


def mp_ou_cov(gamma, alpha, t, s):
    g, a = mpmath.mpf(gamma), mpmath.mpf(alpha)
    t, s = mpmath.mpf(float(t)), mpmath.mpf(float(s))
    m = min(t, s)
    # expm1 keeps the relative accuracy when min(t, s) is tiny
    return float(g / (2 * a) * mpmath.exp(-a * abs(t - s)) * -mpmath.expm1(-2 * a * m))


def test_wiener_exact_examples():
    assert cov.wiener_cov_exact(UNIT, 1.0, 1.0) == 1.0
    assert cov.wiener_cov_exact(ProcessParams.wiener(2.0), 0.25, 0.75) == 0.5
    assert cov.wiener_cov_exact(UNIT, 0.0, 0.4) == 0.0


def test_ou_exact_examples():
    assert cov.ou_cov_exact(ProcessParams.ou(2.0, 1.0), math.log(2), math.log(2)) == pytest.approx(0.75, rel=1e-15)
    assert cov.ou_cov_exact(OU, 0.0, 0.7) == 0.0
    assert cov.ou_cov_exact(OU, 0.7, 0.0) == 0.0
    tiny = ProcessParams.ou(1.0, 1e-8)
    assert cov.ou_cov_exact(tiny, 0.3, 0.8) == pytest.approx(0.3, rel=1e-6)


@given(st.floats(1e-6, 50.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_ou_exact_against_mpmath(alpha, t, s):
    expected = mp_ou_cov(1.0, alpha, t, s)
    assert cov.ou_cov_exact(ProcessParams.ou(1.0, alpha), t, s) == pytest.approx(expected, rel=1e-12, abs=1e-300)


def test_partial_sum_examples():
    assert cov.cov_partial_sum(UNIT, 0.5, 0.5, 1) == 0.5
    for params in (OU, ProcessParams.ou(3.0, 7.0)):
        for N in (2, 3, 10):
            assert cov.cov_partial_sum(params, 0.5, 0.75, N) == pytest.approx(
                cov.ou_cov_exact(params, 0.5, 0.75), rel=1e-12
            )
    f00 = BasisIndex(0, 0)
    assert cov.cov_partial_sum(OU, 0.3, 0.6, 0) == basis_eval(OU, f00, 0.3) * basis_eval(OU, f00, 0.6)
    with pytest.raises(DomainError):
        cov.cov_partial_sum(OU, 0.3, 0.6, cov.MAX_LEVEL + 1)


@given(dyadics(12), dyadics(12), st.sampled_from([0.0, 0.1, 1.0, 10.0]))
def test_partial_sum_terminates_at_dyadics(t, s, alpha):
    params = ProcessParams.ou(1.0, alpha)
    N = max(t.level, s.level)
    exact = cov.cov_exact(params, t, s)
    assert cov.cov_partial_sum(params, t, s, N) == pytest.approx(exact, rel=1e-12, abs=1e-300)
    assert cov.cov_partial_sum(params, t, s, N + 5) == cov.cov_partial_sum(params, t, s, N)


def test_telescope_trace_example():
    trace = cov.telescope_trace(OU, 0.25, 0.75)
    assert trace.n0 == 1
    expected = float(mpmath.sinh(0.25) ** 2)
    assert trace.v[0] == pytest.approx(expected, rel=1e-15)
    assert expected == pytest.approx(0.06381298260319039, rel=1e-14)


def test_telescope_trace_rejects_bad_pairs():
    with pytest.raises(DomainError):
        cov.telescope_trace(OU, 0.5, 0.5)
    with pytest.raises(DomainError):
        cov.telescope_trace(OU, 0.75, 0.25)
    with pytest.raises(DomainError):
        cov.telescope_trace(UNIT, 0.25, 0.75)


@given(dyadics(30), dyadics(30), st.sampled_from([0.1, 1.0, 10.0]))
def test_recurrence_residual(t, s, alpha):
    assume(t != s)
    t, s = min(t, s), max(t, s)
    trace = cov.telescope_trace(ProcessParams.ou(1.0, alpha), t, s)
    assert trace.max_residual < 1e-14


@given(dyadics(16), dyadics(16), st.sampled_from([0.1, 1.0, 5.0]))
def test_trace_telescopes_to_covariance(t, s, alpha):
    assume(t != s)
    t, s = min(t, s), max(t, s)
    params = ProcessParams.ou(1.0, alpha)
    trace = cov.telescope_trace(params, t, s)
    assert trace.u_series() == pytest.approx(trace.telescoped_series(), rel=1e-12, abs=1e-300)
    head = math.exp(-alpha) * math.sinh(alpha * float(t)) * math.sinh(alpha * float(s)) / math.sinh(alpha)
    rebuilt = params.gamma / alpha * (trace.u_series() + head)
    assert rebuilt == pytest.approx(cov.ou_cov_exact(params, t, s), rel=1e-12, abs=1e-300)


def test_flipped_cosh_exponent_breaks_recurrence():
    trace = cov.telescope_trace(OU, DyadicRational(5, 5), DyadicRational(7, 5), cosh_sign=+1)
    assert trace.max_residual > 1e-3


def test_telescoped_examples():
    assert cov.cov_telescoped(OU, 0.3, 0.6) == pytest.approx(cov.ou_cov_exact(OU, 0.3, 0.6), rel=1e-12)
    assert cov.cov_telescoped(OU, 0.0, 0.6) == 0.0
    assert abs(cov.cov_telescoped(OU, 1e-12, 0.6)) < 1e-11
    assert cov.cov_telescoped(OU, 0.5, 0.5) == pytest.approx(cov.ou_cov_exact(OU, 0.5, 0.5), rel=1e-14)


def test_variance_series():
    third = 1 / 3
    assert abs(cov.variance_series(OU, third, 30) - cov.ou_cov_exact(OU, third, third)) < 1e-8
    assert cov.variance_series(OU, 0.0, 10) == 0.0
    t = DyadicRational(5, 4)
    assert cov.variance_series(OU, t, 4) == pytest.approx(cov.ou_cov_exact(OU, t, t), rel=1e-14)


def test_tail_identity_examples():
    lhs, rhs = cov.tail_identity(1.0)
    assert rhs == pytest.approx(float(mpmath.exp(-1) / mpmath.sinh(1)), rel=1e-15)
    assert rhs == pytest.approx(0.3130352854993313, rel=1e-15)
    fifty = float(mpmath.fsum(1 / mpmath.sinh(2**n) for n in range(1, 51)))
    assert lhs == pytest.approx(fifty, rel=1e-15)

    lhs, rhs = cov.tail_identity(10.0)
    assert rhs == pytest.approx(float(mpmath.exp(-10) / mpmath.sinh(10)), rel=1e-15)
    assert abs(lhs - 1 / math.sinh(20)) / lhs < 1e-8
    with pytest.raises(DomainError):
        cov.tail_identity(0.0)


@pytest.mark.parametrize("alpha", [20.0, 50.0, 200.0])
def test_tail_identity_large_alpha_asymptotics(alpha):
    lhs, rhs = cov.tail_identity(alpha)
    assert lhs / (2 * math.exp(-2 * alpha)) == pytest.approx(1.0, rel=1e-8)
    assert lhs == pytest.approx(rhs, rel=1e-14)


def test_head_sum_examples():
    assert cov.head_sum(OU, 1.0, 1.0, 20) == pytest.approx(float(mpmath.exp(-1) * mpmath.sinh(1)), abs=1e-12)
    assert cov.head_sum(UNIT, 1.0, 1.0, 20) == pytest.approx(1.0, abs=1e-12)
    assert cov.head_sum(OU, 0.3, 0.6, 0) == basis_eval(OU, BasisIndex(0), 0.3) * basis_eval(OU, BasisIndex(0), 0.6)


def test_open_head_series_converges_with_geometric_tail():
    # ordinary elements only: for Wiener the partial sums are sum_{m=0}^{N} ts / 2^{m+1}
    for N in (0, 5, 20):
        assert cov.head_sum(UNIT, 0.5, 1.0, N, closed=False) == pytest.approx(0.5 * (1 - 2.0 ** -(N + 1)), rel=1e-15)
    # OU: the closed and open series differ by the tail beyond level -N, which the
    # tail identity sums to exp(-a 2^(N+1)) / sinh(a 2^(N+1)) times sinh(at) sinh(as) / a
    alpha, N, t, s = 0.05, 2, 0.4, 0.9
    params = ProcessParams.ou(1.0, alpha)
    gap = cov.head_sum(params, t, s, N) - cov.head_sum(params, t, s, N, closed=False)
    x = alpha * 2 ** (N + 1)
    expected = math.sinh(alpha * t) * math.sinh(alpha * s) / alpha * math.exp(-x) / math.sinh(x)
    assert gap == pytest.approx(expected, rel=1e-10)


def test_covariance_matrix_is_symmetric_psd():
    ts = np.random.default_rng(0).random(12)
    for fn in (cov.ou_cov_exact, cov.cov_telescoped):
        k = np.array([[fn(OU, float(a), float(b)) for b in ts] for a in ts])
        np.testing.assert_array_equal(k, k.T)
        assert np.linalg.eigvalsh(k).min() > -1e-10
