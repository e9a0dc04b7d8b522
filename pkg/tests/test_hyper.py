import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ou_haar import _hyper

mpmath.mp.dps = 40


def mp_profile(alpha, x, span, decay=0.0):
    a, x, span = mpmath.mpf(alpha), mpmath.mpf(x), mpmath.mpf(span)
    return float(mpmath.exp(-a * decay) * mpmath.sinh(a * x) / mpmath.sqrt(a * mpmath.sinh(a * span)))


@pytest.mark.parametrize("y", [0.0, 1e-9, 1e-5, 9.9e-5, 1e-4, 0.3, 2.0, 29.0, 31.0, 400.0])
def test_sinhc_matches_high_precision(y):
    expected = 1.0 if y == 0 else float(mpmath.sinh(y) / y) if y < 700 else math.inf
    assert _hyper.sinhc(y) == pytest.approx(expected, rel=2e-16, abs=0)


@pytest.mark.parametrize("y", [1e-6, 0.5, 25.0, 31.0, 1000.0, 1e5])
def test_log_sinhc_is_finite_for_large_arguments(y):
    expected = float(mpmath.log(mpmath.sinh(y) / y))
    assert _hyper.log_sinhc(y) == pytest.approx(expected, rel=1e-14, abs=1e-16)


@given(
    st.floats(1e-3, 200.0),
    st.floats(0.01, 1.0),
    st.floats(0.0, 1.0),
)
def test_sinh_profile_against_mpmath(alpha, span, frac):
    x = span * frac
    assert _hyper.sinh_profile(alpha, x, span) == pytest.approx(mp_profile(alpha, x, span), rel=1e-13, abs=1e-300)


def test_sinh_profile_alpha_zero_is_tent():
    assert _hyper.sinh_profile(0.0, 0.25, 0.5) == 0.25 / math.sqrt(0.5)
    assert _hyper.sinh_profile(3.0, 0.0, 0.5) == 0.0


def test_sinh_profile_survives_large_alpha():
    value = _hyper.sinh_profile(700.0, 1.0, 1.0, decay=0.5)
    assert value == pytest.approx(mp_profile(700.0, 1.0, 1.0, 0.5), rel=1e-13)


def test_sinh_profile_array_matches_scalar():
    xs = np.linspace(0.0, 0.25, 101)
    for alpha in (0.0, 1e-7, 1.0, 50.0, 600.0):
        arr = _hyper.sinh_profile_array(alpha, xs, 0.5)
        scalar = [_hyper.sinh_profile(alpha, float(x), 0.5) for x in xs]
        np.testing.assert_allclose(arr, scalar, rtol=1e-14, atol=0)


def test_sinh_quotient():
    assert _hyper.sinh_quotient(0.0, (0.25, 0.5), (1.0,)) == 0.125
    assert _hyper.sinh_quotient(2.0, (0.0, 0.5), (1.0,)) == 0.0
    expected = float(mpmath.sinh(20) * mpmath.sinh(30) / mpmath.sinh(40) / 10)
    assert _hyper.sinh_quotient(10.0, (2.0, 3.0), (4.0,)) == pytest.approx(expected, rel=1e-14)


def test_one_minus_exp_over():
    assert _hyper.one_minus_exp_over(0.0) == 1.0
    for y in (1e-12, 1e-3, 1.0, 50.0):
        assert _hyper.one_minus_exp_over(y) == pytest.approx(float(-mpmath.expm1(-y) / y), rel=1e-15)
