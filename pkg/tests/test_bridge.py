import math

import mpmath
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from ou_haar.basis import ProcessParams
from ou_haar.bridge import (
    Conditioning,
    conditional_density_check,
    midpoint_rule,
    ou_bridge,
    ou_transition_density,
    transition_stats,
    wiener_bridge,
    wiener_transition_density,
)
from ou_haar.errors import DomainError

UNIT = ProcessParams.wiener(1.0)
OU = ProcessParams.ou(1.0, 1.0)


def test_wiener_transition_peak():
    peak = 1 / math.sqrt(2 * math.pi)
    assert wiener_transition_density(UNIT, 0.0, 0.0, 1.0, 0.0) == pytest.approx(peak, rel=1e-15)
    assert wiener_transition_density(ProcessParams.wiener(2.0), 0.25, 0.0, 0.75, 0.0) == pytest.approx(peak, rel=1e-15)


def test_ou_transition_variance():
    _, var = transition_stats(ProcessParams.ou(2.0, 1.0), 0.0, 0.0, math.log(2.0))
    assert var == pytest.approx(0.75, rel=1e-15)


def test_ou_transition_stationary_limit():
    for alpha in (50.0, 200.0, 600.0):
        params = ProcessParams.ou(2.0 * alpha * 0.3, alpha)
        _, var = transition_stats(params, 0.0, 0.0, 0.9)
        assert var == pytest.approx(0.3, rel=1e-12)


def test_ou_transition_density_tends_to_wiener():
    params = ProcessParams.ou(1.0, 1e-9)
    assert ou_transition_density(params, 0.1, 0.2, 0.7, -0.4) == pytest.approx(
        wiener_transition_density(UNIT, 0.1, 0.2, 0.7, -0.4), rel=1e-8
    )


@pytest.mark.parametrize("fn", [wiener_transition_density, ou_transition_density])
def test_transition_rejects_backward_time(fn):
    with pytest.raises(DomainError):
        fn(OU, 0.5, 0.0, 0.5, 0.0)


def test_conditioning_order():
    with pytest.raises(DomainError):
        Conditioning(0.0, 0.0, 1.0)
    with pytest.raises(DomainError):
        Conditioning(0.2, 0.6, 0.4)


def test_wiener_bridge_examples():
    stats = wiener_bridge(UNIT, Conditioning(0.0, 0.5, 1.0))
    assert (stats.mean, stats.std) == (0.0, 0.5)
    assert wiener_bridge(UNIT, Conditioning(0.1, 0.3, 0.9, 1.7, 1.7)).mean == pytest.approx(1.7, rel=1e-15)
    assert stats.pdf(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi * 0.25), rel=1e-15)


def test_ou_bridge_midpoint_std():
    stats = ou_bridge(OU, Conditioning(0.0, 0.5, 1.0))
    assert stats.mean == 0.0
    assert stats.std == pytest.approx(float(mpmath.sinh(0.5) / mpmath.sqrt(mpmath.sinh(1))), rel=1e-15)


def test_ou_bridge_mean_weights():
    # x = 1, z = 0 at the midpoint of [0, 1]: sinh(1/2) / sinh(1)
    stats = ou_bridge(OU, Conditioning(0.0, 0.5, 1.0, 1.0, 0.0))
    assert stats.mean == pytest.approx(float(mpmath.sinh(0.5) / mpmath.sinh(1)), rel=1e-15)
    assert stats.mean == pytest.approx(0.443409441985037, rel=1e-14)


def test_ou_bridge_tiny_alpha_is_wiener():
    cond = Conditioning(0.2, 0.45, 0.9, 0.3, -1.1)
    a = ou_bridge(ProcessParams.ou(1.0, 1e-8), cond)
    b = wiener_bridge(UNIT, cond)
    assert a.mean == pytest.approx(b.mean, rel=1e-6)
    assert a.std == pytest.approx(b.std, rel=1e-6)


def test_ou_bridge_error_is_order_alpha():
    cond = Conditioning(0.0, 0.3, 1.0, 0.5, 0.2)
    ref = wiener_bridge(UNIT, cond)
    errs = []
    for alpha in (1e-2, 1e-4, 1e-6):
        s = ou_bridge(ProcessParams.ou(1.0, alpha), cond)
        errs.append(max(abs(s.mean - ref.mean), abs(s.std - ref.std)))
        assert errs[-1] <= alpha
    assert errs[0] > errs[1] > errs[2]


def test_bridge_std_degenerates_monotonically():
    stds = [ou_bridge(OU, Conditioning(0.0, d, 1.0)).std for d in (1e-2, 1e-4, 1e-6, 1e-8)]
    assert all(a > b for a, b in zip(stds, stds[1:]))
    stds = [ou_bridge(OU, Conditioning(0.0, 1.0 - d, 1.0)).std for d in (1e-2, 1e-4, 1e-6, 1e-8)]
    assert all(a > b for a, b in zip(stds, stds[1:]))
    assert stds[-1] < 1e-3


def test_density_check_matches_bridge_peak():
    cond = Conditioning(0.1, 0.4, 0.8, 0.3, -0.2)
    stats = ou_bridge(OU, cond)
    assert conditional_density_check(OU, cond, stats.mean) == pytest.approx(stats.pdf(stats.mean), rel=1e-12)
    assert conditional_density_check(UNIT, Conditioning(0.0, 0.5, 1.0), 0.0) == pytest.approx(
        0.7978845608028654, rel=1e-14
    )


@given(
    st.floats(0.1, 5.0),
    st.one_of(st.just(0.0), st.floats(1e-3, 20.0)),
    st.floats(0.0, 1.0),
    st.floats(0.0, 1.0),
    st.floats(0.0, 1.0),
    st.floats(-3, 3),
    st.floats(-3, 3),
    st.floats(-3, 3),
)
def test_bridge_is_bayes_consistent(gamma, alpha, a, b, c, x, z, u):
    tx, ty, tz = sorted((a, b, c))
    assume(ty - tx > 1e-3 and tz - ty > 1e-3)
    params = ProcessParams.ou(gamma, alpha)
    cond = Conditioning(tx, ty, tz, x, z)
    stats = ou_bridge(params, cond)
    y = stats.mean + u * stats.std
    assert conditional_density_check(params, cond, y) == pytest.approx(stats.pdf(y), rel=1e-9)


def test_midpoint_rule():
    w, s = midpoint_rule(OU, 0)
    assert w == pytest.approx(float(mpmath.sinh(0.5) / mpmath.sinh(1)), rel=1e-15)
    assert s == pytest.approx(float(mpmath.sinh(0.5) / mpmath.sqrt(mpmath.sinh(1))), rel=1e-15)
    assert midpoint_rule(UNIT, 3) == (0.5, math.sqrt(2.0**-3 / 4))
