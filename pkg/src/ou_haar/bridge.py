"""Transition densities and two-point bridge laws for the Wiener and OU processes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from . import _hyper
from .basis import ProcessParams
from .errors import DomainError

__all__ = [
    "BridgeStats",
    "Conditioning",
    "transition_stats",
    "wiener_transition_density",
    "ou_transition_density",
    "transition_logdensity",
    "wiener_bridge",
    "ou_bridge",
    "bridge",
    "conditional_density_check",
    "midpoint_rule",
]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _gauss_logpdf(y: float, mean: float, var: float) -> float:
    return -_LOG_SQRT_2PI - 0.5 * math.log(var) - 0.5 * (y - mean) ** 2 / var


@dataclass(frozen=True)
class BridgeStats:
    mean: float
    std: float

    def logpdf(self, y: float) -> float:
        return _gauss_logpdf(y, self.mean, self.std * self.std)

    def pdf(self, y: float) -> float:
        return math.exp(self.logpdf(y))


@dataclass(frozen=True)
class Conditioning:
    """Endpoint values x at t_x and z at t_z, queried at t_x < t_y < t_z."""

    t_x: float
    t_y: float
    t_z: float
    x: float = 0.0
    z: float = 0.0

    def __post_init__(self):
        if not self.t_x < self.t_y < self.t_z:
            raise DomainError(
                f"need t_x < t_y < t_z, got ({self.t_x}, {self.t_y}, {self.t_z})"
            )


def transition_stats(params: ProcessParams, t0: float, x0: float, t: float) -> tuple[float, float]:
    """Mean and variance of X_t given X_{t0} = x0.

    OU variance is (gamma / 2 alpha)(1 - exp(-2 alpha (t - t0))).
    """
    if not t > t0:
        raise DomainError(f"need t > t0, got t0={t0}, t={t}")
    dt = t - t0
    if params.is_wiener:
        return x0, params.gamma * dt
    alpha = params.alpha
    var = params.gamma * dt * _hyper.one_minus_exp_over(2.0 * alpha * dt)
    return x0 * math.exp(-alpha * dt), var


def transition_logdensity(params: ProcessParams, t0: float, x0: float, t: float, x: float) -> float:
    mean, var = transition_stats(params, t0, x0, t)
    return _gauss_logpdf(x, mean, var)


def wiener_transition_density(params: ProcessParams, t0: float, x0: float, t: float, x: float) -> float:
    if not t > t0:
        raise DomainError(f"need t > t0, got t0={t0}, t={t}")
    return math.exp(_gauss_logpdf(x, x0, params.gamma * (t - t0)))


def ou_transition_density(params: ProcessParams, t0: float, x0: float, t: float, x: float) -> float:
    return math.exp(transition_logdensity(params, t0, x0, t, x))


def wiener_bridge(params: ProcessParams, cond: Conditioning) -> BridgeStats:
    left = cond.t_y - cond.t_x
    right = cond.t_z - cond.t_y
    span = cond.t_z - cond.t_x
    mean = (right * cond.x + left * cond.z) / span
    var = params.gamma * left * right / span
    return BridgeStats(mean, math.sqrt(var))


def ou_bridge(params: ProcessParams, cond: Conditioning) -> BridgeStats:
    """Midpoint law of the OU bridge; alpha == 0 is routed to :func:`wiener_bridge`."""
    if params.is_wiener:
        return wiener_bridge(params, cond)
    alpha = params.alpha
    left = cond.t_y - cond.t_x
    right = cond.t_z - cond.t_y
    span = cond.t_z - cond.t_x
    w_x = _hyper.sinh_quotient(alpha, (right,), (span,))
    w_z = _hyper.sinh_quotient(alpha, (left,), (span,))
    var = params.gamma * _hyper.sinh_quotient(alpha, (left, right), (span,))
    return BridgeStats(w_x * cond.x + w_z * cond.z, math.sqrt(var))


def bridge(params: ProcessParams, cond: Conditioning) -> BridgeStats:
    return ou_bridge(params, cond)


def conditional_density_check(params: ProcessParams, cond: Conditioning, y: float) -> float:
    """P(X_{t_y} = y | x, z) from the Markov product of transition densities.

    Meant as an independent oracle for :func:`bridge`; it never looks at the
    closed-form bridge statistics.
    """
    log_p = (
        transition_logdensity(params, cond.t_x, cond.x, cond.t_y, y)
        + transition_logdensity(params, cond.t_y, y, cond.t_z, cond.z)
        - transition_logdensity(params, cond.t_x, cond.x, cond.t_z, cond.z)
    )
    return math.exp(log_p)


@lru_cache(maxsize=512)
def midpoint_rule(params: ProcessParams, level: int) -> tuple[float, float]:
    """Weight w and std s such that the midpoint of a D_level segment is w*(x+z) + s*xi.

    Both endpoint weights coincide at the midpoint, so a single weight suffices.
    """
    h = math.ldexp(1.0, -level)
    stats = bridge(params, Conditioning(0.0, 0.5 * h, h, 1.0, 0.0))
    return stats.mean, stats.std
