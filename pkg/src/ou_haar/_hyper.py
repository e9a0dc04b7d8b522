"""Overflow- and cancellation-safe hyperbolic helpers.

Everything here is written in terms of ``sinhc(y) = sinh(y) / y`` so that the
``alpha -> 0`` limit is reached smoothly (``sinhc(0) == 1``) and the Wiener
formulas are recovered without a 0/0.  Large arguments go through logs.
"""

from __future__ import annotations

import math

import numpy as np

# Below this |y| the 3-term Taylor series of sinh(y)/y is exact to double precision.
TAYLOR_CUTOFF = 1e-4
# Above this argument products of sinh are assembled in log space.
LOG_CUTOFF = 30.0
# Largest mean-reversion rate accepted by ProcessParams.
MAX_ALPHA = 700.0

_LOG2 = math.log(2.0)


def sinhc(y: float) -> float:
    if abs(y) < TAYLOR_CUTOFF:
        y2 = y * y
        return 1.0 + y2 / 6.0 + y2 * y2 / 120.0
    return math.sinh(y) / y


def log_sinhc(y: float) -> float:
    """log(sinh(y)/y) for y >= 0, finite for arbitrarily large y."""
    if y < LOG_CUTOFF:
        return math.log(sinhc(y))
    return y - _LOG2 - math.log(y) + math.log1p(-math.exp(-2.0 * y))


def sinh_quotient(alpha: float, num: tuple[float, ...], den: tuple[float, ...]) -> float:
    """prod sinh(alpha*a) / prod sinh(alpha*b), rescaled by alpha**(len(den) - len(num)).

    The rescaling makes the ``alpha == 0`` value ``prod(a) / prod(b)``.  All
    arguments must be non-negative; a zero in ``num`` yields an exact 0.0.
    """
    base = math.prod(num) / math.prod(den)
    if base == 0.0:
        return 0.0
    if alpha * max(max(num), max(den)) < LOG_CUTOFF:
        top = math.prod(sinhc(alpha * a) for a in num)
        bottom = math.prod(sinhc(alpha * b) for b in den)
        return base * top / bottom
    log_ratio = sum(log_sinhc(alpha * a) for a in num) - sum(log_sinhc(alpha * b) for b in den)
    return base * math.exp(log_ratio)


def sinh_profile(alpha: float, x: float, span: float, decay: float = 0.0) -> float:
    """exp(-alpha*decay) * sinh(alpha*x) / sqrt(alpha * sinh(alpha*span)).

    This is the shape shared by every Ornstein-Uhlenbeck basis element; at
    ``alpha == 0`` it reduces to the Schauder tent value ``x / sqrt(span)``.
    ``x == 0`` returns an exact 0.0 regardless of the other arguments.
    """
    if x == 0.0:
        return 0.0
    if alpha * span < LOG_CUTOFF:
        value = x / math.sqrt(span) * sinhc(alpha * x) / math.sqrt(sinhc(alpha * span))
        return value * math.exp(-alpha * decay) if decay else value
    log_value = (
        math.log(x)
        - 0.5 * math.log(span)
        - alpha * decay
        + log_sinhc(alpha * x)
        - 0.5 * log_sinhc(alpha * span)
    )
    return math.exp(log_value)


def one_minus_exp_over(y: float) -> float:
    """(1 - exp(-y)) / y, equal to 1 at y = 0."""
    if y < 1e-8:
        return 1.0 - 0.5 * y
    return -math.expm1(-y) / y


def sinhc_array(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    small = np.abs(y) < TAYLOR_CUTOFF
    safe = np.where(small, 1.0, y)
    y2 = y * y
    return np.where(small, 1.0 + y2 / 6.0 + y2 * y2 / 120.0, np.sinh(safe) / safe)


def log_sinhc_array(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    big = y >= LOG_CUTOFF
    capped = np.where(big, 1.0, y)
    safe_big = np.where(big, y, LOG_CUTOFF)
    direct = np.log(sinhc_array(capped))
    asymptotic = safe_big - _LOG2 - np.log(safe_big) + np.log1p(-np.exp(-2.0 * safe_big))
    return np.where(big, asymptotic, direct)


def sinh_profile_array(alpha: float, x: np.ndarray, span: float) -> np.ndarray:
    """Vectorised :func:`sinh_profile` (no decay term) for one common span."""
    x = np.asarray(x, dtype=float)
    if alpha * span < LOG_CUTOFF:
        return x / math.sqrt(span) * sinhc_array(alpha * x) / math.sqrt(sinhc(alpha * span))
    out = np.zeros_like(x)
    pos = x > 0.0
    xp = x[pos]
    out[pos] = np.exp(
        np.log(xp)
        - 0.5 * math.log(span)
        + log_sinhc_array(alpha * xp)
        - 0.5 * log_sinhc(alpha * span)
    )
    return out
