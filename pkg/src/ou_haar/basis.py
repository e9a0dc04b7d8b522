"""Haar, Schauder (Wiener) and sinh-tent (Ornstein-Uhlenbeck) basis functions on [0, 1].

Level ``n >= 1`` elements are indexed by ``0 <= k < 2**(n-1)`` and supported on
``[k * 2**(1-n), (k+1) * 2**(1-n)]``; level 0 has the single element ``(0, 0)``
supported on all of [0, 1].  Indices with ``n < 0`` appear only in the
bi-infinite extension (``*_star_eval``), always with ``k == 0``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _hyper
from .dyadic import DyadicRational, TimeLike, as_dyadic, as_float
from .errors import DomainError

__all__ = [
    "Kind",
    "ProcessParams",
    "BasisIndex",
    "haar_eval",
    "psi_eval",
    "phi_eval",
    "basis_eval",
    "psi_star_eval",
    "phi_star_eval",
    "basis_star_eval",
    "locate_index",
    "terminal_level",
    "level_values",
    "mean_drift",
]


class Kind(enum.Enum):
    WIENER = "wiener"
    OU = "ou"


@dataclass(frozen=True)
class ProcessParams:
    """Noise intensity ``gamma`` (variance per unit time) and mean reversion ``alpha``.

    A Wiener process always has ``alpha == 0``; any alpha passed alongside
    ``Kind.WIENER`` is discarded.  An OU process with ``alpha == 0`` evaluates
    exactly like the Wiener process.
    """

    gamma: float = 1.0
    alpha: float = 0.0
    kind: Kind = Kind.OU

    def __post_init__(self):
        kind = Kind(self.kind)
        gamma, alpha = float(self.gamma), float(self.alpha)
        if not (math.isfinite(gamma) and gamma > 0.0):
            raise DomainError(f"gamma must be positive, got {gamma!r}")
        if kind is Kind.WIENER:
            alpha = 0.0
        if not 0.0 <= alpha <= _hyper.MAX_ALPHA:
            raise DomainError(f"alpha must lie in [0, {_hyper.MAX_ALPHA:g}], got {alpha!r}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "alpha", alpha)

    @classmethod
    def wiener(cls, gamma: float = 1.0) -> ProcessParams:
        return cls(gamma, 0.0, Kind.WIENER)

    @classmethod
    def ou(cls, gamma: float = 1.0, alpha: float = 1.0) -> ProcessParams:
        return cls(gamma, alpha, Kind.OU)

    @property
    def is_wiener(self) -> bool:
        return self.alpha == 0.0


@dataclass(frozen=True)
class BasisIndex:
    n: int
    k: int = 0

    def __post_init__(self):
        n, k = int(self.n), int(self.k)
        if n >= 1:
            if not 0 <= 2 * k < (1 << n):
                raise DomainError(f"k={k} out of range for level n={n}")
        elif k != 0:
            raise DomainError(f"level n={n} has only k=0")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "k", k)

    def support(self) -> tuple[DyadicRational, DyadicRational]:
        """Closed support, clipped to [0, 1] for n <= 0."""
        if self.n <= 0:
            return DyadicRational(0, 0), DyadicRational(1, 0)
        return DyadicRational(2 * self.k, self.n), DyadicRational(2 * self.k + 2, self.n)

    def midpoint(self) -> DyadicRational:
        if self.n <= 0:
            return DyadicRational(1, 1)
        return DyadicRational(2 * self.k + 1, self.n)

    def contains(self, t: TimeLike) -> bool:
        lo, hi = self.support()
        point = as_dyadic(t)
        return lo <= point <= hi


def _check_level(idx: BasisIndex) -> None:
    if idx.n < 0:
        raise DomainError("negative levels belong to the bi-infinite extension")


def _tent_offset(idx: BasisIndex, t: float) -> float | None:
    """Distance from t to the nearer end of the support, or None outside it."""
    lo = math.ldexp(2 * idx.k, -idx.n)
    hi = math.ldexp(2 * idx.k + 2, -idx.n)
    if t < lo or t > hi:
        return None
    mid = math.ldexp(2 * idx.k + 1, -idx.n)
    return t - lo if t <= mid else hi - t


def haar_eval(idx: BasisIndex, t: TimeLike) -> float:
    """Haar function h_{n,k}(t).

    The value at the support midpoint is the positive (left) one.  Supports
    are otherwise half-open on the right, except that t = 1 belongs to the
    last support.
    """
    _check_level(idx)
    t = as_float(t)
    if idx.n == 0:
        return 1.0
    lo = math.ldexp(2 * idx.k, -idx.n)
    mid = math.ldexp(2 * idx.k + 1, -idx.n)
    hi = math.ldexp(2 * idx.k + 2, -idx.n)
    height = 2.0 ** ((idx.n - 1) / 2)
    if lo <= t <= mid:
        return height
    if mid < t < hi or (t == hi == 1.0):
        return -height
    return 0.0


def psi_eval(params: ProcessParams, idx: BasisIndex, t: TimeLike) -> float:
    """Schauder tent sqrt(gamma) * int_0^t h_{n,k}."""
    _check_level(idx)
    t = as_float(t)
    root_gamma = math.sqrt(params.gamma)
    if idx.n == 0:
        return root_gamma * t
    x = _tent_offset(idx, t)
    if x is None or x == 0.0:
        return 0.0
    return root_gamma * (x / math.sqrt(math.ldexp(1.0, 1 - idx.n)))


def phi_eval(params: ProcessParams, idx: BasisIndex, t: TimeLike) -> float:
    """Ornstein-Uhlenbeck element: the sinh-shaped analogue of the Schauder tent.

    Vanishes identically (not approximately) at the support endpoints, so the
    expansion terminates at dyadic points.  With ``alpha == 0`` the result is
    bitwise equal to :func:`psi_eval`.
    """
    _check_level(idx)
    t = as_float(t)
    root_gamma = math.sqrt(params.gamma)
    if idx.n == 0:
        return root_gamma * _hyper.sinh_profile(params.alpha, t, 1.0, decay=0.5)
    x = _tent_offset(idx, t)
    if x is None or x == 0.0:
        return 0.0
    return root_gamma * _hyper.sinh_profile(params.alpha, x, math.ldexp(1.0, 1 - idx.n))


def basis_eval(params: ProcessParams, idx: BasisIndex, t: TimeLike) -> float:
    """Psi for the Wiener kind, Phi otherwise."""
    if params.kind is Kind.WIENER:
        return psi_eval(params, idx, t)
    return phi_eval(params, idx, t)


def _check_star(idx: BasisIndex) -> int:
    if idx.n > 0:
        raise DomainError("bi-infinite head elements need n <= 0")
    return -idx.n


def psi_star_eval(params: ProcessParams, idx: BasisIndex, t: TimeLike, *, first: bool = True) -> float:
    """Wiener head element at level ``n <= 0``.

    ``first=True`` gives the leading element of an expansion that starts at
    level ``n`` (it carries the whole conditional mean given D_n);
    ``first=False`` gives the ordinary element at that level, used for every
    level after the leading one.
    """
    m = _check_star(idx)
    t = as_float(t)
    scale = math.ldexp(1.0, m if first else m + 1)
    return math.sqrt(params.gamma / scale) * t


def phi_star_eval(params: ProcessParams, idx: BasisIndex, t: TimeLike, *, first: bool = True) -> float:
    """Ornstein-Uhlenbeck head element at level ``n <= 0``; see :func:`psi_star_eval`."""
    m = _check_star(idx)
    t = as_float(t)
    root_gamma = math.sqrt(params.gamma)
    if first:
        span = math.ldexp(1.0, m)
        return root_gamma * _hyper.sinh_profile(params.alpha, t, span, decay=0.5 * span)
    return root_gamma * _hyper.sinh_profile(params.alpha, t, math.ldexp(1.0, m + 1))


def basis_star_eval(params: ProcessParams, idx: BasisIndex, t: TimeLike, *, first: bool = True) -> float:
    if params.kind is Kind.WIENER:
        return psi_star_eval(params, idx, t, first=first)
    return phi_star_eval(params, idx, t, first=first)


def locate_index(t: TimeLike, n: int) -> BasisIndex:
    """The level-n element whose support holds t, using half-open supports [a, b).

    t = 1 is assigned to the last support.
    """
    if n < 1:
        raise DomainError("locate_index needs n >= 1")
    last = (1 << (n - 1)) - 1
    if isinstance(t, DyadicRational):
        k = (t.numer << (n - 1)) >> t.level
    else:
        k = math.floor(math.ldexp(as_float(t), n - 1))
    return BasisIndex(n, min(k, last))


def terminal_level(t: TimeLike) -> int:
    """Level past which every basis element vanishes at t (the canonical dyadic level)."""
    return as_dyadic(t).level


def level_values(params: ProcessParams, n: int, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised ``(k_n(t), f_{n,k_n}(t))`` for an array of times."""
    t = np.asarray(t, dtype=float)
    root_gamma = math.sqrt(params.gamma)
    alpha = params.alpha
    if n == 0:
        values = _hyper.sinh_profile_array(alpha, t, 1.0) * math.exp(-0.5 * alpha)
        return np.zeros(t.shape, dtype=np.int64), root_gamma * values
    span = math.ldexp(1.0, 1 - n)
    k = np.minimum(np.floor(np.ldexp(t, n - 1)).astype(np.int64), (1 << (n - 1)) - 1)
    offset = t - np.ldexp(k.astype(float), 1 - n)
    x = np.where(offset <= 0.5 * span, offset, span - offset)
    return k, root_gamma * _hyper.sinh_profile_array(alpha, x, span)


def mean_drift(params: ProcessParams, x0: float, t: TimeLike) -> float:
    """Deterministic part x0 * exp(-alpha t) to add to a path started at x0."""
    return x0 * math.exp(-params.alpha * as_float(t))
