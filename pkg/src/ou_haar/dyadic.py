"""Exact dyadic rationals in [0, 1] and their binary expansions."""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from typing import Union

from .errors import DomainError

_LITERAL = re.compile(r"^\s*(\d+)\s*/\s*2\s*\^\s*(\d+)\s*$")


@total_ordering
@dataclass(frozen=True)
class DyadicRational:
    """The point ``numer * 2**-level`` of [0, 1], stored in canonical form.

    Construction reduces ``(numer, level)`` by halving both until ``numer`` is
    odd or the level is 0, so equal values always compare equal field-wise.
    """

    numer: int
    level: int

    def __post_init__(self):
        k, n = int(self.numer), int(self.level)
        if n < 0 or k < 0 or k > (1 << n):
            raise DomainError(f"{k}/2^{n} is not a dyadic point of [0, 1]")
        if k == 0:
            n = 0
        else:
            shift = min((k & -k).bit_length() - 1, n)
            k >>= shift
            n -= shift
        object.__setattr__(self, "numer", k)
        object.__setattr__(self, "level", n)

    @classmethod
    def from_float(cls, t: float) -> DyadicRational:
        """Exact conversion; every finite double in [0, 1] is dyadic."""
        if not 0.0 <= t <= 1.0:
            raise DomainError(f"t={t!r} outside [0, 1]")
        num, den = float(t).as_integer_ratio()
        return cls(num, den.bit_length() - 1)

    @classmethod
    def parse(cls, text: str) -> DyadicRational:
        """Parse a ``k/2^N`` literal (bare ``0`` and ``1`` are accepted too)."""
        stripped = text.strip()
        if stripped in ("0", "1"):
            return cls(int(stripped), 0)
        match = _LITERAL.match(stripped)
        if match is None:
            raise DomainError(f"not a dyadic literal of the form k/2^N: {text!r}")
        return cls(int(match.group(1)), int(match.group(2)))

    def numer_at(self, level: int) -> int:
        """Numerator of this point on the grid D_level (requires level >= self.level)."""
        if level < self.level:
            raise DomainError(f"{self} is not on D_{level}")
        return self.numer << (level - self.level)

    def as_fraction(self) -> Fraction:
        return Fraction(self.numer, 1 << self.level)

    def __float__(self) -> float:
        return float(self.as_fraction())

    def __lt__(self, other: DyadicRational) -> bool:
        if not isinstance(other, DyadicRational):
            return NotImplemented
        level = max(self.level, other.level)
        return self.numer_at(level) < other.numer_at(level)

    def __str__(self) -> str:
        return f"{self.numer}/2^{self.level}"


TimeLike = Union[float, DyadicRational]


def as_dyadic(t: TimeLike) -> DyadicRational:
    if isinstance(t, DyadicRational):
        return t
    return DyadicRational.from_float(t)


def as_float(t: TimeLike) -> float:
    value = float(t)
    if not 0.0 <= value <= 1.0:
        raise DomainError(f"t={value!r} outside [0, 1]")
    return value


@dataclass(frozen=True)
class BinaryDigits:
    """Leading binary digits ``a_1 .. a_depth`` of a point of [0, 1].

    ``exhausted`` is set when every digit past ``depth`` is zero, i.e. the
    finite expansion is the complete one.  The point 1 is written 0.111...,
    which never terminates.
    """

    digits: tuple[int, ...]
    exhausted: bool

    def reconstruct(self) -> Fraction:
        return sum((Fraction(a, 1 << i) for i, a in enumerate(self.digits, start=1)), Fraction(0))


def binary_digits(t: TimeLike, depth: int) -> BinaryDigits:
    if depth < 1:
        raise DomainError("depth must be >= 1")
    point = as_dyadic(t)
    if point == DyadicRational(1, 0):
        return BinaryDigits((1,) * depth, exhausted=False)
    scaled = (point.numer << depth) >> point.level
    digits = tuple((scaled >> (depth - i)) & 1 for i in range(1, depth + 1))
    return BinaryDigits(digits, exhausted=point.level <= depth)


def tail_sum(t: DyadicRational, start: int) -> Fraction:
    """sum_{i >= start} a_i 2^-i for the proper binary expansion of t (start >= 1)."""
    if t == DyadicRational(1, 0):
        return Fraction(1, 1 << (start - 1))
    frac = t.as_fraction() * (1 << (start - 1))
    return (frac - (frac.numerator // frac.denominator)) / (1 << (start - 1))
