"""Heuristic first-passage bracketing on the dyadic tree (demonstrator).

This is NOT a first-passage-time algorithm with guarantees.  It walks the
dyadic tree left to right and refines a segment when an endpoint is at or
above the threshold, or when the bridge law puts more than ``p_cross_floor``
probability on the *midpoint* being above it.  Excursions that cross and
come back between examined points can be missed whenever ``p_cross_floor > 0``;
with ``p_cross_floor = 0`` every segment is refined and the result equals an
exhaustive scan of D_max_level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bridge import midpoint_rule
from .dyadic import DyadicRational
from .errors import DomainError
from .sampler import GridPath, PathExpansion

__all__ = ["FptResult", "first_passage_bracket", "exhaustive_bracket"]


@dataclass(frozen=True)
class FptResult:
    """Leftmost segment [lo, hi] of D_level_reached whose right end is at or above the threshold.

    ``bracket`` is None when no examined grid point reached the threshold.
    """

    bracket: tuple[DyadicRational, DyadicRational] | None
    crossed: bool
    level_reached: int
    segments_examined: int


def _crossing_probability(mean: float, std: float, threshold: float) -> float:
    if std == 0.0:
        return 1.0 if mean >= threshold else 0.0
    return 0.5 * math.erfc((threshold - mean) / (std * math.sqrt(2.0)))


def first_passage_bracket(
    expansion: PathExpansion, threshold: float, max_level: int, p_cross_floor: float
) -> FptResult:
    if not threshold > 0.0:
        raise DomainError("threshold must be positive (paths start at 0)")
    if not 0 <= max_level <= expansion.max_level:
        raise DomainError(f"max_level must lie in [0, {expansion.max_level}]")
    if not 0.0 <= p_cross_floor <= 1.0:
        raise DomainError("p_cross_floor is a probability")

    params = expansion.params
    top = expansion.values[DyadicRational(1, 0)]
    examined = 0
    deepest = 0
    # Depth-first, left child before right; entries are (level, k, x, z).
    stack = [(0, 0, 0.0, top)]
    while stack:
        level, k, x, z = stack.pop()
        examined += 1
        deepest = max(deepest, level)
        if level == max_level:
            if z >= threshold:
                bracket = (DyadicRational(k, level), DyadicRational(k + 1, level))
                return FptResult(bracket, True, level, examined)
            continue
        weight, std = midpoint_rule(params, level)
        refine = (
            z >= threshold
            or p_cross_floor <= 0.0
            or _crossing_probability(weight * (x + z), std, threshold) > p_cross_floor
        )
        if not refine:
            continue
        mid = expansion.refine_segment(level, k)
        stack.append((level + 1, 2 * k + 1, mid, z))
        stack.append((level + 1, 2 * k, x, mid))
    return FptResult(None, False, deepest, examined)


def exhaustive_bracket(grid: GridPath, threshold: float) -> tuple[DyadicRational, DyadicRational] | None:
    """First grid segment whose right end is at or above the threshold, by brute force."""
    hits = np.flatnonzero(grid.values >= threshold)
    if hits.size == 0:
        return None
    i = int(hits[0])
    if i == 0:
        raise DomainError("threshold must exceed the start value")
    return DyadicRational(i - 1, grid.level), DyadicRational(i, grid.level)
