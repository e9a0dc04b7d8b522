"""Top-down sampling of Wiener / OU paths from the multiresolution expansion.

Coefficients come from a counter-based generator: the value of xi_{n,k}
depends only on ``(seed, stream, n, k)``, never on the order in which
coefficients are requested.  Concretely the Philox-4x64 key is
``(seed, stream)`` and the counter word is the heap index
``j(n, k) = 2**(n-1) + k`` (``j(0, 0) = 0``), so a full level, or all levels
up to N, is one contiguous block of the stream.
"""

from __future__ import annotations

import math
from collections.abc import Iterator, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.random import Philox
from scipy.special import ndtri

from .basis import BasisIndex, ProcessParams, basis_eval, level_values, locate_index
from .bridge import Conditioning, bridge, midpoint_rule
from .covariance import MAX_LEVEL
from .dyadic import DyadicRational, TimeLike, as_dyadic, as_float
from .errors import DomainError, PreconditionError

__all__ = [
    "DEFAULT_MAX_LEVEL",
    "GridPath",
    "PathExpansion",
    "conditional_mean_path",
    "ensemble",
    "ensemble_blocks",
    "empirical_covariance",
    "heap_index",
]

DEFAULT_MAX_LEVEL = 24
# Levels up to this one are drawn as a whole block on first touch.
_BLOCK_LEVEL = 14
_MASK64 = (1 << 64) - 1


def heap_index(idx: BasisIndex) -> int:
    return 0 if idx.n == 0 else (1 << (idx.n - 1)) + idx.k


def _philox_words(seed: int, stream: int, start: int, count: int) -> np.ndarray:
    counter, skip = divmod(start, 4)
    # explicit uint64: plain Python ints above 2**63 would be routed through float
    key = np.array([seed, stream], dtype=np.uint64)
    bit_gen = Philox(key=key, counter=np.array([counter, 0, 0, 0], dtype=np.uint64))
    return bit_gen.random_raw(skip + count)[skip:]


def _words_to_normal(words: np.ndarray) -> np.ndarray:
    # 53-bit uniform strictly inside (0, 1), then the inverse normal CDF
    uniform = ((words >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return ndtri(uniform)


def _check_seed(seed: int, stream: int) -> None:
    if not (0 <= seed <= _MASK64 and 0 <= stream <= _MASK64):
        raise DomainError("seed and stream must be unsigned 64-bit integers")


@dataclass
class GridPath:
    """Path values on D_level = {i 2^-level}; ``values[0]`` is the start value 0."""

    level: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != ((1 << self.level) + 1,):
            raise DomainError(f"a level-{self.level} grid holds {(1 << self.level) + 1} values")

    def times(self) -> np.ndarray:
        return np.ldexp(np.arange(len(self.values), dtype=float), -self.level)

    def points(self) -> list[DyadicRational]:
        return [DyadicRational(i, self.level) for i in range(len(self.values))]

    def value_at(self, t: TimeLike) -> float:
        return float(self.values[as_dyadic(t).numer_at(self.level)])

    def restrict(self, level: int) -> GridPath:
        if not 0 <= level <= self.level:
            raise DomainError(f"cannot restrict a level-{self.level} grid to level {level}")
        return GridPath(level, self.values[:: 1 << (self.level - level)].copy())


def _refine_levels(params: ProcessParams, top: np.ndarray, level: int, xi_for_level) -> np.ndarray:
    """Midpoint refinement from D_0 to D_level for a batch of paths.

    ``top`` holds X_1 for each path; ``xi_for_level(n)`` returns the level-n
    coefficients with shape (paths, 2**(n-1)).
    """
    values = np.zeros((top.shape[0], 2))
    values[:, 1] = top
    for n in range(1, level + 1):
        weight, std = midpoint_rule(params, n - 1)
        mids = weight * (values[:, :-1] + values[:, 1:]) + std * xi_for_level(n)
        refined = np.empty((values.shape[0], 2 * values.shape[1] - 1))
        refined[:, 0::2] = values
        refined[:, 1::2] = mids
        values = refined
    return values


@dataclass
class PathExpansion:
    """One sample path, held as its expansion coefficients and refined on demand.

    ``coeffs`` records every coefficient handed out and ``values`` every path
    value fixed by refinement; both start from D_0 = {0, 1}.
    """

    params: ProcessParams
    seed: int = 0
    max_level: int = DEFAULT_MAX_LEVEL
    stream: int = 0
    coeffs: dict[BasisIndex, float] = field(default_factory=dict, repr=False)
    values: dict[DyadicRational, float] = field(default_factory=dict, repr=False)
    fixed: Mapping[BasisIndex, float] | None = field(default=None, repr=False)
    _levels: dict[int, np.ndarray] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        _check_seed(self.seed, self.stream)
        if not 0 <= self.max_level <= MAX_LEVEL:
            raise DomainError(f"max_level must lie in [0, {MAX_LEVEL}]")
        if not self.values:
            self.values[DyadicRational(0, 0)] = 0.0
            self.values[DyadicRational(1, 0)] = self._top_value()

    @classmethod
    def from_coefficients(
        cls, params: ProcessParams, coeffs: Mapping[BasisIndex, float], max_level: int = DEFAULT_MAX_LEVEL
    ) -> PathExpansion:
        """Deterministic expansion: the given coefficients, zero everywhere else."""
        return cls(params, max_level=max_level, fixed=dict(coeffs))

    def _top_value(self) -> float:
        return basis_eval(self.params, BasisIndex(0, 0), 1.0) * self.coefficient(BasisIndex(0, 0))

    def level_coefficients(self, n: int) -> np.ndarray:
        """All level-n coefficients, k = 0 .. 2**(n-1) - 1 (a single one for n = 0)."""
        if n in self._levels:
            return self._levels[n]
        count = 1 if n == 0 else 1 << (n - 1)
        if self.fixed is not None:
            block = np.array([self.fixed.get(BasisIndex(n, k), 0.0) for k in range(count)])
        else:
            start = heap_index(BasisIndex(n, 0))
            block = _words_to_normal(_philox_words(self.seed, self.stream, start, count))
        self._levels[n] = block
        return block

    def coefficient(self, idx: BasisIndex) -> float:
        if idx.n < 0:
            raise DomainError("coefficients exist for n >= 0 only")
        cached = self.coeffs.get(idx)
        if cached is not None:
            return cached
        if self.fixed is not None:
            value = float(self.fixed.get(idx, 0.0))
        elif idx.n <= _BLOCK_LEVEL:
            value = float(self.level_coefficients(idx.n)[idx.k])
        else:
            word = _philox_words(self.seed, self.stream, heap_index(idx), 1)
            value = float(_words_to_normal(word)[0])
        self.coeffs[idx] = value
        return value

    def evaluate(self, t: TimeLike) -> float:
        """Truncated expansion at t.

        A dyadic t of level L only receives terms up to L; elements of finer
        levels vanish there, so the sum is exact and ``max_level`` is irrelevant.
        """
        last = min(as_dyadic(t).level, self.max_level)
        total = basis_eval(self.params, BasisIndex(0, 0), t) * self.coefficient(BasisIndex(0, 0))
        for n in range(1, last + 1):
            idx = locate_index(t, n)
            total += basis_eval(self.params, idx, t) * self.coefficient(idx)
        return total

    def refine_segment(self, level: int, k: int) -> float:
        """Fix the midpoint of [k 2^-level, (k+1) 2^-level] from its bridge law.

        Both endpoint values must already be known.  Returns (and records)
        mean + std * xi_{level+1, k}.
        """
        if level + 1 > self.max_level:
            raise DomainError(f"refining level {level} needs max_level >= {level + 1}")
        if not 0 <= k < (1 << level):
            raise DomainError(f"segment {k} does not exist on D_{level}")
        left, right = DyadicRational(k, level), DyadicRational(k + 1, level)
        try:
            x, z = self.values[left], self.values[right]
        except KeyError as missing:
            raise PreconditionError(f"endpoint {missing.args[0]} of segment {k} on D_{level} not known yet") from None
        weight, std = midpoint_rule(self.params, level)
        mid = weight * (x + z) + std * self.coefficient(BasisIndex(level + 1, k))
        self.values[DyadicRational(2 * k + 1, level + 1)] = mid
        return mid

    def grid_path(self, level: int, *, method: str = "refine") -> GridPath:
        """Values on D_level.

        ``method="refine"`` runs the O(2^N) midpoint recursion; ``"sum"``
        sums the basis functions level by level in O(N 2^N).
        """
        if not 0 <= level <= self.max_level:
            raise DomainError(f"grid level must lie in [0, max_level={self.max_level}]")
        if method == "refine":
            top = np.array([self.values[DyadicRational(1, 0)]])
            values = _refine_levels(self.params, top, level, lambda n: self.level_coefficients(n)[None, :])
            return GridPath(level, values[0])
        if method == "sum":
            t = np.ldexp(np.arange((1 << level) + 1, dtype=float), -level)
            total = np.zeros_like(t)
            for n in range(level + 1):
                k, f = level_values(self.params, n, t)
                total += f * self.level_coefficients(n)[k]
            return GridPath(level, total)
        raise DomainError(f"unknown method {method!r}")


def conditional_mean_path(params: ProcessParams, grid: GridPath, t: TimeLike) -> float:
    """E[X_t | values on the grid]: bridge mean across the enclosing segment.

    Piecewise linear for the Wiener process, piecewise sinh-weighted
    (catenary) for OU.
    """
    point = as_dyadic(t)
    if point.level <= grid.level:
        return grid.value_at(point)
    last = (1 << grid.level) - 1
    k = min((point.numer << grid.level) >> point.level, last)
    h = math.ldexp(1.0, -grid.level)
    t_x = k * h
    cond = Conditioning(t_x, as_float(t), t_x + h, float(grid.values[k]), float(grid.values[k + 1]))
    return bridge(params, cond).mean


def _path_block(params: ProcessParams, level: int, seed: int, streams: range) -> np.ndarray:
    width = 1 << level
    words = np.stack([_philox_words(seed, stream, 0, width) for stream in streams])
    xi = _words_to_normal(words)
    top = basis_eval(params, BasisIndex(0, 0), 1.0) * xi[:, 0]
    return _refine_levels(params, top, level, lambda n: xi[:, 1 << (n - 1) : 1 << n])


def ensemble_blocks(
    params: ProcessParams,
    level: int,
    n_paths: int,
    base_seed: int,
    *,
    block_size: int = 2048,
    workers: int | None = None,
) -> Iterator[tuple[int, np.ndarray]]:
    """Yield ``(first_path_id, values)`` blocks of shape (paths, 2**level + 1), in path order.

    Path ``i`` is ``PathExpansion(params, seed=base_seed, stream=i)``.
    """
    if n_paths < 1:
        raise DomainError("n_paths must be >= 1")
    if not 0 <= level <= MAX_LEVEL:
        raise DomainError(f"level must lie in [0, {MAX_LEVEL}]")
    _check_seed(base_seed, n_paths - 1)
    starts = range(0, n_paths, block_size)

    def run(start: int) -> tuple[int, np.ndarray]:
        return start, _path_block(params, level, base_seed, range(start, min(start + block_size, n_paths)))

    if workers is None or workers <= 1:
        yield from map(run, starts)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(run, starts)


def ensemble(
    params: ProcessParams, level: int, n_paths: int, base_seed: int, *, workers: int | None = None
) -> Iterator[GridPath]:
    for _, block in ensemble_blocks(params, level, n_paths, base_seed, workers=workers):
        for row in block:
            yield GridPath(level, row)


def empirical_covariance(
    params: ProcessParams,
    points: Sequence[TimeLike],
    level: int,
    n_paths: int,
    base_seed: int,
    *,
    workers: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Monte-Carlo E[X_t X_s] over ``points`` (all on D_level) and its standard error.

    The paths have zero mean by construction, so the plain average of
    products is used rather than a centred sample covariance.
    """
    cols = np.array([as_dyadic(p).numer_at(level) for p in points])
    m = len(cols)
    total = np.zeros((m, m))
    total_sq = np.zeros((m, m))
    for _, block in ensemble_blocks(params, level, n_paths, base_seed, workers=workers):
        x = block[:, cols]
        prods = x[:, :, None] * x[:, None, :]
        total += prods.sum(axis=0)
        total_sq += (prods * prods).sum(axis=0)
    mean = total / n_paths
    var = np.maximum(total_sq / n_paths - mean * mean, 0.0) * n_paths / max(n_paths - 1, 1)
    return mean, np.sqrt(var / n_paths)
