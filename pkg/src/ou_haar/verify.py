"""Invariant checks run by ``ou-haar verify``.

Every check returns one :class:`CheckResult`; a check passes when its metric
is at most its tolerance.  Rows with status ``info`` are measurements that are
reported but never fail the run.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from . import covariance as cov
from .basis import (
    BasisIndex,
    ProcessParams,
    basis_eval,
    haar_eval,
    locate_index,
    phi_eval,
    psi_eval,
)
from .bridge import Conditioning, conditional_density_check, ou_bridge, wiener_bridge
from .dyadic import DyadicRational
from .fpt import exhaustive_bracket, first_passage_bracket
from .sampler import PathExpansion, empirical_covariance, ensemble_blocks

__all__ = ["CheckResult", "CHECKS", "run_checks"]


@dataclass(frozen=True)
class CheckResult:
    suite: str
    check: str
    status: str
    metric: float | None
    tolerance: float

    def as_row(self) -> dict:
        return asdict(self)


def _result(suite: str, check: str, metric: float, tolerance: float, *, info: bool = False) -> CheckResult:
    metric = float(metric)
    if info:
        status = "info"
    else:
        status = "pass" if metric <= tolerance else "fail"
    return CheckResult(suite, check, status, metric if math.isfinite(metric) else None, tolerance)


def _rel(a: float, b: float) -> float:
    if b == 0.0:
        return 0.0 if a == 0.0 else math.inf
    return abs(a - b) / abs(b)


def _random_dyadic(rng: np.random.Generator, max_level: int) -> DyadicRational:
    level = int(rng.integers(0, max_level + 1))
    return DyadicRational(int(rng.integers(0, (1 << level) + 1)), level)


# -- basis -------------------------------------------------------------------


def check_orthonormality(rng, max_n: int = 8) -> CheckResult:
    # h is constant on cells of D_{max_n}, so midpoint sampling integrates exactly
    cells = 1 << max_n
    mids = (np.arange(cells) + 0.5) / cells
    indices = [BasisIndex(0, 0)] + [BasisIndex(n, k) for n in range(1, max_n + 1) for k in range(1 << (n - 1))]
    h = np.array([[haar_eval(idx, t) for t in mids] for idx in indices])
    gram = h @ h.T / cells
    return _result("basis", "orthonormality", np.abs(gram - np.eye(len(indices))).max(), 1e-12)


def check_tent_consistency(rng, max_n: int = 6, points: int = 1000) -> CheckResult:
    params = ProcessParams.wiener(2.0)
    worst = 0.0
    for n in range(0, max_n + 1):
        for k in range(max(1, 1 << (n - 1)) if n else 1):
            idx = BasisIndex(n, k)
            lo, hi = (float(p) for p in idx.support())
            grid = np.linspace(lo, hi, points + 1)
            cell = (hi - lo) / points
            heights = np.array([haar_eval(idx, 0.5 * (a + b)) for a, b in zip(grid[:-1], grid[1:])])
            running = np.concatenate([[0.0], np.cumsum(heights) * cell]) * math.sqrt(params.gamma)
            tent = np.array([psi_eval(params, idx, t) for t in grid])
            worst = max(worst, np.abs(tent - running).max())
    return _result("basis", "tent_consistency", worst, 1e-9)


def check_alpha_limit(rng, max_n: int = 10) -> CheckResult:
    worst = 0.0
    for alpha in (1e-6, 1e-8):
        params = ProcessParams.ou(1.0, alpha)
        for n in range(0, max_n + 1):
            idx = BasisIndex(n, 0)
            lo, hi = (float(p) for p in idx.support())
            ts = np.linspace(lo, hi, 33)
            psi = np.array([psi_eval(params, idx, t) for t in ts])
            phi = np.array([phi_eval(params, idx, t) for t in ts])
            worst = max(worst, np.abs(phi - psi).max() / np.abs(psi).max() / alpha)
    return _result("basis", "alpha_limit_over_alpha", worst, 10.0)


def check_termination(rng, max_point_level: int = 12, max_n: int = 16) -> CheckResult:
    params = ProcessParams.ou(1.0, 1.0)
    worst = 0.0
    for level in range(0, max_point_level + 1):
        for numer in range(1, 1 << level, 2) if level else (0, 1):
            point = DyadicRational(numer, level)
            t = float(point)
            for n in range(level + 1, max_n + 1):
                k0 = locate_index(point, n).k
                for k in {k0, max(k0 - 1, 0)}:
                    worst = max(worst, abs(phi_eval(params, BasisIndex(n, k), t)))
    return _result("basis", "termination_max_abs", worst, 0.0)


def check_midpoint_identity(rng, max_n: int = 12) -> CheckResult:
    worst = 0.0
    for alpha in (0.1, 1.0, 10.0):
        params = ProcessParams.ou(1.0, alpha)
        for n in range(1, max_n + 1):
            for k in range(1 << (n - 1)):
                idx = BasisIndex(n, k)
                lo, hi = (float(p) for p in idx.support())
                mid = float(idx.midpoint())
                std = ou_bridge(params, Conditioning(lo, mid, hi)).std
                worst = max(worst, _rel(phi_eval(params, idx, mid), std))
    return _result("basis", "midpoint_identity", worst, 1e-12)


def check_index_support(rng, samples: int = 100_000) -> CheckResult:
    ts = rng.random(samples)
    ns = rng.integers(1, 31, samples)
    misses = 0
    for t, n in zip(ts, ns):
        idx = locate_index(float(t), int(n))
        lo, hi = (float(p) for p in idx.support())
        if not (lo <= t < hi or (t == 1.0 == hi)):
            misses += 1
    return _result("basis", "index_support_misses", misses, 0)


# -- bridge ------------------------------------------------------------------


def check_bayes_consistency(rng, samples: int = 10_000) -> CheckResult:
    worst = 0.0
    for _ in range(samples):
        params = ProcessParams.ou(float(rng.uniform(0.2, 3.0)), float(rng.choice([0.0, rng.uniform(0.01, 5.0)])))
        t_x, t_y, t_z = np.sort(rng.uniform(0.0, 1.0, 3))
        if min(t_y - t_x, t_z - t_y) < 1e-3:
            continue
        cond = Conditioning(float(t_x), float(t_y), float(t_z), float(rng.normal()), float(rng.normal()))
        stats = ou_bridge(params, cond)
        y = stats.mean + stats.std * float(rng.normal())
        worst = max(worst, _rel(conditional_density_check(params, cond, y), stats.pdf(y)))
    return _result("bridge", "bayes_consistency", worst, 1e-9)


def check_bridge_limit(rng) -> CheckResult:
    cond = Conditioning(0.1, 0.35, 0.8, 0.4, -0.3)
    reference = wiener_bridge(ProcessParams.wiener(1.0), cond)
    errors = []
    for alpha in (1e-2, 1e-4, 1e-6):
        stats = ou_bridge(ProcessParams.ou(1.0, alpha), cond)
        errors.append(max(abs(stats.mean - reference.mean), abs(stats.std - reference.std)) / alpha)
    return _result("bridge", "ou_to_wiener_error_over_alpha", max(errors), 1.0)


# -- covariance --------------------------------------------------------------


def check_oracle_equivalence(rng, pairs: int = 10_000) -> CheckResult:
    worst = 0.0
    for alpha in (0.1, 1.0, 10.0):
        params = ProcessParams.ou(1.0, alpha)
        for _ in range(pairs // 3):
            t, s = _random_dyadic(rng, 12), _random_dyadic(rng, 12)
            exact = cov.ou_cov_exact(params, t, s)
            worst = max(
                worst,
                _rel(cov.cov_partial_sum(params, t, s, 12), exact),
                _rel(cov.cov_telescoped(params, t, s), exact),
            )
    return _result("covariance", "oracle_equivalence", worst, 1e-10)


def check_recurrence(rng, pairs: int = 1000) -> CheckResult:
    worst = 0.0
    for alpha in (0.1, 1.0, 10.0):
        params = ProcessParams.ou(1.0, alpha)
        done = 0
        while done < pairs:
            t, s = _random_dyadic(rng, 20), _random_dyadic(rng, 20)
            if t == s:
                continue
            t, s = min(t, s), max(t, s)
            worst = max(worst, cov.telescope_trace(params, t, s).max_residual)
            done += 1
    return _result("covariance", "recurrence_residual", worst, 1e-14)


def check_tail_identity(rng) -> CheckResult:
    worst = 0.0
    for alpha in np.logspace(-2, 2, 20):
        lhs, rhs = cov.tail_identity(float(alpha))
        worst = max(worst, abs(lhs - rhs))
    return _result("covariance", "tail_identity", worst, 1e-14)


def check_symmetry(rng, pairs: int = 500) -> CheckResult:
    params = ProcessParams.ou(1.3, 2.0)
    worst = 0.0
    for _ in range(pairs):
        t, s = (float(x) for x in rng.random(2))
        for fn in (cov.ou_cov_exact, cov.cov_telescoped):
            worst = max(worst, abs(fn(params, t, s) - fn(params, s, t)))
        worst = max(worst, abs(cov.cov_partial_sum(params, t, s, 20) - cov.cov_partial_sum(params, s, t, 20)))
    return _result("covariance", "symmetry", worst, 0.0)


def check_psd(rng, trials: int = 50) -> CheckResult:
    params = ProcessParams.ou(1.0, 1.0)
    lowest = math.inf
    for _ in range(trials):
        ts = rng.random(8)
        gram = np.array([[cov.ou_cov_exact(params, float(a), float(b)) for b in ts] for a in ts])
        lowest = min(lowest, float(np.linalg.eigvalsh(gram).min()))
    return _result("covariance", "psd_negative_eigenvalue", max(-lowest, 0.0), 1e-10)


def check_head_sum(rng) -> CheckResult:
    worst = 0.0
    grid = [i / 8 for i in range(9)]
    for params in (ProcessParams.wiener(1.0), ProcessParams.ou(1.0, 1.0)):
        f00 = BasisIndex(0, 0)
        for t in grid:
            for s in grid:
                target = basis_eval(params, f00, t) * basis_eval(params, f00, s)
                worst = max(worst, abs(cov.head_sum(params, t, s, 20) - target))
    return _result("covariance", "head_sum", worst, 1e-12)


# -- sampler -----------------------------------------------------------------


def check_refine_vs_evaluate(rng, trials: int = 1000) -> CheckResult:
    worst = 0.0
    for i in range(trials):
        params = ProcessParams.ou(1.0, float(rng.choice([0.0, 1.0, 5.0])))
        level = int(rng.integers(0, 11))
        k = int(rng.integers(0, 1 << level))
        expansion = PathExpansion(params, seed=int(rng.integers(0, 2**63)), max_level=12)
        for j in (k, k + 1):
            point = DyadicRational(j, level)
            expansion.values[point] = expansion.evaluate(point)
        mid = expansion.refine_segment(level, k)
        worst = max(worst, abs(mid - expansion.evaluate(DyadicRational(2 * k + 1, level + 1))))
    return _result("sampler", "refine_vs_evaluate", worst, 1e-12)


def check_order_independence(rng, level: int = 5) -> CheckResult:
    params = ProcessParams.ou(1.0, 2.0)
    segments = [(n, k) for n in range(level) for k in range(1 << n)]
    a = PathExpansion(params, seed=7, max_level=level)
    b = PathExpansion(params, seed=7, max_level=level)
    for n, k in segments:
        a.refine_segment(n, k)
    # any order that refines parents before children
    order = sorted(segments, key=lambda nk: (nk[0], int(rng.integers(0, 1 << 30))))
    for n, k in order:
        b.refine_segment(n, k)
    same = a.values == b.values and a.coeffs == b.coeffs
    return _result("sampler", "order_independence", 0.0 if same else 1.0, 0.0)


@lru_cache(maxsize=1)
def _wiener_increments(paths: int = 10_000, level: int = 10) -> np.ndarray:
    params = ProcessParams.wiener(1.0)
    return np.concatenate([np.diff(block, axis=1) for _, block in ensemble_blocks(params, level, paths, 2024)])


def check_wiener_increment_variance(rng, level: int = 10) -> CheckResult:
    incs = _wiener_increments(level=level)
    h = math.ldexp(1.0, -level)
    se = math.sqrt(2.0 / incs.size) * h
    return _result("sampler", "wiener_increment_variance_z", abs(float(np.mean(incs**2)) - h) / se, 3.0)


def check_wiener_increment_correlation(rng, level: int = 10) -> CheckResult:
    incs = _wiener_increments(level=level)
    corr = [abs(np.corrcoef(incs[:, i], incs[:, i + 1])[0, 1]) for i in range(incs.shape[1] - 1)]
    return _result("sampler", "wiener_adjacent_increment_max_corr", max(corr), 0.05)


def check_ou_empirical_cov(rng, paths: int = 100_000) -> CheckResult:
    params = ProcessParams.ou(1.0, 1.0)
    points = [DyadicRational(k, 3) for k in (1, 3, 4, 6, 8)]
    est, se = empirical_covariance(params, points, 8, paths, 42)
    exact = np.array([[cov.ou_cov_exact(params, t, s) for s in points] for t in points])
    outside = int((np.abs(est - exact) > 3.0 * se).sum())
    return _result("sampler", "ou_cov_cells_outside_3se", outside, 1)


def check_markov_refinement(rng, paths: int = 20_000, level: int = 3) -> CheckResult:
    params = ProcessParams.ou(1.0, 2.0)
    blocks = np.concatenate([b for _, b in ensemble_blocks(params, level + 1, paths, 99)])
    coarse = blocks[:, ::2]
    mids = blocks[:, 1::2]
    h = math.ldexp(1.0, -level)
    worst = 0.0
    for k in range(1 << level):
        stats = ou_bridge(params, Conditioning(k * h, (k + 0.5) * h, (k + 1) * h, 1.0, 0.0))
        weight = stats.mean
        resid = mids[:, k] - weight * (coarse[:, k] + coarse[:, k + 1])
        z_mean = abs(resid.mean()) / (resid.std(ddof=1) / math.sqrt(paths))
        var_se = stats.std**2 * math.sqrt(2.0 / paths)
        z_var = abs(resid.var(ddof=1) - stats.std**2) / var_se
        worst = max(worst, z_mean, z_var)
    # 32 z-scores, so allow a little more than 3
    return _result("sampler", "markov_refinement_max_z", worst, 3.5)


# -- fpt ---------------------------------------------------------------------


def _fpt_disagreements(p_cross_floor: float, paths: int, level: int, threshold: float) -> int:
    params = ProcessParams.ou(1.0, 1.0)
    disagreements = 0
    for i in range(paths):
        expansion = PathExpansion(params, seed=5, stream=i, max_level=level)
        result = first_passage_bracket(expansion, threshold, level, p_cross_floor)
        if result.bracket != exhaustive_bracket(expansion.grid_path(level), threshold):
            disagreements += 1
    return disagreements


def check_fpt_brute_force(rng, paths: int = 100, level: int = 10) -> CheckResult:
    return _result("fpt", "bracket_disagreements_p0", _fpt_disagreements(0.0, paths, level, 0.5), 0)


def check_fpt_miss_rate(rng, paths: int = 100, level: int = 10) -> CheckResult:
    rate = _fpt_disagreements(0.05, paths, level, 0.5) / paths
    return _result("fpt", "heuristic_miss_rate_p0.05", rate, 1.0, info=True)


CHECKS: list[Callable[[np.random.Generator], CheckResult]] = [
    check_orthonormality,
    check_tent_consistency,
    check_alpha_limit,
    check_termination,
    check_midpoint_identity,
    check_index_support,
    check_bayes_consistency,
    check_bridge_limit,
    check_oracle_equivalence,
    check_recurrence,
    check_tail_identity,
    check_symmetry,
    check_psd,
    check_head_sum,
    check_refine_vs_evaluate,
    check_order_independence,
    check_wiener_increment_variance,
    check_wiener_increment_correlation,
    check_ou_empirical_cov,
    check_markov_refinement,
    check_fpt_brute_force,
    check_fpt_miss_rate,
]


def run_checks(seed: int = 42) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    return [check(rng) for check in CHECKS]
