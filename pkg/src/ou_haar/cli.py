"""Command-line entry point: ``ou-haar {basis,sample,cov,verify,fpt}``.

Exit codes: 0 success, 1 a verification check failed, 2 usage error,
3 I/O error.  CSV and JSON output is deterministic for fixed arguments;
JSON mirrors the CSV columns as a flat array of objects.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import logging
import math
import os
import sys
from collections.abc import Iterable, Iterator
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .basis import BasisIndex, Kind, ProcessParams, phi_eval, psi_eval
from .covariance import MAX_LEVEL, cov_exact, cov_partial_sum, cov_telescoped
from .dyadic import DyadicRational
from .errors import DomainError
from .fpt import exhaustive_bracket, first_passage_bracket
from .sampler import PathExpansion, empirical_covariance, ensemble_blocks

log = logging.getLogger("ou_haar")

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
MAX_BASIS_LEVEL = 12
BASIS_POINTS_LEVEL = 10  # 2**10 sample points per support
THREADS_ENV = "OU_HAAR_THREADS"

BASIS_COLUMNS = ("n", "k", "t", "psi_value", "phi_value")
SAMPLE_COLUMNS = ("path_id", "t_numer", "t_level", "value")
COV_COLUMNS = ("t", "s", "exact", "partial_sum_N", "telescoped", "empirical", "empirical_se")
VERIFY_COLUMNS = ("suite", "check", "status", "metric", "tolerance")
FPT_COLUMNS = ("path_id", "crossed", "lo_numer", "lo_level", "hi_numer", "hi_level", "segments_examined")


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    params: ProcessParams
    level: int = 10
    seed: int = 42
    n_paths: int = 1000
    grid: tuple[DyadicRational, ...] | None = None
    output: Path | None = None
    fmt: str = "csv"
    threshold: float | None = None
    p_cross_floor: float = 0.0
    workers: int | None = None


def _parse_grid(text: str) -> tuple[DyadicRational, ...]:
    items = [item for item in text.split(",") if item.strip()]
    try:
        return tuple(DyadicRational.parse(item) for item in items)
    except DomainError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--gamma", type=float, default=1.0, help="diffusion coefficient (> 0)")
    common.add_argument("--alpha", type=float, default=1.0, help="mean reversion rate (>= 0)")
    common.add_argument("--kind", choices=[k.value for k in Kind], default=Kind.OU.value)
    common.add_argument("--level", type=int, default=10, help="truncation / grid level N")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--paths", type=int, default=1000, help="number of sample paths")
    common.add_argument("--grid", type=_parse_grid, default=None, help="comma-separated k/2^N points")
    common.add_argument("--output", type=Path, default=None, help="output file (default stdout)")
    common.add_argument("--format", dest="fmt", choices=["csv", "json"], default="csv")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="ou-haar", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("basis", parents=[common], help="tabulate basis elements psi and phi")
    sub.add_parser("sample", parents=[common], help="sample paths on D_level")
    sub.add_parser("cov", parents=[common], help="compare covariance evaluators")
    sub.add_parser("verify", parents=[common], help="run the invariant checks")
    fpt = sub.add_parser("fpt", parents=[common], help="heuristic first-passage bracketing")
    fpt.add_argument("--threshold", type=float, required=True)
    fpt.add_argument("--p-cross-floor", type=float, default=0.0)
    return parser


def _workers_from_env() -> int | None:
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return None
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return value


def make_config(args: argparse.Namespace) -> RunConfig:
    try:
        params = ProcessParams(gamma=args.gamma, alpha=args.alpha, kind=Kind(args.kind))
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    if not 0 <= args.level <= MAX_LEVEL:
        raise UsageError(f"--level must lie in [0, {MAX_LEVEL}]")
    if not 0 <= args.seed < 2**64:
        raise UsageError("--seed must be an unsigned 64-bit integer")
    if args.paths < 1:
        raise UsageError("--paths must be >= 1")
    threshold = getattr(args, "threshold", None)
    p_floor = getattr(args, "p_cross_floor", 0.0)
    if threshold is not None and not (math.isfinite(threshold) and threshold > 0.0):
        raise UsageError("--threshold must be a positive number")
    if not 0.0 <= p_floor <= 1.0:
        raise UsageError("--p-cross-floor must lie in [0, 1]")
    return RunConfig(
        command=args.command,
        params=params,
        level=args.level,
        seed=args.seed,
        n_paths=args.paths,
        grid=args.grid,
        output=args.output,
        fmt=args.fmt,
        threshold=threshold,
        p_cross_floor=p_floor,
        workers=_workers_from_env(),
    )


# -- output ------------------------------------------------------------------


def _json_value(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


@contextlib.contextmanager
def _open_output(path: Path | None):
    if path is None:
        yield sys.stdout
        return
    with open(path, "w", newline="", encoding="utf-8") as handle:
        yield handle


def write_rows(config: RunConfig, columns: tuple[str, ...], rows: Iterable[tuple]) -> None:
    """Stream rows to the configured sink; floats are written with ``repr`` precision."""
    with _open_output(config.output) as handle:
        if config.fmt == "csv":
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(columns)
            writer.writerows(rows)
        else:
            handle.write("[")
            for i, row in enumerate(rows):
                record = {c: _json_value(v) for c, v in zip(columns, row)}
                handle.write(("\n" if i == 0 else ",\n") + json.dumps(record))
            handle.write("\n]\n")


def _literal(numer: int, level: int) -> str:
    """Canonical ``k/2^N`` text without building a DyadicRational."""
    if numer == 0:
        return "0/2^0"
    shift = min((numer & -numer).bit_length() - 1, level)
    return f"{numer >> shift}/2^{level - shift}"


# -- commands ----------------------------------------------------------------


def _basis_rows(config: RunConfig) -> Iterator[tuple]:
    params = config.params
    for n in range(config.level + 1):
        for k in range(1 << (n - 1)) if n else (0,):
            idx = BasisIndex(n, k)
            lo, hi = idx.support()
            if config.grid is not None:
                for p in config.grid:
                    if lo <= p <= hi:
                        yield n, k, str(p), psi_eval(params, idx, p), phi_eval(params, idx, p)
                continue
            # 2**10 points from the left end of the support, which has width 2**-(n-1).
            # Offsets into the support are exact, so one k serves the whole level.
            fine = max(n - 1, 0) + BASIS_POINTS_LEVEL
            if k == 0:
                ts = [math.ldexp(i, -fine) for i in range(1 << BASIS_POINTS_LEVEL)]
                table = [(psi_eval(params, idx, t), phi_eval(params, idx, t)) for t in ts]
            base = lo.numer_at(fine)
            for i, (psi, phi) in enumerate(table):
                yield n, k, _literal(base + i, fine), psi, phi


def cmd_basis(config: RunConfig) -> int:
    if config.level > MAX_BASIS_LEVEL:
        raise UsageError(f"basis tabulation is limited to --level <= {MAX_BASIS_LEVEL}")
    write_rows(config, BASIS_COLUMNS, _basis_rows(config))
    return EXIT_OK


def _grid_columns(config: RunConfig) -> tuple[np.ndarray, list[tuple[int, int]]]:
    level = config.level
    if config.grid is None:
        numers = range((1 << level) + 1)
    else:
        if any(p.level > level for p in config.grid):
            raise UsageError(f"every --grid point must lie on D_{level}")
        numers = [p.numer_at(level) for p in config.grid]
    labels = []
    for j in numers:
        p = DyadicRational(j, level)
        labels.append((p.numer, p.level))
    return np.array(list(numers), dtype=np.int64), labels


def cmd_sample(config: RunConfig) -> int:
    cols, labels = _grid_columns(config)

    def rows() -> Iterator[tuple]:
        blocks = ensemble_blocks(config.params, config.level, config.n_paths, config.seed, workers=config.workers)
        for start, block in blocks:
            picked = block[:, cols].tolist()
            for offset, values in enumerate(picked):
                for (numer, lvl), value in zip(labels, values):
                    yield start + offset, numer, lvl, value

    write_rows(config, SAMPLE_COLUMNS, rows())
    return EXIT_OK


def cmd_cov(config: RunConfig) -> int:
    params = config.params
    grid = config.grid if config.grid is not None else tuple(DyadicRational(j, 2) for j in range(1, 5))
    if grid:
        mc_level = max(p.level for p in grid)
        est, se = empirical_covariance(params, grid, mc_level, config.n_paths, config.seed, workers=config.workers)
    rows = []
    for i, t in enumerate(grid):
        for j, s in enumerate(grid):
            rows.append(
                (
                    str(t),
                    str(s),
                    cov_exact(params, t, s),
                    cov_partial_sum(params, t, s, config.level),
                    cov_telescoped(params, t, s),
                    float(est[i, j]),
                    float(se[i, j]),
                )
            )
    write_rows(config, COV_COLUMNS, rows)
    return EXIT_OK


def cmd_verify(config: RunConfig) -> int:
    from .verify import run_checks

    results = run_checks(config.seed)
    for r in results:
        log.info("%-11s %-36s %-4s metric=%s tol=%s", r.suite, r.check, r.status, r.metric, r.tolerance)
    write_rows(config, VERIFY_COLUMNS, [(r.suite, r.check, r.status, r.metric, r.tolerance) for r in results])
    failed = [r for r in results if r.status == "fail"]
    if failed:
        print(f"{len(failed)} check(s) failed: " + ", ".join(f"{r.suite}.{r.check}" for r in failed), file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def cmd_fpt(config: RunConfig) -> int:
    if config.threshold is None:
        raise UsageError("--threshold is required")
    rows = []
    disagreements = 0
    for path_id in range(config.n_paths):
        expansion = PathExpansion(config.params, seed=config.seed, stream=path_id, max_level=config.level)
        result = first_passage_bracket(expansion, config.threshold, config.level, config.p_cross_floor)
        if result.bracket != exhaustive_bracket(expansion.grid_path(config.level), config.threshold):
            disagreements += 1
        if result.bracket is None:
            lo = hi = (None, None)
        else:
            lo = (result.bracket[0].numer, result.bracket[0].level)
            hi = (result.bracket[1].numer, result.bracket[1].level)
        rows.append((path_id, int(result.crossed), *lo, *hi, result.segments_examined))
    write_rows(config, FPT_COLUMNS, rows)
    print(
        f"fpt summary: paths={config.n_paths} disagreements={disagreements} "
        f"disagreement_rate={disagreements / config.n_paths!r}",
        file=sys.stderr,
    )
    return EXIT_OK


COMMANDS = {"basis": cmd_basis, "sample": cmd_sample, "cov": cmd_cov, "verify": cmd_verify, "fpt": cmd_fpt}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        config = make_config(args)
        return COMMANDS[config.command](config)
    except UsageError as exc:
        print(f"ou-haar: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"ou-haar: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        target = exc.filename if exc.filename is not None else config.output
        print(f"ou-haar: cannot write {target}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
