# SPDX-FileCopyrightText: Magenta ApS
#
# SPDX-License-Identifier: MPL-2.0
"""Segmented, parallel census of cyclic, abelian and nilpotent numbers.

Each checkpoint interval is cut into segments which are factorised, classified
and intersected with the Beatty sequence independently; segment results are
summed in segment order so the output never depends on the worker count or the
segment size.
"""
import time
from concurrent.futures import Executor, ProcessPoolExecutor
from math import isqrt
from typing import Any, Callable, Dict, List, NamedTuple, Optional

import numpy as np
import structlog
from pydantic import BaseModel, PositiveInt, root_validator, validator
from structlog.contextvars import bound_contextvars

from beatty_census.analytic import SeriesClass, eval_series, series_coefficients
from beatty_census.arith import base_primes, classify_segment, max_distinct_primes, segment_factors
from beatty_census.beatty import AlphaValue, BeattyParams, terms_between
from beatty_census.config import Settings, get_settings
from beatty_census.errors import InvariantError, ResourceError, UsageError
from beatty_census.models import CensusRow, ComparisonRow, RatioRow
from beatty_census.pydantic_types import ScientificInt
from beatty_census.util import async_to_sync, gather_segments, segment_bounds

logger = structlog.stdlib.get_logger()


class CensusConfig(BaseModel):
    class Config:
        arbitrary_types_allowed = True

    x_max: ScientificInt
    checkpoints: List[ScientificInt]
    params: BeattyParams
    segment_size: ScientificInt = ScientificInt(10**6)
    worker_count: PositiveInt = PositiveInt(1)

    @validator("segment_size")
    def segment_size_floor(cls, value: int) -> int:
        if value < 10**4:
            raise ValueError("segment_size must be at least 1e4")
        return value

    @root_validator(skip_on_failure=True)
    def ensure_checkpoints(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        checkpoints = values["checkpoints"]
        if values["x_max"] < 0:
            raise ValueError("x_max must be non-negative")
        if list(checkpoints) != sorted(checkpoints):
            raise ValueError("Checkpoints must be sorted ascending")
        if checkpoints and (checkpoints[0] < 0 or checkpoints[-1] > values["x_max"]):
            raise ValueError("Checkpoints must lie in [0, x_max]")
        return values


class SegmentTask(NamedTuple):
    lo: int
    hi: int
    params: BeattyParams
    base: np.ndarray
    width: int


class SegmentCounts(NamedTuple):
    c: int
    a: int
    n: int
    c_star: int
    a_star: int
    n_star: int


def count_segment(task: SegmentTask) -> SegmentCounts:
    table = segment_factors(task.lo, task.hi, task.base, task.width)
    cyclic, abelian, nilpotent = classify_segment(table)
    member = np.zeros(task.hi - task.lo + 1, dtype=bool)
    member[terms_between(task.lo, task.hi, task.params) - task.lo] = True
    counts = SegmentCounts(
        *(
            int(np.count_nonzero(mask))
            for mask in (
                cyclic,
                abelian,
                nilpotent,
                cyclic & member,
                abelian & member,
                nilpotent & member,
            )
        )
    )
    logger.debug("Census segment done", lo=task.lo, hi=task.hi, counts=tuple(counts))
    return counts


def _add(left: SegmentCounts, right: SegmentCounts) -> SegmentCounts:
    return SegmentCounts(*(a + b for a, b in zip(left, right)))


def _check_row(counts: SegmentCounts, x: int) -> None:
    c, a, n, c_star, a_star, n_star = counts
    if not (c <= a <= n <= x and c_star <= a_star <= n_star) or any(
        s > u for s, u in ((c_star, c), (a_star, a), (n_star, n))
    ):
        raise InvariantError(f"Census counts {tuple(counts)} at x={x} break the class chain")


def check_resume(rows: List[CensusRow], params: BeattyParams) -> None:
    for row in rows:
        if row.alpha != params.alpha.label or row.beta != params.beta_label:
            raise UsageError(
                f"Checkpoint row x={row.x} was computed for alpha={row.alpha}, "
                f"beta={row.beta}, not alpha={params.alpha.label}, beta={params.beta_label}"
            )


@async_to_sync
async def _census(
    config: CensusConfig,
    resume_rows: List[CensusRow],
    on_row: Optional[Callable[[CensusRow], None]],
    base: np.ndarray,
    executor: Optional[Executor],
) -> List[CensusRow]:
    params = config.params
    rows = list(resume_rows)
    done = rows[-1].x if rows else 0
    counts = (
        SegmentCounts(*(getattr(rows[-1], f) for f in SegmentCounts._fields))
        if rows
        else SegmentCounts(0, 0, 0, 0, 0, 0)
    )
    wall_offset = rows[-1].wall_s if rows else 0.0
    started = time.perf_counter()
    width = max_distinct_primes(config.x_max)

    for x in config.checkpoints:
        if x < done or (rows and x == done):
            continue
        tasks = [
            SegmentTask(lo, hi, params, base, width)
            for lo, hi in segment_bounds(done + 1, x, config.segment_size)
        ]
        for part in await gather_segments(count_segment, tasks, executor):
            counts = _add(counts, part)
        _check_row(counts, x)
        row = CensusRow(
            x=x,
            **counts._asdict(),
            alpha=params.alpha.label,
            beta=params.beta_label,
            wall_s=round(wall_offset + time.perf_counter() - started, 3),
        )
        rows.append(row)
        done = x
        logger.info("Census checkpoint done", x=x, segments=len(tasks))
        if on_row is not None:
            on_row(row)
    return rows


def run_census(
    config: CensusConfig,
    resume_rows: Optional[List[CensusRow]] = None,
    on_row: Optional[Callable[[CensusRow], None]] = None,
    settings: Optional[Settings] = None,
) -> List[CensusRow]:
    """Exact C, A, N and their Beatty-restricted counts at each checkpoint.

    Args:
        config: The census to run.
        resume_rows: Rows of an earlier run of the same census; counting
            restarts after the last of them.
        on_row: Called with every newly completed checkpoint row.
        settings: Resource caps; defaults to ``get_settings()``.

    Returns:
        One row per checkpoint, resumed rows included.
    """
    settings = settings or get_settings()
    if config.x_max > settings.census_x_cap:
        raise ResourceError(
            f"x_max = {config.x_max} exceeds the census cap {settings.census_x_cap}"
        )
    resume_rows = resume_rows or []
    check_resume(resume_rows, config.params)
    checkpoints = config.checkpoints or [config.x_max]
    config = config.copy(update={"checkpoints": checkpoints})
    base = base_primes(isqrt(config.x_max))

    with bound_contextvars(
        alpha=config.params.alpha.label,
        beta=config.params.beta_label,
        x_max=config.x_max,
    ):
        logger.info("Census started", workers=config.worker_count, resumed=len(resume_rows))
        if config.worker_count == 1:
            return _census(config, resume_rows, on_row, base, None)
        with ProcessPoolExecutor(max_workers=config.worker_count) as executor:
            return _census(config, resume_rows, on_row, base, executor)


def ratio_report(rows: List[CensusRow], alpha: AlphaValue) -> List[RatioRow]:
    if not rows:
        raise UsageError("ratio_report needs at least one census row")
    inverse_alpha = 1 / alpha.approx()
    report = []
    for row in rows:
        if min(row.c, row.a, row.n) == 0:
            report.append(
                RatioRow(
                    x=row.x,
                    c_ratio=None,
                    a_ratio=None,
                    n_ratio=None,
                    inverse_alpha=inverse_alpha,
                    c_deviation=None,
                    a_deviation=None,
                    n_deviation=None,
                    excluded=True,
                )
            )
            continue
        ratios = [row.c_star / row.c, row.a_star / row.a, row.n_star / row.n]
        deviations = [abs(ratio - inverse_alpha) for ratio in ratios]
        report.append(
            RatioRow(
                x=row.x,
                c_ratio=ratios[0],
                a_ratio=ratios[1],
                n_ratio=ratios[2],
                inverse_alpha=inverse_alpha,
                c_deviation=deviations[0],
                a_deviation=deviations[1],
                n_deviation=deviations[2],
            )
        )
    return report


def ratio_converges(report: List[RatioRow]) -> bool:
    """Whether the last usable row deviates no more than the first."""
    usable = [row for row in report if not row.excluded]
    if not usable:
        return False
    first, last = usable[0], usable[-1]
    return all(
        getattr(last, name) <= getattr(first, name)
        for name in ("c_deviation", "a_deviation", "n_deviation")
    )


MAX_COMPARISON_ORDER = max(
    series_coefficients(tag).max_printed_order for tag in SeriesClass
)


def theorem_comparison(row: CensusRow, order: int, alpha: AlphaValue) -> List[ComparisonRow]:
    """Counts against the truncated expansions, with and without alpha.

    Classes whose printed expansion is shorter than ``order`` are evaluated at
    their longest order and marked truncated.
    """
    if not 0 <= order <= MAX_COMPARISON_ORDER:
        raise UsageError(f"Order must lie in 0..{MAX_COMPARISON_ORDER}, got {order}")
    counts = {
        SeriesClass.C: (row.c, row.c_star),
        SeriesClass.A_MINUS_C: (row.a - row.c, row.a_star - row.c_star),
        SeriesClass.N_MINUS_A: (row.n - row.a, row.n_star - row.a_star),
    }
    table = []
    for tag, (plain, starred) in counts.items():
        used = min(order, series_coefficients(tag).max_printed_order)
        for label, count, scale in ((tag.value, plain, 1), (f"{tag.value}*", starred, alpha)):
            prediction = eval_series(tag, row.x, used, scale)
            table.append(
                ComparisonRow(
                    x=row.x,
                    series=label,
                    order=used,
                    count=count,
                    prediction=prediction,
                    ratio=round(count / prediction, 4),
                    truncated=used < order,
                )
            )
    return table
