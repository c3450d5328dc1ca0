# SPDX-FileCopyrightText: Magenta ApS
#
# SPDX-License-Identifier: MPL-2.0
"""Constants, Mertens diagnostics, rough counts and the asymptotic series."""
from concurrent.futures import ProcessPoolExecutor
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from math import ceil, isqrt, prod
from typing import List, NamedTuple, Optional, Sequence, Union

import numpy as np
import structlog
from mpmath import mp, mpf

from beatty_census.arith import base_primes, max_distinct_primes, segment_factors
from beatty_census.beatty import AlphaValue, BeattyParams, contains_many, terms_between
from beatty_census.config import Settings, get_settings
from beatty_census.errors import DomainError, InvariantError, ResourceError, UsageError
from beatty_census.models import AnalyticRow
from beatty_census.util import async_to_sync, gather_segments, segment_bounds

logger = structlog.stdlib.get_logger()

CONSTANT_BITS = 100
REFERENCE_DIGITS = {
    "gamma": "0.577215664901532860606512090082",
    "zeta3": "1.20205690315959428539973816151",
    "pi": "3.14159265358979323846264338328",
    "mertens": "0.261497212847642783755426838609",
}


class Constants(NamedTuple):
    gamma: mpf
    exp_neg_gamma: mpf
    zeta3: mpf
    pi: mpf
    pi_sq: mpf
    mertens: mpf


@lru_cache(maxsize=1)
def get_constants() -> Constants:
    with mp.workprec(CONSTANT_BITS):
        gamma = +mp.euler
        constants = Constants(
            gamma=gamma,
            exp_neg_gamma=mp.exp(-gamma),
            zeta3=mp.zeta(3),
            pi=+mp.pi,
            pi_sq=mp.pi**2,
            mertens=+mp.mertens,
        )
        for name, digits in REFERENCE_DIGITS.items():
            if abs(getattr(constants, name) - mp.mpf(digits)) > mp.mpf("1e-25"):
                raise InvariantError(f"Constant {name} disagrees with its reference digits")
    return constants


def mertens_constant() -> float:
    return float(get_constants().mertens)


class SeriesClass(str, Enum):
    C = "C"
    A_MINUS_C = "A_minus_C"
    N_MINUS_A = "N_minus_A"


class SeriesExpansion(NamedTuple):
    class_tag: SeriesClass
    coefficients: tuple
    max_printed_order: int


def series_coefficients(class_tag: SeriesClass) -> SeriesExpansion:
    k = get_constants()
    with mp.workprec(CONSTANT_BITS):
        g = k.gamma
        if class_tag is SeriesClass.C:
            coefficients = [
                mpf(1),
                -g,
                g**2 + 1 / (12 * k.pi_sq),
                -(g**3 + g * k.pi_sq / 4 + 2 * k.zeta3 / 3),
            ]
        elif class_tag is SeriesClass.A_MINUS_C:
            coefficients = [
                mpf(1),
                -2 * g,
                3 * g**2 + 1 / (4 * k.pi_sq),
                -(4 * g**3 + g * k.pi_sq + 8 * k.zeta3 / 3),
            ]
        else:
            coefficients = [mpf(1), 1 - 2 * g, -2 * g + 5 * g**2 / 2 + k.pi_sq / 6]
    return SeriesExpansion(
        class_tag, tuple(float(c) for c in coefficients), len(coefficients) - 1
    )


class CutoffParams(NamedTuple):
    x: int
    y: float
    z: float


def cutoff_params(x: int) -> CutoffParams:
    """y = log2(x) / log3(x) and z = exp(sqrt(log3(x))) * log2(x).

    Here log2 and log3 are the twice and thrice iterated natural logarithms.
    """
    if x <= 16:
        raise DomainError(f"Cutoff parameters need x > 16, got {x}")
    with mp.workprec(CONSTANT_BITS):
        log2 = mp.log(mp.log(x))
        log3 = mp.log(log2)
        return CutoffParams(x, float(log2 / log3), float(mp.exp(mp.sqrt(log3)) * log2))


def _alpha_value(alpha: Union[AlphaValue, float, int]) -> float:
    value = alpha.approx() if isinstance(alpha, AlphaValue) else float(alpha)
    if value < 1:
        raise UsageError(f"alpha must be at least 1, got {value}")
    return value


def series_prefactor(
    class_tag: SeriesClass, x: int, alpha: Union[AlphaValue, float, int] = 1
) -> float:
    if x <= 16:
        raise DomainError(f"The expansions need x > 16, got {x}")
    k = get_constants()
    with mp.workprec(CONSTANT_BITS):
        log2 = mp.log(mp.log(x))
        log3 = mp.log(log2)
        main = k.exp_neg_gamma * x / _alpha_value(alpha)
        if class_tag is SeriesClass.C:
            return float(main / log3)
        if class_tag is SeriesClass.A_MINUS_C:
            return float(main / (log2 * log3**2))
        return float(main / (log2**2 * log3**2))


def eval_series(
    class_tag: SeriesClass,
    x: int,
    order: int,
    alpha: Union[AlphaValue, float, int] = 1,
) -> float:
    """Prefactor times the expansion truncated after the 1/log3(x)**order term."""
    expansion = series_coefficients(class_tag)
    if not 0 <= order <= expansion.max_printed_order:
        raise UsageError(
            f"Order {order} outside the printed range 0..{expansion.max_printed_order} "
            f"for {class_tag.value}"
        )
    prefactor = series_prefactor(class_tag, x, alpha)
    if order == 0:
        return prefactor
    with mp.workprec(CONSTANT_BITS):
        log3 = mp.log(mp.log(mp.log(x)))
        total = mp.fsum(c / log3**k for k, c in enumerate(expansion.coefficients[: order + 1]))
        return float(prefactor * total)


class MertensResult(NamedTuple):
    X: int
    observed: float
    predicted: float
    exact: Optional[Fraction]

    @property
    def ratio(self) -> float:
        return self.observed / self.predicted


def _primes_up_to(X: int, settings: Settings) -> np.ndarray:
    if X < 3:
        raise UsageError(f"Mertens diagnostics need X >= 3, got {X}")
    if X > settings.spf_limit_cap:
        raise ResourceError(f"X = {X} exceeds the sieve cap {settings.spf_limit_cap}")
    return base_primes(X)


def mertens_sum(X: int, settings: Optional[Settings] = None) -> MertensResult:
    settings = settings or get_settings()
    primes = _primes_up_to(X, settings).tolist()
    with mp.workprec(128):
        predicted = float(mp.log(mp.log(X)) + get_constants().mertens)
        if X <= settings.exact_rational_limit:
            exact = sum((Fraction(1, p) for p in primes), Fraction(0))
            return MertensResult(X, float(exact), predicted, exact)
        observed = float(mp.fsum(1 / mpf(p) for p in primes))
    return MertensResult(X, observed, predicted, None)


def mertens_product(X: int, settings: Optional[Settings] = None) -> MertensResult:
    settings = settings or get_settings()
    primes = _primes_up_to(X, settings).tolist()
    with mp.workprec(128):
        predicted = float(get_constants().exp_neg_gamma / mp.log(X))
        if X <= settings.exact_rational_limit:
            exact = prod((Fraction(p - 1, p) for p in primes), start=Fraction(1))
            return MertensResult(X, float(exact), predicted, exact)
        observed = float(mp.exp(mp.fsum(mp.log1p(-1 / mpf(p)) for p in primes)))
    return MertensResult(X, observed, predicted, None)


def mertens_table(
    xs: Sequence[int], quantity: str = "product", settings: Optional[Settings] = None
) -> List[AnalyticRow]:
    evaluate = {"sum": mertens_sum, "product": mertens_product}.get(quantity)
    if evaluate is None:
        raise UsageError(f"Unknown Mertens quantity {quantity!r}; use sum or product")
    rows = []
    for X in xs:
        result = evaluate(X, settings)
        rows.append(
            AnalyticRow(
                X=X, observed=result.observed, predicted=result.predicted, ratio=result.ratio
            )
        )
    return rows


class RoughCount(NamedTuple):
    x: int
    y: float
    count: int
    product_prediction: float
    mertens_prediction: float


class RoughTask(NamedTuple):
    lo: int
    hi: int
    y: float
    small_primes: np.ndarray
    params: BeattyParams
    primes_in_beatty: bool
    base: np.ndarray
    width: int


def count_rough_segment(task: RoughTask) -> int:
    if not task.primes_in_beatty:
        rough = np.ones(task.hi - task.lo + 1, dtype=bool)
        for p in task.small_primes.tolist():
            rough[(-task.lo) % p :: p] = False
        members = terms_between(task.lo, task.hi, task.params)
        return int(np.count_nonzero(rough[members - task.lo]))

    # Every prime factor must be at least y and itself a member.
    table = segment_factors(task.lo, task.hi, task.base, task.width)
    bad = np.zeros(table.omega.size, dtype=bool)
    for column in range(table.primes.shape[0]):
        rows = np.flatnonzero(table.omega > column)
        if rows.size == 0:
            break
        primes = table.primes[column, rows]
        distinct, position = np.unique(primes, return_inverse=True)
        member = contains_many(distinct, task.params)[position]
        bad[rows[(primes < task.y) | ~member]] = True
    return int(bad.size - np.count_nonzero(bad))


@async_to_sync
async def _count_rough(tasks: List[RoughTask], worker_count: int) -> List[int]:
    if worker_count <= 1:
        return await gather_segments(count_rough_segment, tasks)
    with ProcessPoolExecutor(max_workers=worker_count) as executor:
        return await gather_segments(count_rough_segment, tasks, executor)


def rough_beatty_count(
    x: int,
    y: float,
    params: BeattyParams,
    primes_in_beatty: bool = False,
    worker_count: int = 1,
    settings: Optional[Settings] = None,
) -> RoughCount:
    """Count Beatty members n <= x with no prime factor below y.

    With ``primes_in_beatty`` the count is instead over all n <= x whose prime
    factors are each at least y and members of the sequence themselves.
    """
    settings = settings or get_settings()
    if y < 2:
        raise UsageError(f"y must be at least 2, got {y}")
    if y > settings.rough_y_cap:
        raise ResourceError(f"y = {y} exceeds the configured cap {settings.rough_y_cap}")
    if x < 1:
        raise UsageError(f"x must be at least 1, got {x}")

    small = base_primes(ceil(y) - 1)
    small = small[small < y]
    base = base_primes(isqrt(x)) if primes_in_beatty else small
    width = max_distinct_primes(x)
    tasks = [
        RoughTask(lo, hi, y, small, params, primes_in_beatty, base, width)
        for lo, hi in segment_bounds(1, x, settings.segment_size)
    ]
    count = sum(_count_rough(tasks, worker_count))

    alpha = params.alpha.approx()
    density = prod(1 - 1 / p for p in small.tolist())
    with mp.workprec(CONSTANT_BITS):
        mertens_prediction = float(get_constants().exp_neg_gamma * x / (alpha * mp.log(y)))
    result = RoughCount(x, y, count, x / alpha * density, mertens_prediction)
    logger.info("Rough count done", x=x, y=y, count=count, alpha=params.alpha.label)
    return result


def rough_table(
    xs: Sequence[int],
    y: float,
    params: BeattyParams,
    worker_count: int = 1,
    settings: Optional[Settings] = None,
) -> List[AnalyticRow]:
    rows = []
    for x in xs:
        result = rough_beatty_count(x, y, params, worker_count=worker_count, settings=settings)
        rows.append(
            AnalyticRow(
                X=x,
                observed=result.count,
                predicted=result.product_prediction,
                ratio=result.count / result.product_prediction,
            )
        )
    return rows
