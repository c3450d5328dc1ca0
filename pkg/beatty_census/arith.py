# SPDX-FileCopyrightText: Magenta ApS
#
# SPDX-License-Identifier: MPL-2.0
"""Factorisation sieves and the cyclic, abelian and nilpotent criteria.

Every group of order n is cyclic exactly when gcd(n, phi(n)) = 1, nilpotent
exactly when gcd(n, F(n)) = 1 where F(p^a) = (p^a - 1)(p^(a-1) - 1)...(p - 1),
and abelian exactly when n is also cubefree. The predicates here decide those
gcds structurally from the prime factorisation so the census never touches the
large products; ``classify_naive_oracle`` computes them literally.
"""
from enum import Enum
from math import gcd, isqrt, prod
from typing import Iterable, NamedTuple, Optional, Tuple

import numpy as np
import structlog
from sympy import factorint

from beatty_census.config import Settings, get_settings
from beatty_census.errors import InvariantError, ResourceError, UsageError

logger = structlog.stdlib.get_logger()

MAX_N = 2**63 - 1


class Factorization(NamedTuple):
    n: int
    factors: Tuple[Tuple[int, int], ...]

    @property
    def primes(self) -> Tuple[int, ...]:
        return tuple(p for p, _ in self.factors)

    @property
    def is_squarefree(self) -> bool:
        return all(a == 1 for _, a in self.factors)

    @property
    def is_cubefree(self) -> bool:
        return all(a <= 2 for _, a in self.factors)


def make_factorization(n: int, factors: Iterable[Tuple[int, int]]) -> Factorization:
    """Build a Factorization, checking that it really decomposes n."""
    factors = tuple((int(p), int(a)) for p, a in factors)
    primes = [p for p, _ in factors]
    if any(a < 1 for _, a in factors) or primes != sorted(set(primes)):
        raise InvariantError(f"Malformed factorisation of {n}: {factors}")
    if prod(p**a for p, a in factors) != n:
        raise InvariantError(f"Factors {factors} do not multiply to {n}")
    return Factorization(n, factors)


class SpfTable(NamedTuple):
    limit: int
    spf: np.ndarray

    def smallest_prime_factor(self, i: int) -> int:
        return int(self.spf[i])


def build_spf_table(limit: int, settings: Optional[Settings] = None) -> SpfTable:
    settings = settings or get_settings()
    if limit < 2:
        raise UsageError(f"SPF table limit must be at least 2, got {limit}")
    if limit > settings.spf_limit_cap:
        raise ResourceError(
            f"SPF table limit {limit} exceeds the configured cap {settings.spf_limit_cap}"
        )

    spf = np.zeros(limit + 1, dtype=np.uint32)
    for p in range(2, isqrt(limit) + 1):
        if spf[p]:
            continue
        # Slices of a numpy array are views, so this writes into spf.
        multiples = spf[p * p :: p]
        multiples[multiples == 0] = p
    unmarked = np.flatnonzero(spf == 0)
    unmarked = unmarked[unmarked >= 2]
    spf[unmarked] = unmarked
    logger.debug("SPF table built", limit=limit)
    return SpfTable(limit, spf)


def base_primes(limit: int) -> np.ndarray:
    """All primes <= limit as an int64 array."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(limit + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, isqrt(limit) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return np.flatnonzero(sieve).astype(np.int64)


def factorize(n: int, table: SpfTable) -> Factorization:
    if not 1 <= n <= table.limit:
        raise UsageError(f"{n} is outside the SPF table range [1, {table.limit}]")
    factors = []
    rest = n
    while rest > 1:
        p = table.smallest_prime_factor(rest)
        a = 0
        while rest % p == 0:
            rest //= p
            a += 1
        factors.append((p, a))
    return Factorization(n, tuple(factors))


def factorize_any(n: int, table: Optional[SpfTable] = None) -> Factorization:
    """Factorise any n in [1, 2^63) using the SPF table when it covers n."""
    if not 1 <= n <= MAX_N:
        raise UsageError(f"n must lie in [1, 2^63), got {n}")
    if table is not None and n <= table.limit:
        return factorize(n, table)
    return make_factorization(n, sorted(factorint(n).items()))


def euler_phi(f: Factorization) -> int:
    return prod(p ** (a - 1) * (p - 1) for p, a in f.factors)


def group_totient(f: Factorization) -> int:
    return prod(p**i - 1 for p, a in f.factors for i in range(1, a + 1))


def is_cyclic(f: Factorization) -> bool:
    if not f.is_squarefree:
        return False
    primes = f.primes
    return not any(q % p == 1 for p in primes for q in primes if q != p)


def is_nilpotent(f: Factorization) -> bool:
    # p | q^i - 1 for some i <= b, where q^b exactly divides n
    return not any(
        pow(q, i, p) == 1
        for p in f.primes
        for q, b in f.factors
        if q != p
        for i in range(1, b + 1)
    )


def is_abelian(f: Factorization) -> bool:
    return f.is_cubefree and is_nilpotent(f)


class NumberClass(Enum):
    CYCLIC = "Cyclic"
    ABELIAN_NOT_CYCLIC = "AbelianNotCyclic"
    NILPOTENT_NOT_ABELIAN = "NilpotentNotAbelian"
    NOT_NILPOTENT = "NotNilpotent"

    @classmethod
    def from_flags(cls, cyclic: bool, abelian: bool, nilpotent: bool) -> "NumberClass":
        if (cyclic and not abelian) or (abelian and not nilpotent):
            raise InvariantError(
                f"Broken chain cyclic={cyclic} abelian={abelian} nilpotent={nilpotent}"
            )
        if cyclic:
            return cls.CYCLIC
        if abelian:
            return cls.ABELIAN_NOT_CYCLIC
        if nilpotent:
            return cls.NILPOTENT_NOT_ABELIAN
        return cls.NOT_NILPOTENT

    @property
    def is_cyclic(self) -> bool:
        return self is NumberClass.CYCLIC

    @property
    def is_abelian(self) -> bool:
        return self in (NumberClass.CYCLIC, NumberClass.ABELIAN_NOT_CYCLIC)

    @property
    def is_nilpotent(self) -> bool:
        return self is not NumberClass.NOT_NILPOTENT


def classify(f: Factorization) -> NumberClass:
    return NumberClass.from_flags(is_cyclic(f), is_abelian(f), is_nilpotent(f))


def _trial_division(n: int) -> Tuple[Tuple[int, int], ...]:
    factors = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            a = 0
            while n % d == 0:
                n //= d
                a += 1
            factors.append((d, a))
        d += 1 if d == 2 else 2
    if n > 1:
        factors.append((n, 1))
    return tuple(factors)


def classify_naive_oracle(n: int) -> NumberClass:
    """Classify n from the literal gcds, with no use of the sieve path."""
    if not 1 <= n <= MAX_N:
        raise UsageError(f"n must lie in [1, 2^63), got {n}")
    f = Factorization(n, _trial_division(n))
    cyclic = gcd(n, euler_phi(f)) == 1
    nilpotent = gcd(n, group_totient(f)) == 1
    abelian = f.is_cubefree and nilpotent
    return NumberClass.from_flags(cyclic, abelian, nilpotent)


# Segmented factor tables used by the census and the rough-number counts.


class SegmentFactors(NamedTuple):
    """Prime factorisations of every integer in [lo, lo + size).

    Column k of ``primes`` and ``exponents`` holds the k-th smallest prime
    factor of each integer; columns at or beyond ``omega`` are zero padding.
    """

    lo: int
    primes: np.ndarray
    exponents: np.ndarray
    omega: np.ndarray


def max_distinct_primes(limit: int) -> int:
    """Largest number of distinct prime factors of any n <= limit."""
    width, primorial = 0, 1
    for p in base_primes(64):
        if primorial * int(p) > limit:
            break
        primorial *= int(p)
        width += 1
    return max(width, 1)


def segment_factors(
    lo: int, hi: int, primes: np.ndarray, width: Optional[int] = None
) -> SegmentFactors:
    """Factorise [lo, hi] by striking out base primes up to sqrt(hi)."""
    if lo < 1 or hi < lo:
        raise UsageError(f"Bad segment [{lo}, {hi}]")
    width = width or max_distinct_primes(hi)
    size = hi - lo + 1
    remaining = np.arange(lo, hi + 1, dtype=np.int64)
    table_primes = np.zeros((width, size), dtype=np.int64)
    exponents = np.zeros((width, size), dtype=np.int8)
    omega = np.zeros(size, dtype=np.int8)

    for p in primes.tolist():
        if p * p > hi:
            break
        hit = np.arange((-lo) % p, size, p)
        if hit.size == 0:
            continue
        column = omega[hit]
        table_primes[column, hit] = p
        exponents[column, hit] = 1
        omega[hit] += 1
        remaining[hit] //= p
        again = hit[remaining[hit] % p == 0]
        while again.size:
            exponents[omega[again] - 1, again] += 1
            remaining[again] //= p
            again = again[remaining[again] % p == 0]

    # Whatever is left above 1 is a single prime larger than sqrt(hi).
    large = np.flatnonzero(remaining > 1)
    column = omega[large]
    table_primes[column, large] = remaining[large]
    exponents[column, large] = 1
    omega[large] += 1
    return SegmentFactors(lo, table_primes, exponents, omega)


def classify_segment(table: SegmentFactors) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised is_cyclic, is_abelian and is_nilpotent masks for a segment."""
    width, size = table.primes.shape
    squarefree = (table.exponents <= 1).all(axis=0)
    cubefree = (table.exponents <= 2).all(axis=0)
    nilpotent = np.ones(size, dtype=bool)
    no_linked_pair = np.ones(size, dtype=bool)

    for i in range(width):
        rows_i = np.flatnonzero(table.omega > i)
        if rows_i.size == 0:
            break
        for j in range(width):
            if j == i:
                continue
            rows = rows_i[table.omega[rows_i] > j]
            if rows.size == 0:
                continue
            p = table.primes[i, rows]
            q = table.primes[j, rows]
            b = table.exponents[j, rows]
            residue = q % p
            bad = residue == 1
            no_linked_pair[rows[bad]] = False

            # Walk q^t mod p for t = 2..b on the rows not yet decided.
            power = residue.copy()
            t = 2
            active = np.flatnonzero((b >= t) & ~bad)
            while active.size:
                power[active] = power[active] * residue[active] % p[active]
                newly = power[active] == 1
                bad[active[newly]] = True
                t += 1
                active = active[~newly & (b[active] >= t)]
            nilpotent[rows[bad]] = False

    cyclic = squarefree & no_linked_pair
    abelian = cubefree & nilpotent
    if np.any(cyclic & ~abelian) or np.any(abelian & ~nilpotent):
        raise InvariantError(f"Class chain broken in segment starting at {table.lo}")
    return cyclic, abelian, nilpotent
