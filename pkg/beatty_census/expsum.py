# SPDX-FileCopyrightText: Magenta ApS
#
# SPDX-License-Identifier: MPL-2.0
"""Discrepancy, exponential sum and sawtooth approximation diagnostics."""
from fractions import Fraction
from math import floor, fsum, log, pi
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import structlog

from beatty_census.analytic import cutoff_params
from beatty_census.arith import base_primes
from beatty_census.beatty import (
    AlphaValue,
    BeattyParams,
    BetaValue,
    LinearForm,
    QuadraticAlpha,
    contains_many,
    estimate_type,
    nearest_int_distance,
)
from beatty_census.errors import UsageError
from beatty_census.models import ExpSumRow

logger = structlog.stdlib.get_logger()

PHASE_BITS = 160
MAX_PHASE_INDEX = 2**27
# Default thresholds for the rough indicators, taken at the census scale.
DEFAULT_CUTOFF_X = 10**8


def sawtooth(t: float) -> float:
    return t - floor(t) - 0.5


def fsum_complex(values: np.ndarray) -> complex:
    """Correctly rounded sum of complex terms."""
    return complex(fsum(values.real.tolist()), fsum(values.imag.tolist()))


class UnitSequence(NamedTuple):
    values: np.ndarray

    @classmethod
    def from_reals(cls, values: Sequence[float]) -> "UnitSequence":
        reduced = np.mod(np.asarray(values, dtype=np.float64), 1.0)
        # np.mod maps tiny negatives to exactly 1.0.
        reduced[reduced >= 1.0] = 0.0
        return cls(reduced)

    @classmethod
    def beatty_phases(cls, alpha: AlphaValue, N: int) -> "UnitSequence":
        """m * alpha mod 1 for m = 1..N."""
        theta = alpha.fraction_bits(LinearForm(alpha=Fraction(1)), PHASE_BITS)
        return cls(unit_fraction(theta, np.arange(1, N + 1, dtype=np.int64)))

    def __len__(self) -> int:
        return int(self.values.size)


def unit_fraction(theta_bits: int, m: np.ndarray) -> np.ndarray:
    """{m * theta} for theta = theta_bits / 2**160 and integer m < 2**27.

    theta is split into two 26-bit pieces and a remainder so that m times each
    piece is an exact double.
    """
    m = np.asarray(m, dtype=np.int64)
    if m.size and (m.min() < 0 or m.max() >= MAX_PHASE_INDEX):
        raise UsageError(f"Phase multipliers must lie in [0, 2^27), got up to {m.max()}")
    high = theta_bits >> (PHASE_BITS - 26)
    middle = (theta_bits >> (PHASE_BITS - 52)) & ((1 << 26) - 1)
    low = float(Fraction(theta_bits & ((1 << (PHASE_BITS - 52)) - 1), 1 << PHASE_BITS))
    mf = m.astype(np.float64)
    total = np.mod(mf * (high / 2.0**26), 1.0)
    total += np.mod(mf * (middle / 2.0**52), 1.0)
    total += mf * low
    total = np.mod(total, 1.0)
    total[total >= 1.0] = 0.0
    return total


def unit_phase(theta_bits: int, m: np.ndarray) -> np.ndarray:
    """e(m * theta) = exp(2 pi i m theta) with exact argument reduction."""
    return np.exp(2j * pi * unit_fraction(theta_bits, m))


class ErdosTuranResult(NamedTuple):
    J: int
    N: int
    actual_dev: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.actual_dev <= self.bound


def erdos_turan(seq: UnitSequence, J: int, rho: float, sigma: float) -> ErdosTuranResult:
    N = len(seq)
    if N < 1 or J < 1:
        raise UsageError(f"Need N >= 1 and J >= 1, got N={N}, J={J}")
    if not rho <= sigma <= rho + 1:
        raise UsageError(f"Interval [{rho}, {sigma}] is not a valid interval mod 1")
    width = sigma - rho
    if width >= 1:
        count = N
    else:
        shifted = UnitSequence.from_reals(seq.values - rho).values
        count = int(np.count_nonzero(shifted <= width))
    actual_dev = abs(count - width * N)

    weighted = [
        abs(fsum_complex(np.exp(2j * pi * np.mod(j * seq.values, 1.0)))) / j
        for j in range(1, J + 1)
    ]
    bound = N / (J + 1) + 3 * fsum(weighted)
    return ErdosTuranResult(J, N, actual_dev, bound)


def random_erdos_turan_suite(count: int = 200, seed: int = 0) -> List[ErdosTuranResult]:
    """Erdos-Turan checks over randomized sequences, orders and intervals."""
    rng = np.random.default_rng(seed)
    alphas = [QuadraticAlpha.create(0, 1, 1, d) for d in (2, 3, 5, 7)]
    results = []
    for i in range(count):
        N = int(rng.integers(10, 2000))
        kind = i % 3
        if kind == 0:
            seq = UnitSequence.beatty_phases(alphas[int(rng.integers(len(alphas)))], N)
        elif kind == 1:
            seq = UnitSequence.from_reals(rng.random(N))
        else:
            centre = rng.random()
            seq = UnitSequence.from_reals(centre + 0.05 * rng.standard_normal(N))
        J = int(rng.integers(1, 60))
        rho = float(rng.uniform(-1.0, 1.0))
        sigma = rho + float(rng.random())
        results.append(erdos_turan(seq, J, rho, sigma))
    return results


def _smallest_prime_factor_flags(N: int, threshold: float) -> np.ndarray:
    """True for m in 0..N with no prime factor <= threshold."""
    flags = np.ones(N + 1, dtype=bool)
    flags[0] = False
    for p in base_primes(int(floor(threshold))).tolist():
        flags[p::p] = False
    return flags


def _mobius(N: int) -> np.ndarray:
    mu = np.ones(N + 1, dtype=np.int8)
    mu[0] = 0
    for p in base_primes(N).tolist():
        mu[p::p] *= -1
        mu[p * p :: p * p] = 0
    return mu


def _one(N: int, z: float, y: float) -> np.ndarray:
    weights = np.ones(N + 1)
    weights[0] = 0.0
    return weights


def _mobius_weights(N: int, z: float, y: float) -> np.ndarray:
    return _mobius(N).astype(np.float64)


def _rough_weights(N: int, z: float, y: float) -> np.ndarray:
    return _smallest_prime_factor_flags(N, z).astype(np.float64)


def _squarefree_rough_weights(N: int, z: float, y: float) -> np.ndarray:
    squarefree = _mobius(N) != 0
    return (squarefree & _smallest_prime_factor_flags(N, y)).astype(np.float64)


MULTIPLICATIVE_SPECS: Dict[str, Callable[[int, float, float], np.ndarray]] = {
    "one": _one,
    "mobius": _mobius_weights,
    "rough": _rough_weights,
    "squarefree_rough": _squarefree_rough_weights,
}


def validity_limit(N: int, tau: float) -> float:
    """Largest j for which the multiplicative sum decay is claimed at N."""
    return N ** (1 / (3 * tau)) / log(N) ** (3 + 3 / (2 * tau))


def multiplicative_expsum(
    f_spec: str,
    alpha: AlphaValue,
    j: int,
    N_grid: Sequence[int],
    tau: Optional[float] = None,
    z: Optional[float] = None,
    y: Optional[float] = None,
) -> List[ExpSumRow]:
    """|sum_{m <= N} f(m) e(j m / alpha)| against N / log N for each N."""
    weights_for = MULTIPLICATIVE_SPECS.get(f_spec)
    if weights_for is None:
        raise UsageError(
            f"Unknown multiplicative function {f_spec!r}; use {', '.join(MULTIPLICATIVE_SPECS)}"
        )
    if j < 1:
        raise UsageError(f"j must be at least 1, got {j}")
    grid = sorted(set(N_grid))
    if not grid or grid[0] < 2:
        raise UsageError("Every N must be at least 2")

    cutoff = cutoff_params(DEFAULT_CUTOFF_X)
    z = cutoff.z if z is None else z
    y = cutoff.y if y is None else y
    if tau is None:
        tau = estimate_type(alpha, 10**6).tau_hat

    N_max = grid[-1]
    theta = alpha.fraction_bits(LinearForm(inverse=Fraction(j)), PHASE_BITS)
    weights = weights_for(N_max, z, y)[1:]
    terms = weights * unit_phase(theta, np.arange(1, N_max + 1, dtype=np.int64))

    rows = []
    for N in grid:
        magnitude = abs(fsum_complex(terms[:N]))
        in_window = j <= validity_limit(N, tau)
        rows.append(
            ExpSumRow(
                j_or_d=j,
                N=N,
                observed=magnitude,
                reference=N / log(N),
                flag="in_window" if in_window else "outside_window",
            )
        )
    logger.info("Multiplicative sum done", f_spec=f_spec, alpha=alpha.label, j=j)
    return rows


def minsum_type1(alpha: AlphaValue, x: float, N: int) -> float:
    """sum_{n <= N} min(x / n, 1 / ||alpha n||)."""
    if x <= 0 or N < 1:
        raise UsageError(f"Need x > 0 and N >= 1, got x={x}, N={N}")
    return fsum(min(x / n, 1 / nearest_int_distance(alpha, n)) for n in range(1, N + 1))


def minsum_type2(alpha: AlphaValue, beta: BetaValue, x: float, N: int) -> float:
    """sum_{n <= N} min(x, 1 / ||alpha n + beta||)."""
    if x <= 0 or N < 1:
        raise UsageError(f"Need x > 0 and N >= 1, got x={x}, N={N}")
    return fsum(min(x, 1 / nearest_int_distance(alpha, n, beta)) for n in range(1, N + 1))


def minsum_reference(
    N: int, x: float, tau: float = 1.0, epsilon: float = 0.05, second_kind: bool = False
) -> float:
    exponent = 1 - 1 / (1 + tau) + epsilon
    if second_kind:
        return N ** (1 + epsilon) + (x * N) ** exponent + x
    return N ** (1 + epsilon) + x**exponent


class TrigApprox(NamedTuple):
    """Coefficients of the sawtooth approximation at level H.

    ``a`` maps 1 <= |h| <= H to the approximating coefficients and ``b`` maps
    |h| <= H to the coefficients of the non-negative majorant of the error.
    """

    H: int
    a: Dict[int, complex]
    b: Dict[int, float]

    def a_sum(self, t: np.ndarray) -> np.ndarray:
        return self._evaluate(self.a, t)

    def majorant(self, t: np.ndarray) -> np.ndarray:
        return self._evaluate(self.b, t)

    def _evaluate(self, coefficients: Dict[int, complex], t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        hs = np.array(sorted(coefficients), dtype=np.int64)
        cs = np.array([coefficients[h] for h in hs.tolist()], dtype=np.complex128)
        total = np.zeros(t.size, dtype=np.complex128)
        for start in range(0, t.size, 4096):
            block = t[start : start + 4096]
            phases = np.mod(np.outer(block, hs), 1.0)
            total[start : start + 4096] = np.exp(2j * pi * phases) @ cs
        return total


def _vaaler_weight(u: float) -> float:
    u = abs(u)
    return pi * u * (1 - u) / np.tan(pi * u) + u


def vaaler_approx(H: int) -> TrigApprox:
    if H < 1:
        raise UsageError(f"H must be at least 1, got {H}")
    a: Dict[int, complex] = {}
    b: Dict[int, float] = {}
    for h in range(1, H + 1):
        coefficient = 1j * _vaaler_weight(h / (H + 1)) / (2 * pi * h)
        a[h] = coefficient
        a[-h] = coefficient.conjugate()
    for h in range(-H, H + 1):
        b[h] = (1 - abs(h) / (H + 1)) / (2 * H + 2)
    return TrigApprox(H, a, b)


class VaalerCheck(NamedTuple):
    H: int
    grid: int
    max_violation: float
    majorant_imag: float
    majorant_min: float
    max_error: float
    mean_error: float

    @property
    def passes(self) -> bool:
        return (
            self.max_violation <= 1e-12
            and self.majorant_imag <= 1e-12
            and self.majorant_min >= -1e-12
            and self.mean_error <= 1.1 / (self.H + 1)
        )


def vaaler_check(H: int, grid: int = 10**5) -> VaalerCheck:
    """Check the approximation and its majorant on the grid k / grid in [0, 1)."""
    approx = vaaler_approx(H)
    t = np.arange(grid, dtype=np.float64) / grid
    psi = t - np.floor(t) - 0.5
    error = np.abs(psi - approx.a_sum(t).real)
    majorant = approx.majorant(t)
    return VaalerCheck(
        H=H,
        grid=grid,
        max_violation=float(np.max(error - majorant.real)),
        majorant_imag=float(np.max(np.abs(majorant.imag))),
        majorant_min=float(np.min(majorant.real)),
        max_error=float(np.max(error)),
        mean_error=float(np.mean(error)),
    )


class DivisorError(NamedTuple):
    d: int
    N: int
    count: int
    main: float
    err: float


def divisor_beatty_error(d: int, N: int, params: BeattyParams) -> DivisorError:
    """Members of the sequence up to N divisible by d, against N / (alpha d)."""
    if d < 1 or N < 1:
        raise UsageError(f"Need d >= 1 and N >= 1, got d={d}, N={N}")
    multiples = np.arange(d, N + 1, d, dtype=np.int64)
    count = int(np.count_nonzero(contains_many(multiples, params)))
    main = N / (params.alpha.approx() * d)
    return DivisorError(d, N, count, main, count - main)


def max_divisor_error(d_max: int, N: int, params: BeattyParams) -> Tuple[int, float]:
    """The d <= d_max with the largest |err| at N, and that |err|."""
    errors = [divisor_beatty_error(d, N, params) for d in range(1, d_max + 1)]
    worst = max(errors, key=lambda e: abs(e.err))
    return worst.d, abs(worst.err)

