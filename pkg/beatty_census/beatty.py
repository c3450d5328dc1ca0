# SPDX-FileCopyrightText: Magenta ApS
#
# SPDX-License-Identifier: MPL-2.0
"""Exact Beatty sequences floor(alpha * r + beta) and diophantine helpers.

Every floor or sign decision goes through an ``AlphaValue`` applied to a
``LinearForm``. Quadratic irrationals decide exactly with integer square roots;
other constants are evaluated with mpmath at escalating precision until the
answer is certain.
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, isqrt, lcm, log
from typing import (
    TYPE_CHECKING,
    Any,
    Callable,
    Iterator,
    List,
    NamedTuple,
    Optional,
    Tuple,
    TypeVar,
    Union,
)

import numpy as np
import structlog
from mpmath import mp, mpf

from beatty_census.config import Settings, get_settings
from beatty_census.errors import InsufficientDataError, PrecisionError, UsageError
from beatty_census.pydantic_types import RationalValue

if TYPE_CHECKING:  # pragma: no cover
    from pydantic.typing import CallableGenerator

logger = structlog.stdlib.get_logger()

ZERO = Fraction(0)
FLOAT_EPS = 2.0**-52
DecisionType = TypeVar("DecisionType")


class LinearForm(NamedTuple):
    """const + alpha * a + inverse / a + beta * b + beta_inverse * b / a."""

    const: Fraction = ZERO
    alpha: Fraction = ZERO
    inverse: Fraction = ZERO
    beta: Fraction = ZERO
    beta_inverse: Fraction = ZERO

    def shifted(self, k: int) -> "LinearForm":
        return self._replace(const=Fraction(self.const) - k)

    def fold_beta(self, beta: Fraction) -> "LinearForm":
        """Absorb a rational beta into the const and inverse coefficients."""
        return LinearForm(
            const=Fraction(self.const) + Fraction(self.beta) * beta,
            alpha=Fraction(self.alpha),
            inverse=Fraction(self.inverse) + Fraction(self.beta_inverse) * beta,
        )


def _floor_surd(u: int, v: int, w: int, d: int) -> int:
    """floor((u + v * sqrt(d)) / w) for w > 0 and non-square d."""
    if v >= 0:
        s = isqrt(v * v * d)
    else:
        s = -isqrt(v * v * d) - 1
    return (u + s) // w


def _sign_surd(u: int, v: int, d: int) -> int:
    """Sign of u + v * sqrt(d) for non-square d."""
    if v == 0:
        return (u > 0) - (u < 0)
    if u >= 0 and v > 0:
        return 1
    if u <= 0 and v < 0:
        return -1
    rational, irrational = u * u, v * v * d
    if u > 0:
        return 1 if rational > irrational else -1
    return 1 if irrational > rational else -1


class AlphaValue(ABC):
    label: str

    @property
    @abstractmethod
    def is_exact(self) -> bool:
        pass

    @abstractmethod
    def floor_of(self, form: LinearForm, beta: "BetaValue" = ZERO) -> int:
        pass

    @abstractmethod
    def sign_of(self, form: LinearForm, beta: "BetaValue" = ZERO) -> int:
        pass

    @abstractmethod
    def magnitude(self, form: LinearForm, beta: "BetaValue" = ZERO) -> float:
        """|form| to at least 60 correct bits."""

    @abstractmethod
    def fraction_bits(self, form: LinearForm, bits: int, beta: "BetaValue" = ZERO) -> int:
        """floor({form} * 2**bits), the fractional part as a bits-bit integer."""

    @abstractmethod
    def partial_quotients(self, k: int) -> List[int]:
        pass

    def approx(self) -> float:
        return self.magnitude(LinearForm(alpha=Fraction(1)))

    def __str__(self) -> str:
        return self.label


@dataclass(frozen=True)
class QuadraticAlpha(AlphaValue):
    """The quadratic irrational (p + q * sqrt(d)) / r."""

    p: int
    q: int
    r: int
    d: int
    label: str = ""

    def __post_init__(self) -> None:
        if self.d <= 0 or isqrt(self.d) ** 2 == self.d:
            raise UsageError(f"alpha must be irrational, sqrt({self.d}) is rational")
        if self.q == 0:
            raise UsageError("alpha must be irrational, q is zero")
        if self.r <= 0 or gcd(gcd(self.p, self.q), self.r) != 1:
            raise UsageError(f"({self.p}, {self.q}, {self.r}) is not normalised")
        if _sign_surd(self.p - self.r, self.q, self.d) <= 0:
            raise UsageError(f"alpha must exceed 1, got {self.describe()}")
        if not self.label:
            object.__setattr__(self, "label", self.describe())

    @classmethod
    def create(cls, p: int, q: int, r: int, d: int, label: str = "") -> "QuadraticAlpha":
        if r == 0:
            raise UsageError("Denominator r must be non-zero")
        if r < 0:
            p, q, r = -p, -q, -r
        g = gcd(gcd(p, q), r)
        return cls(p // g, q // g, r // g, d, label)

    def describe(self) -> str:
        if (self.p, self.q, self.r) == (0, 1, 1):
            return f"sqrt:{self.d}"
        return f"quad:{self.p},{self.q},{self.r},{self.d}"

    @property
    def is_exact(self) -> bool:
        return True

    def _surd(self, form: LinearForm, beta: "BetaValue") -> Tuple[int, int, int]:
        if not isinstance(beta, (int, Fraction)):
            raise UsageError("An exact alpha needs a rational beta")
        form = form.fold_beta(Fraction(beta))
        norm = self.p**2 - self.q**2 * self.d
        rational = (
            form.const
            + form.alpha * Fraction(self.p, self.r)
            + form.inverse * Fraction(self.r * self.p, norm)
        )
        irrational = form.alpha * Fraction(self.q, self.r) - form.inverse * Fraction(
            self.r * self.q, norm
        )
        w = lcm(rational.denominator, irrational.denominator)
        u = rational.numerator * (w // rational.denominator)
        v = irrational.numerator * (w // irrational.denominator)
        return u, v, w

    def floor_of(self, form: LinearForm, beta: "BetaValue" = ZERO) -> int:
        u, v, w = self._surd(form, beta)
        return _floor_surd(u, v, w, self.d)

    def sign_of(self, form: LinearForm, beta: "BetaValue" = ZERO) -> int:
        u, v, _ = self._surd(form, beta)
        return _sign_surd(u, v, self.d)

    def magnitude(self, form: LinearForm, beta: "BetaValue" = ZERO) -> float:
        u, v, w = self._surd(form, beta)
        if u == 0 and v == 0:
            return 0.0
        bits = 64
        while True:
            scaled = _floor_surd(u << bits, v << bits, w, self.d)
            if abs(scaled) >= 1 << 64:
                return abs(float(Fraction(2 * scaled + 1, 1 << (bits + 1))))
            bits *= 2

    def fraction_bits(self, form: LinearForm, bits: int, beta: "BetaValue" = ZERO) -> int:
        u, v, w = self._surd(form, beta)
        return _floor_surd(u << bits, v << bits, w, self.d) % (1 << bits)

    def partial_quotients(self, k: int) -> List[int]:
        # Periodic expansion of (P + sqrt(D)) / Q with Q dividing D - P^2.
        sign = 1 if self.q > 0 else -1
        P, D, Q = sign * self.p, self.q * self.q * self.d, sign * self.r
        if (D - P * P) % Q:
            P, D, Q = P * abs(Q), D * Q * Q, Q * abs(Q)
        quotients = []
        for _ in range(k + 1):
            if Q > 0:
                a = _floor_surd(P, 1, Q, D)
            else:
                a = _floor_surd(-P, -1, -Q, D)
            quotients.append(a)
            P = a * Q - P
            Q = (D - P * P) // Q
        return quotients


def _mpf(value: Fraction) -> mpf:
    value = Fraction(value)
    return mp.mpf(value.numerator) / value.denominator


ADAPTIVE_CONSTANTS = {"e": "e", "pi": "pi"}


class AdaptiveReal:
    """A real number that mpmath can evaluate to any working precision."""

    def __init__(
        self,
        label: str,
        source: Union[str, QuadraticAlpha],
        settings: Optional[Settings] = None,
    ) -> None:
        settings = settings or get_settings()
        if isinstance(source, str) and source not in ADAPTIVE_CONSTANTS:
            raise UsageError(f"Unknown adaptive constant {source!r}")
        self.label = label
        self.source = source
        self.start_bits = int(settings.precision_start_bits)
        self.cap_bits = int(settings.precision_cap_bits)

    def mp_value(self) -> mpf:
        """The value at the current mpmath working precision."""
        if isinstance(self.source, QuadraticAlpha):
            q = self.source
            return (q.p + q.q * mp.sqrt(q.d)) / q.r
        return +getattr(mp, ADAPTIVE_CONSTANTS[self.source])

    def approx(self) -> float:
        with mp.workprec(64):
            return float(self.mp_value())

    def __str__(self) -> str:
        return self.label

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}({self.label!r})"


BetaValue = Union[Fraction, AdaptiveReal]


class AdaptiveAlpha(AdaptiveReal, AlphaValue):
    """A non-quadratic alpha decided by escalating mpmath precision."""

    def __init__(
        self,
        label: str,
        source: Union[str, QuadraticAlpha],
        settings: Optional[Settings] = None,
    ) -> None:
        super().__init__(label, source, settings)
        with mp.workprec(64):
            if self.mp_value() <= 1:
                raise UsageError(f"alpha must exceed 1, got {label}")

    @classmethod
    def from_quadratic(
        cls, alpha: QuadraticAlpha, settings: Optional[Settings] = None
    ) -> "AdaptiveAlpha":
        return cls(f"approx:{alpha.label}", alpha, settings)

    @property
    def is_exact(self) -> bool:
        return False

    def _terms(self, form: LinearForm, beta: BetaValue) -> List[mpf]:
        a = self.mp_value()
        if isinstance(beta, AdaptiveReal):
            b = beta.mp_value()
            return [
                _mpf(form.const),
                _mpf(form.alpha) * a,
                _mpf(form.inverse) / a,
                _mpf(form.beta) * b,
                _mpf(form.beta_inverse) * b / a,
            ]
        form = form.fold_beta(Fraction(beta))
        return [_mpf(form.const), _mpf(form.alpha) * a, _mpf(form.inverse) / a]

    def _rational_value(self, form: LinearForm, beta: BetaValue) -> Optional[Fraction]:
        if isinstance(beta, AdaptiveReal):
            if any((form.alpha, form.inverse, form.beta, form.beta_inverse)):
                return None
            return Fraction(form.const)
        folded = form.fold_beta(Fraction(beta))
        if folded.alpha or folded.inverse:
            return None
        return folded.const

    def _decide(
        self,
        form: LinearForm,
        beta: BetaValue,
        decide: Callable[[mpf, mpf], Optional[DecisionType]],
        min_bits: int = 0,
    ) -> DecisionType:
        bits = max(self.start_bits, min_bits)
        while bits <= self.cap_bits:
            with mp.workprec(bits):
                terms = self._terms(form, beta)
                value = mp.fsum(terms)
                slack = (mp.fsum(abs(t) for t in terms) + 1) * mp.ldexp(1, 8 - bits)
                answer = decide(value, slack)
            if answer is not None:
                return answer
            logger.debug("Escalating precision", alpha=self.label, bits=bits * 2)
            bits *= 2
        raise PrecisionError(
            f"Undecided at {self.cap_bits} bits for alpha={self.label}, form={tuple(form)}"
        )

    def floor_of(self, form: LinearForm, beta: BetaValue = ZERO) -> int:
        exact = self._rational_value(form, beta)
        if exact is not None:
            return exact.numerator // exact.denominator

        def decide(value: mpf, slack: mpf) -> Optional[int]:
            lo, hi = mp.floor(value - slack), mp.floor(value + slack)
            return int(lo) if lo == hi else None

        return self._decide(form, beta, decide)

    def sign_of(self, form: LinearForm, beta: BetaValue = ZERO) -> int:
        exact = self._rational_value(form, beta)
        if exact is not None:
            return (exact > 0) - (exact < 0)

        def decide(value: mpf, slack: mpf) -> Optional[int]:
            if value - slack > 0:
                return 1
            if value + slack < 0:
                return -1
            return None

        return self._decide(form, beta, decide)

    def magnitude(self, form: LinearForm, beta: BetaValue = ZERO) -> float:
        exact = self._rational_value(form, beta)
        if exact is not None:
            return abs(float(exact))

        def decide(value: mpf, slack: mpf) -> Optional[float]:
            if abs(value) > slack * mp.ldexp(1, 60):
                return float(abs(value))
            return None

        return self._decide(form, beta, decide)

    def fraction_bits(self, form: LinearForm, bits: int, beta: BetaValue = ZERO) -> int:
        def decide(value: mpf, slack: mpf) -> Optional[int]:
            lo = mp.floor(mp.ldexp(value - slack, bits))
            hi = mp.floor(mp.ldexp(value + slack, bits))
            return int(lo) % (1 << bits) if lo == hi else None

        return self._decide(form, beta, decide, min_bits=2 * bits)

    def approx(self) -> float:
        return AdaptiveReal.approx(self)

    def _quotients_at(self, k: int, bits: int) -> Optional[List[int]]:
        x = self.mp_value()
        err = abs(x) * mp.ldexp(1, 8 - bits)
        quotients = []
        for i in range(k + 1):
            a = mp.floor(x - err)
            if a != mp.floor(x + err):
                return None
            quotients.append(int(a))
            if i == k:
                break
            frac = x - a
            if frac - err <= 0:
                return None
            x = 1 / frac
            err = err / ((frac - err) * frac) + abs(x) * mp.ldexp(1, 8 - bits)
        return quotients

    def partial_quotients(self, k: int) -> List[int]:
        bits = self.start_bits
        while bits <= self.cap_bits:
            with mp.workprec(bits):
                quotients = self._quotients_at(k, bits)
            if quotients is not None:
                return quotients
            bits *= 2
        raise PrecisionError(
            f"Continued fraction of {self.label} undecided at {self.cap_bits} bits"
        )


@dataclass(frozen=True)
class BeattyParams:
    alpha: AlphaValue
    beta: BetaValue = ZERO

    def __post_init__(self) -> None:
        if isinstance(self.beta, int):
            object.__setattr__(self, "beta", Fraction(self.beta))
        if self.alpha.is_exact and not isinstance(self.beta, Fraction):
            raise UsageError("An exact alpha needs a rational beta")

    @classmethod
    def __get_validators__(cls) -> "CallableGenerator":
        yield cls.validate

    @classmethod
    def validate(cls, value: Any) -> "BeattyParams":
        if not isinstance(value, cls):
            raise TypeError("BeattyParams required")
        return value

    @property
    def beta_label(self) -> str:
        return str(self.beta)

    def beta_approx(self) -> float:
        if isinstance(self.beta, AdaptiveReal):
            return self.beta.approx()
        return float(self.beta)


def floor_div_alpha(t: Fraction, alpha: AlphaValue) -> int:
    return alpha.floor_of(LinearForm(inverse=Fraction(t)))


def nth_term(r: int, params: BeattyParams) -> int:
    if r < 1:
        raise UsageError(f"Term index must be at least 1, got {r}")
    form = LinearForm(alpha=Fraction(r), beta=Fraction(1))
    return params.alpha.floor_of(form, params.beta)


def _index_floor(t: int, params: BeattyParams) -> int:
    """floor((t - beta) / alpha)."""
    form = LinearForm(inverse=Fraction(t), beta_inverse=Fraction(-1))
    return params.alpha.floor_of(form, params.beta)


def contains(n: int, params: BeattyParams) -> bool:
    if n < 1:
        raise UsageError(f"Membership is defined for n >= 1, got {n}")
    upper = _index_floor(n + 1, params)
    if upper < 1:
        return False
    return upper - _index_floor(n, params) == 1


def in_fractional_window(n: int, params: BeattyParams) -> bool:
    """n > alpha + beta - 1 and 0 < {(n + 1 - beta) / alpha} <= 1 / alpha."""
    if n < 1:
        raise UsageError(f"Membership is defined for n >= 1, got {n}")
    alpha, beta = params.alpha, params.beta
    above = alpha.sign_of(
        LinearForm(const=Fraction(n + 1), alpha=Fraction(-1), beta=Fraction(-1)), beta
    )
    if above <= 0:
        return False
    k = _index_floor(n + 1, params)
    frac_upper = LinearForm(const=Fraction(-k), inverse=Fraction(n + 1), beta_inverse=Fraction(-1))
    frac_lower = LinearForm(const=Fraction(-k), inverse=Fraction(n), beta_inverse=Fraction(-1))
    return alpha.sign_of(frac_upper, beta) > 0 and alpha.sign_of(frac_lower, beta) <= 0


def enumerate_up_to(x: int, params: BeattyParams) -> Iterator[int]:
    if x < 0:
        raise UsageError(f"x must be non-negative, got {x}")
    if x < 1:
        return
    for r in range(1, _index_floor(x + 1, params) + 1):
        term = nth_term(r, params)
        if term >= 1:
            yield term


def terms_between(lo: int, hi: int, params: BeattyParams) -> np.ndarray:
    """All members of the sequence in [lo, hi], ascending, as int64."""
    lo = max(lo, 1)
    if hi < lo:
        return np.zeros(0, dtype=np.int64)
    r_lo = max(1, _index_floor(lo, params) + 1)
    r_hi = _index_floor(hi + 1, params)
    if r_hi < r_lo:
        return np.zeros(0, dtype=np.int64)

    alpha_f, beta_f = params.alpha.approx(), params.beta_approx()
    r = np.arange(r_lo, r_hi + 1, dtype=np.int64)
    values = r.astype(np.float64) * alpha_f + beta_f
    terms = np.floor(values).astype(np.int64)
    frac = values - terms
    margin = 4 * FLOAT_EPS * (r_hi * alpha_f + abs(beta_f) + 1)
    for i in np.flatnonzero((frac < margin) | (frac > 1 - margin)).tolist():
        terms[i] = nth_term(int(r[i]), params)
    return terms


def contains_many(ns: np.ndarray, params: BeattyParams) -> np.ndarray:
    """Vectorised ``contains``; undecided float cases fall back to exact."""
    ns = np.asarray(ns, dtype=np.int64)
    if ns.size and ns.min() < 1:
        raise UsageError("Membership is defined for n >= 1")
    alpha_f, beta_f = params.alpha.approx(), params.beta_approx()
    upper = (ns + 1 - beta_f) / alpha_f
    lower = (ns - beta_f) / alpha_f
    k_upper, k_lower = np.floor(upper), np.floor(lower)
    margin = 8 * FLOAT_EPS * ((ns + abs(beta_f) + 1) / alpha_f + 1)
    undecided = (
        (upper - k_upper < margin)
        | (upper - k_upper > 1 - margin)
        | (lower - k_lower < margin)
        | (lower - k_lower > 1 - margin)
    )
    member = (k_upper - k_lower == 1) & (k_upper >= 1)
    for i in np.flatnonzero(undecided).tolist():
        member[i] = contains(int(ns[i]), params)
    return member


class ContinuedFraction(NamedTuple):
    quotients: Tuple[int, ...]
    convergents: Tuple[Tuple[int, int], ...]

    @classmethod
    def from_quotients(cls, quotients: List[int]) -> "ContinuedFraction":
        convergents = []
        p_prev, p = 0, 1
        q_prev, q = 1, 0
        for a in quotients:
            p_prev, p = p, a * p + p_prev
            q_prev, q = q, a * q + q_prev
            convergents.append((p, q))
        return cls(tuple(quotients), tuple(convergents))


def continued_fraction(alpha: AlphaValue, k: int) -> ContinuedFraction:
    if k < 0:
        raise UsageError(f"Number of partial quotients must be non-negative, got {k}")
    return ContinuedFraction.from_quotients(alpha.partial_quotients(k))


def nearest_int_distance(alpha: AlphaValue, n: int, beta: BetaValue = ZERO) -> float:
    """||alpha * n + beta||, the distance to the nearest integer."""
    if n < 1:
        raise UsageError(f"n must be at least 1, got {n}")
    form = LinearForm(alpha=Fraction(n), beta=Fraction(1))
    k = alpha.floor_of(form, beta)
    below = alpha.magnitude(form.shifted(k), beta)
    above = alpha.magnitude(form.shifted(k + 1), beta)
    return min(below, above)


class TypeEstimate(NamedTuple):
    tau_hat: float
    pointwise_max: float
    evidence: Tuple[Tuple[int, float], ...]


def estimate_type(alpha: AlphaValue, q_max: int) -> TypeEstimate:
    """Estimate the type of alpha from its convergent denominators.

    The estimate is the least-squares slope of log(1 / ||alpha q||) against
    log q over the convergent denominators 2 <= q <= q_max, never below 1.
    """
    k = 8
    while True:
        cf = continued_fraction(alpha, k)
        if cf.convergents[-1][1] > q_max:
            break
        k *= 2
    denominators = sorted({q for _, q in cf.convergents if 2 <= q <= q_max})
    if len(denominators) < 2:
        raise InsufficientDataError(
            f"Only {len(denominators)} convergent denominators in [2, {q_max}]"
        )

    evidence = tuple((q, nearest_int_distance(alpha, q)) for q in denominators)
    xs = np.array([log(q) for q, _ in evidence])
    ys = np.array([-log(distance) for _, distance in evidence])
    slope = float(np.polyfit(xs, ys, 1)[0])
    estimate = TypeEstimate(max(1.0, slope), float(np.max(ys / xs)), evidence)
    logger.info("Type estimated", alpha=alpha.label, tau_hat=estimate.tau_hat)
    return estimate


def parse_alpha(spec: str, settings: Optional[Settings] = None) -> AlphaValue:
    """Parse ``sqrt:D``, ``quad:p,q,r,d``, ``e``, ``pi`` or ``approx:<spec>``."""
    spec = spec.strip()
    if spec in ADAPTIVE_CONSTANTS:
        return AdaptiveAlpha(spec, spec, settings)
    kind, _, rest = spec.partition(":")
    if kind == "approx":
        inner = parse_alpha(rest, settings)
        if not isinstance(inner, QuadraticAlpha):
            raise UsageError(f"approx: needs a quadratic alpha, got {rest!r}")
        return AdaptiveAlpha.from_quadratic(inner, settings)
    try:
        if kind == "sqrt":
            return QuadraticAlpha.create(0, 1, 1, int(rest), label=spec)
        if kind == "quad":
            p, q, r, d = (int(part) for part in rest.split(","))
            return QuadraticAlpha.create(p, q, r, d, label=spec)
    except ValueError as exc:
        raise UsageError(f"Malformed alpha {spec!r}: {exc}") from exc
    raise UsageError(f"Unknown alpha {spec!r}; use sqrt:D, quad:p,q,r,d, e, pi or approx:<spec>")


def parse_beta(
    spec: str, settings: Optional[Settings] = None, adaptive: bool = False
) -> BetaValue:
    """Parse a rational beta, or ``e`` / ``pi`` when alpha is adaptive."""
    spec = spec.strip()
    if spec in ADAPTIVE_CONSTANTS:
        if not adaptive:
            raise UsageError(f"beta {spec!r} needs an adaptive alpha such as e, pi or approx:")
        return AdaptiveReal(spec, spec, settings)
    try:
        return Fraction(RationalValue.validate(spec))
    except (TypeError, ValueError) as exc:
        raise UsageError(f"Malformed beta {spec!r}: {exc}") from exc


def parse_params(
    alpha_spec: str, beta_spec: str, settings: Optional[Settings] = None
) -> BeattyParams:
    alpha = parse_alpha(alpha_spec, settings)
    return BeattyParams(alpha, parse_beta(beta_spec, settings, adaptive=not alpha.is_exact))
