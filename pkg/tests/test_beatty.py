# SPDX-FileCopyrightText: Magenta ApS
#
# SPDX-License-Identifier: MPL-2.0

import os
from fractions import Fraction
from itertools import product
from math import floor, sqrt
from unittest import TestCase

import numpy as np
from mpmath import mp

from beatty_census.beatty import (
    AdaptiveAlpha,
    AdaptiveReal,
    BeattyParams,
    LinearForm,
    QuadraticAlpha,
    contains,
    contains_many,
    continued_fraction,
    enumerate_up_to,
    estimate_type,
    floor_div_alpha,
    in_fractional_window,
    nearest_int_distance,
    nth_term,
    parse_alpha,
    parse_beta,
    parse_params,
    terms_between,
)
from beatty_census.config import get_settings
from beatty_census.errors import InsufficientDataError, PrecisionError, UsageError

SLOW = bool(os.environ.get("BEATTY_CENSUS_SLOW"))
EXHAUSTIVE_LIMIT = 10**5 if SLOW else 2 * 10**3
AGREEMENT_SAMPLES = 10**4

SQRT2 = parse_alpha("sqrt:2")
SQRT3 = parse_alpha("sqrt:3")
GOLDEN = parse_alpha("quad:1,1,2,5")
ONE_PLUS_SQRT3 = parse_alpha("quad:1,1,1,3")
BETAS = [Fraction(0), Fraction(1, 2), Fraction(-1, 3)]

SQRT2_UP_TO_20 = [1, 2, 4, 5, 7, 8, 9, 11, 12, 14, 15, 16, 18, 19]
WYTHOFF_UP_TO_12 = [1, 3, 4, 6, 8, 9, 11, 12]


def params(alpha, beta=0):
    return BeattyParams(alpha, Fraction(beta))


def exact_members(p, x):
    """Members <= x from nth_term, which decides every floor exactly."""
    members = set()
    r = 1
    term = nth_term(r, p)
    while term <= x:
        members.add(term)
        r += 1
        term = nth_term(r, p)
    return {m for m in members if m >= 1}


class AlphaTests(TestCase):
    def test_parse_alpha(self):
        self.assertIsInstance(SQRT2, QuadraticAlpha)
        self.assertEqual(SQRT2.label, "sqrt:2")
        self.assertAlmostEqual(SQRT2.approx(), sqrt(2))
        self.assertAlmostEqual(GOLDEN.approx(), (1 + sqrt(5)) / 2)
        self.assertIsInstance(parse_alpha("e"), AdaptiveAlpha)
        self.assertIsInstance(parse_alpha("approx:sqrt:2"), AdaptiveAlpha)
        self.assertEqual(parse_alpha("approx:sqrt:2").label, "approx:sqrt:2")

    def test_parse_alpha_rejects(self):
        for spec in ("sqrt:4", "sqrt:x", "quad:1,1,1", "tau", "quad:-3,1,1,2", "approx:e"):
            with self.subTest(spec=spec):
                with self.assertRaises(UsageError):
                    parse_alpha(spec)

    def test_quadratic_normalises(self):
        alpha = QuadraticAlpha.create(2, 2, 4, 5)
        self.assertEqual((alpha.p, alpha.q, alpha.r), (1, 1, 2))
        self.assertEqual(alpha.describe(), "quad:1,1,2,5")
        self.assertEqual(QuadraticAlpha.create(0, -1, -1, 2).describe(), "sqrt:2")

    def test_parse_beta(self):
        self.assertEqual(parse_beta("1/2"), Fraction(1, 2))
        self.assertEqual(parse_beta("-0.25"), Fraction(-1, 4))
        with self.assertRaises(UsageError):
            parse_beta("half")

    def test_exact_alpha_needs_rational_beta(self):
        with self.assertRaises(UsageError):
            BeattyParams(SQRT2, parse_alpha("pi"))

    def test_floor_and_sign(self):
        self.assertEqual(floor_div_alpha(Fraction(10), SQRT2), 7)
        self.assertEqual(floor_div_alpha(Fraction(3), GOLDEN), 1)
        self.assertEqual(SQRT2.sign_of(LinearForm(const=Fraction(-140, 99), alpha=Fraction(1))), 1)
        self.assertEqual(SQRT2.sign_of(LinearForm(const=Fraction(-141, 100), alpha=Fraction(1))), 1)
        self.assertEqual(SQRT2.sign_of(LinearForm(const=Fraction(-99, 70), alpha=Fraction(1))), -1)

    def test_adaptive_agrees_with_exact(self):
        adaptive = AdaptiveAlpha.from_quadratic(SQRT2)
        for r in range(1, 200):
            form = LinearForm(alpha=Fraction(r), const=Fraction(1, 3))
            self.assertEqual(adaptive.floor_of(form), SQRT2.floor_of(form))
            self.assertEqual(adaptive.sign_of(form.shifted(r)), SQRT2.sign_of(form.shifted(r)))

    def test_adaptive_rational_shortcut(self):
        adaptive = parse_alpha("pi")
        self.assertEqual(adaptive.floor_of(LinearForm(const=Fraction(7, 2))), 3)
        self.assertEqual(adaptive.sign_of(LinearForm()), 0)

    def test_precision_cap(self):
        settings = get_settings(precision_start_bits=8, precision_cap_bits=16)
        pi = parse_alpha("pi", settings)
        # 355/113 agrees with pi to about 22 bits.
        close = LinearForm(const=Fraction(-355, 113), alpha=Fraction(1))
        with self.assertRaises(PrecisionError):
            pi.sign_of(close)
        self.assertEqual(parse_alpha("pi").sign_of(close), -1)


class SequenceTests(TestCase):
    def test_nth_term(self):
        self.assertEqual(nth_term(5, params(SQRT2)), 7)
        self.assertEqual(nth_term(2, params(SQRT2, Fraction(1, 2))), 3)
        with self.assertRaises(UsageError):
            nth_term(0, params(SQRT2))

    def test_enumerate_up_to(self):
        self.assertEqual(list(enumerate_up_to(20, params(SQRT2))), SQRT2_UP_TO_20)
        self.assertEqual(list(enumerate_up_to(12, params(GOLDEN))), WYTHOFF_UP_TO_12)
        self.assertEqual(list(enumerate_up_to(0, params(SQRT2))), [])
        with self.assertRaises(UsageError):
            list(enumerate_up_to(-1, params(SQRT2)))

    def test_contains(self):
        sqrt2 = params(SQRT2)
        self.assertEqual([n for n in range(1, 21) if contains(n, sqrt2)], SQRT2_UP_TO_20)
        with self.assertRaises(UsageError):
            contains(0, sqrt2)

    def test_complementary_sequences(self):
        # floor(r * sqrt 2) and floor(r * (2 + sqrt 2)) partition the positive integers.
        first = params(SQRT2)
        second = params(parse_alpha("quad:2,1,1,2"))
        for n in range(1, 1000):
            self.assertNotEqual(contains(n, first), contains(n, second), n)

    def test_exhaustive_membership(self):
        for alpha, beta in product([SQRT2, SQRT3, GOLDEN, ONE_PLUS_SQRT3], BETAS):
            p = params(alpha, beta)
            expected = exact_members(p, EXHAUSTIVE_LIMIT)
            listed = list(enumerate_up_to(EXHAUSTIVE_LIMIT, p))
            with self.subTest(alpha=alpha.label, beta=beta):
                self.assertEqual(listed, sorted(expected))
                self.assertEqual(terms_between(1, EXHAUSTIVE_LIMIT, p).tolist(), listed)
                ns = np.arange(1, EXHAUSTIVE_LIMIT + 1)
                flags = contains_many(ns, p)
                self.assertEqual(np.flatnonzero(flags).tolist(), [n - 1 for n in listed])
                for n in range(1, EXHAUSTIVE_LIMIT + 1):
                    self.assertEqual(contains(n, p), n in expected, n)
                    self.assertEqual(in_fractional_window(n, p), n in expected, n)

    def test_terms_between(self):
        p = params(SQRT2)
        self.assertEqual(terms_between(10, 20, p).tolist(), [11, 12, 14, 15, 16, 18, 19])
        self.assertEqual(terms_between(20, 10, p).tolist(), [])
        self.assertEqual(terms_between(-5, 3, p).tolist(), [1, 2])

    def test_adaptive_sequence(self):
        exact = params(SQRT2, Fraction(1, 2))
        adaptive = params(AdaptiveAlpha.from_quadratic(SQRT2), Fraction(1, 2))
        self.assertEqual(list(enumerate_up_to(3000, adaptive)), list(enumerate_up_to(3000, exact)))
        e = params(parse_alpha("e"))
        self.assertEqual(list(enumerate_up_to(20, e)), [2, 5, 8, 10, 13, 16, 19])

    def test_adaptive_constant_beta(self):
        p = parse_params("e", "pi")
        self.assertIsInstance(p.beta, AdaptiveReal)
        self.assertEqual(p.beta_label, "pi")
        with mp.workdps(60):
            for r in (1, 2, 3, 10, 977, 10**6 + 3):
                self.assertEqual(nth_term(r, p), int(mp.floor(mp.e * r + mp.pi)), r)
        terms = [nth_term(r, p) for r in range(1, 40)]
        listed = list(enumerate_up_to(100, p))
        self.assertEqual(listed, [t for t in terms if t <= 100])
        for n in range(1, 101):
            self.assertEqual(contains(n, p), n in listed, n)
            self.assertEqual(in_fractional_window(n, p), n in listed, n)
        self.assertEqual(terms_between(1, 100, p).tolist(), listed)
        approx = parse_params("approx:sqrt:2", "e")
        self.assertEqual(nth_term(7, approx), floor(7 * sqrt(2) + 2.718281828459045))

    def test_adaptive_beta_needs_adaptive_alpha(self):
        with self.assertRaises(UsageError):
            parse_params("sqrt:2", "pi")
        with self.assertRaises(UsageError):
            parse_beta("pi")


class DiophantineTests(TestCase):
    def test_continued_fractions(self):
        self.assertEqual(continued_fraction(SQRT2, 4).quotients, (1, 2, 2, 2, 2))
        self.assertEqual(continued_fraction(GOLDEN, 4).quotients, (1, 1, 1, 1, 1))
        self.assertEqual(continued_fraction(ONE_PLUS_SQRT3, 4).quotients, (2, 1, 2, 1, 2))
        self.assertEqual(
            continued_fraction(SQRT2, 4).convergents,
            ((1, 1), (3, 2), (7, 5), (17, 12), (41, 29)),
        )
        with self.assertRaises(UsageError):
            continued_fraction(SQRT2, -1)

    def test_adaptive_continued_fractions(self):
        e = continued_fraction(parse_alpha("e"), 7)
        self.assertEqual(e.quotients, (2, 1, 2, 1, 1, 4, 1, 1))
        self.assertEqual(continued_fraction(parse_alpha("pi"), 4).quotients, (3, 7, 15, 1, 292))
        self.assertEqual(
            continued_fraction(parse_alpha("approx:sqrt:3"), 5).quotients,
            continued_fraction(SQRT3, 5).quotients,
        )

    def test_nearest_int_distance(self):
        self.assertAlmostEqual(nearest_int_distance(SQRT2, 1), sqrt(2) - 1, places=15)
        self.assertAlmostEqual(nearest_int_distance(SQRT2, 5), 5 * sqrt(2) - 7, places=14)
        self.assertAlmostEqual(
            nearest_int_distance(SQRT2, 1, Fraction(1, 2)), 2 - sqrt(2) - 0.5, places=15
        )
        # 1393 / 985 is a convergent, so the distance is tiny but still exact.
        self.assertLess(nearest_int_distance(SQRT2, 985), 1e-3)
        self.assertGreater(nearest_int_distance(SQRT2, 985), 0)
        self.assertAlmostEqual(nearest_int_distance(SQRT2, 697), 986 - 697 * sqrt(2), places=9)
        with self.assertRaises(UsageError):
            nearest_int_distance(SQRT2, 0)

    def test_estimate_type(self):
        estimate = estimate_type(SQRT2, 10**6)
        self.assertGreaterEqual(estimate.tau_hat, 1.0)
        self.assertLess(estimate.tau_hat, 1.1)
        self.assertEqual([q for q, _ in estimate.evidence][:4], [2, 5, 12, 29])
        self.assertLess(estimate_type(parse_alpha("e"), 10**6).tau_hat, 1.5)

    def test_estimate_type_needs_data(self):
        with self.assertRaises(InsufficientDataError):
            estimate_type(SQRT2, 3)

    def test_parse_params(self):
        p = parse_params("sqrt:2", "1/2")
        self.assertEqual(p.beta_label, "1/2")
        self.assertEqual(p.alpha.label, "sqrt:2")


class PropertyTests(TestCase):
    def test_floor_div_zero(self):
        self.assertEqual(floor_div_alpha(Fraction(0), SQRT2), 0)

    def test_nth_term_increasing(self):
        for alpha, beta in product([SQRT2, GOLDEN], BETAS):
            terms = [nth_term(r, params(alpha, beta)) for r in range(1, 500)]
            self.assertTrue(all(a < b for a, b in zip(terms, terms[1:])))

    def test_cardinality_near_x_over_alpha(self):
        for alpha, beta in product([SQRT2, SQRT3, GOLDEN], BETAS):
            p = params(alpha, beta)
            for x in (10, 100, 1000, 12345):
                count = len(list(enumerate_up_to(x, p)))
                self.assertLessEqual(abs(count - x / alpha.approx()), 2)

    def test_exact_and_adaptive_agree_on_random_inputs(self):
        rng = np.random.default_rng(11)
        for alpha in (SQRT2, GOLDEN):
            exact = params(alpha, Fraction(1, 3))
            adaptive = params(AdaptiveAlpha.from_quadratic(alpha), Fraction(1, 3))
            for value in rng.integers(1, 10**9, size=AGREEMENT_SAMPLES).tolist():
                self.assertEqual(nth_term(value, adaptive), nth_term(value, exact))
                self.assertEqual(contains(value, adaptive), contains(value, exact))

    def test_badly_approximable_types(self):
        for alpha in (SQRT2, GOLDEN):
            estimate = estimate_type(alpha, 10**6)
            self.assertGreaterEqual(estimate.tau_hat, 1.0)
            self.assertLessEqual(estimate.tau_hat, 1.01)
