# SPDX-FileCopyrightText: Magenta ApS
#
# SPDX-License-Identifier: MPL-2.0

import os
from math import gcd
from unittest import TestCase

import numpy as np

from beatty_census.arith import (
    Factorization,
    NumberClass,
    base_primes,
    build_spf_table,
    classify,
    classify_naive_oracle,
    classify_segment,
    euler_phi,
    factorize,
    factorize_any,
    group_totient,
    is_abelian,
    is_cyclic,
    is_nilpotent,
    make_factorization,
    max_distinct_primes,
    segment_factors,
)
from beatty_census.config import get_settings
from beatty_census.errors import InvariantError, ResourceError, UsageError

SLOW = bool(os.environ.get("BEATTY_CENSUS_SLOW"))
ORACLE_LIMIT = 10**6 if SLOW else 2 * 10**4

CYCLIC_UP_TO_20 = [1, 2, 3, 5, 7, 11, 13, 15, 17, 19]
ABELIAN_UP_TO_20 = sorted(CYCLIC_UP_TO_20 + [4, 9])
NILPOTENT_UP_TO_20 = sorted(ABELIAN_UP_TO_20 + [8, 16])


def factorization(n):
    return factorize_any(n)


class FactorizationTests(TestCase):
    def test_spf_table(self):
        table = build_spf_table(100)
        self.assertEqual(table.smallest_prime_factor(2), 2)
        self.assertEqual(table.smallest_prime_factor(91), 7)
        self.assertEqual(table.smallest_prime_factor(97), 97)
        self.assertEqual(table.smallest_prime_factor(100), 2)

    def test_spf_table_limits(self):
        with self.assertRaises(UsageError):
            build_spf_table(1)
        with self.assertRaises(ResourceError):
            build_spf_table(10**6, get_settings(spf_limit_cap=10**5))

    def test_factorize(self):
        table = build_spf_table(1000)
        self.assertEqual(factorize(1, table), Factorization(1, ()))
        self.assertEqual(factorize(360, table), Factorization(360, ((2, 3), (3, 2), (5, 1))))
        self.assertEqual(factorize(997, table).factors, ((997, 1),))
        with self.assertRaises(UsageError):
            factorize(1001, table)
        with self.assertRaises(UsageError):
            factorize(0, table)

    def test_factorize_any_beyond_table(self):
        table = build_spf_table(100)
        n = 2**61 - 1
        self.assertEqual(factorize_any(n, table).factors, ((n, 1),))
        self.assertEqual(factorize_any(10**12 + 2).n, 10**12 + 2)
        with self.assertRaises(UsageError):
            factorize_any(2**63)

    def test_sieve_and_table_agree(self):
        table = build_spf_table(5000)
        for n in range(1, 5001):
            self.assertEqual(factorize(n, table), factorize_any(n))

    def test_make_factorization_checks(self):
        self.assertEqual(make_factorization(12, [(2, 2), (3, 1)]).n, 12)
        with self.assertRaises(InvariantError):
            make_factorization(12, [(2, 1), (3, 1)])
        with self.assertRaises(InvariantError):
            make_factorization(12, [(3, 1), (2, 2)])

    def test_base_primes(self):
        self.assertEqual(base_primes(30).tolist(), [2, 3, 5, 7, 11, 13, 17, 19, 23, 29])
        self.assertEqual(base_primes(1).size, 0)


class PredicateTests(TestCase):
    def test_totients(self):
        self.assertEqual(euler_phi(factorization(1)), 1)
        self.assertEqual(euler_phi(factorization(36)), 12)
        self.assertEqual(group_totient(factorization(8)), 21)
        self.assertEqual(group_totient(factorization(16)), 315)
        self.assertEqual(group_totient(factorization(12)), 6)

    def test_small_classes(self):
        for n in range(1, 21):
            f = factorization(n)
            with self.subTest(n=n):
                self.assertEqual(is_cyclic(f), n in CYCLIC_UP_TO_20)
                self.assertEqual(is_abelian(f), n in ABELIAN_UP_TO_20)
                self.assertEqual(is_nilpotent(f), n in NILPOTENT_UP_TO_20)

    def test_known_classes(self):
        expected = {
            1: NumberClass.CYCLIC,
            15: NumberClass.CYCLIC,
            4: NumberClass.ABELIAN_NOT_CYCLIC,
            45: NumberClass.ABELIAN_NOT_CYCLIC,
            8: NumberClass.NILPOTENT_NOT_ABELIAN,
            6: NumberClass.NOT_NILPOTENT,
            # 3 divides 2^2 - 1 but not 2 - 1.
            12: NumberClass.NOT_NILPOTENT,
            24: NumberClass.NOT_NILPOTENT,
            # 7 divides 2^3 - 1.
            56: NumberClass.NOT_NILPOTENT,
        }
        for n, number_class in expected.items():
            with self.subTest(n=n):
                self.assertEqual(classify(factorization(n)), number_class)

    def test_class_chain(self):
        for number_class in NumberClass:
            if number_class.is_cyclic:
                self.assertTrue(number_class.is_abelian)
            if number_class.is_abelian:
                self.assertTrue(number_class.is_nilpotent)
        with self.assertRaises(InvariantError):
            NumberClass.from_flags(True, False, True)
        with self.assertRaises(InvariantError):
            NumberClass.from_flags(False, True, False)

    def test_structural_matches_oracle(self):
        table = build_spf_table(ORACLE_LIMIT)
        for n in range(1, ORACLE_LIMIT + 1):
            self.assertEqual(classify(factorize(n, table)), classify_naive_oracle(n), n)

    def test_oracle_rejects_zero(self):
        with self.assertRaises(UsageError):
            classify_naive_oracle(0)


class SegmentTests(TestCase):
    def test_max_distinct_primes(self):
        self.assertEqual(max_distinct_primes(1), 1)
        self.assertEqual(max_distinct_primes(29), 2)
        self.assertEqual(max_distinct_primes(30), 3)
        self.assertEqual(max_distinct_primes(10**8), 8)

    def test_segment_factors(self):
        table = segment_factors(20, 30, base_primes(10))
        index = 30 - 20
        self.assertEqual(int(table.omega[index]), 3)
        self.assertEqual(table.primes[:3, index].tolist(), [2, 3, 5])
        self.assertEqual(table.exponents[:3, index].tolist(), [1, 1, 1])
        # 29 is left over after striking the base primes.
        self.assertEqual(table.primes[0, 29 - 20], 29)

    def test_segment_rejects_bad_range(self):
        with self.assertRaises(UsageError):
            segment_factors(0, 10, base_primes(3))
        with self.assertRaises(UsageError):
            segment_factors(10, 5, base_primes(3))

    def test_segment_matches_pointwise(self):
        lo, hi = 123_456, 133_456
        primes = base_primes(400)
        cyclic, abelian, nilpotent = classify_segment(segment_factors(lo, hi, primes))
        for offset, n in enumerate(range(lo, hi + 1)):
            number_class = classify_naive_oracle(n)
            self.assertEqual(bool(cyclic[offset]), number_class.is_cyclic, n)
            self.assertEqual(bool(abelian[offset]), number_class.is_abelian, n)
            self.assertEqual(bool(nilpotent[offset]), number_class.is_nilpotent, n)

    def test_segment_counts_up_to_20(self):
        cyclic, abelian, nilpotent = classify_segment(segment_factors(1, 20, base_primes(4)))
        self.assertEqual(np.flatnonzero(cyclic).tolist(), [n - 1 for n in CYCLIC_UP_TO_20])
        self.assertEqual(int(np.count_nonzero(abelian)), 12)
        self.assertEqual(int(np.count_nonzero(nilpotent)), 14)


class SpecExampleTests(TestCase):
    def test_small_spf_tables(self):
        table = build_spf_table(10)
        self.assertEqual(
            [table.smallest_prime_factor(i) for i in range(2, 11)], [2, 3, 2, 5, 2, 7, 2, 3, 2]
        )
        self.assertEqual(build_spf_table(2).smallest_prime_factor(2), 2)
        table = build_spf_table(30)
        self.assertEqual(table.smallest_prime_factor(25), 5)
        self.assertEqual(table.smallest_prime_factor(29), 29)

    def test_spf_table_invariants(self):
        table = build_spf_table(10**4)
        primes = set(base_primes(10**4).tolist())
        for i in range(2, 10**4 + 1):
            p = table.smallest_prime_factor(i)
            self.assertEqual(i % p, 0)
            self.assertIn(p, primes)
            self.assertEqual(p == i, i in primes)

    def test_totient_values(self):
        self.assertEqual(euler_phi(factorization(15)), 8)
        self.assertEqual(euler_phi(factorization(12)), 4)
        self.assertEqual(group_totient(factorization(4)), 3)
        self.assertEqual(group_totient(factorization(6)), 2)
        self.assertEqual(group_totient(factorization(1)), 1)

    def test_group_totient_is_multiplicative(self):
        rng = np.random.default_rng(7)
        checked = 0
        while checked < 200:
            m, n = (int(v) for v in rng.integers(1, 5000, size=2))
            if gcd(m, n) != 1:
                continue
            self.assertEqual(
                group_totient(factorization(m * n)),
                group_totient(factorization(m)) * group_totient(factorization(n)),
            )
            checked += 1

    def test_oracle_examples(self):
        self.assertEqual(classify_naive_oracle(1), NumberClass.CYCLIC)
        self.assertEqual(classify_naive_oracle(16), NumberClass.NILPOTENT_NOT_ABELIAN)
        self.assertEqual(classify_naive_oracle(20), NumberClass.NOT_NILPOTENT)

    def test_primes_and_prime_powers(self):
        for p in base_primes(200).tolist():
            self.assertTrue(is_cyclic(factorization(p)))
            for a in range(1, 6):
                self.assertTrue(is_nilpotent(factorization(p**a)))
