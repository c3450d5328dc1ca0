# SPDX-FileCopyrightText: Magenta ApS
#
# SPDX-License-Identifier: MPL-2.0

import os
from unittest import TestCase
from unittest.mock import patch

from pydantic import ValidationError

from beatty_census.config import get_settings


class SettingsTests(TestCase):
    def test_defaults(self):
        settings = get_settings()
        self.assertEqual(settings.threads, 1)
        self.assertEqual(settings.segment_size, 10**6)
        self.assertEqual(settings.checkpoints, [10**5, 10**6, 10**7, 10**8])
        self.assertEqual(settings.precision_start_bits, 64)
        self.assertEqual(settings.precision_cap_bits, 4096)
        self.assertEqual(settings.epsilon, 0.05)
        self.assertEqual(settings.log_level, "WARNING")

    def test_overrides(self):
        settings = get_settings(segment_size="1e4", log_level="debug")
        self.assertEqual(settings.segment_size, 10**4)
        self.assertEqual(settings.log_level, "DEBUG")

    def test_environment(self):
        with patch.dict(os.environ, {"BEATTY_CENSUS_THREADS": "4"}):
            self.assertEqual(get_settings().threads, 4)

    def test_small_segment_rejected(self):
        with self.assertRaises(ValidationError):
            get_settings(segment_size=999)

    def test_unsorted_checkpoints_rejected(self):
        with self.assertRaises(ValidationError):
            get_settings(checkpoints=[10**6, 10**5])

    def test_precision_schedule(self):
        with self.assertRaises(ValidationError):
            get_settings(precision_start_bits=128, precision_cap_bits=64)

    def test_unknown_log_level(self):
        with self.assertRaises(ValidationError):
            get_settings(log_level="chatty")
