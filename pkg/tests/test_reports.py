# SPDX-FileCopyrightText: Magenta ApS
#
# SPDX-License-Identifier: MPL-2.0

import json
from io import StringIO
from pathlib import Path
from tempfile import TemporaryDirectory
from unittest import TestCase

from beatty_census.errors import UsageError
from beatty_census.models import AnalyticRow, CensusRow, ExpSumRow, OutputFormat
from beatty_census.reports import CheckpointWriter, read_checkpoint, write_csv, write_rows

HEADER = "x,c,a,n,c_star,a_star,n_star,alpha,beta,wall_s\n"


def census_row(x, **counts):
    values = {"c": 0, "a": 0, "n": 0, "c_star": 0, "a_star": 0, "n_star": 0, **counts}
    return CensusRow(x=x, **values, alpha="sqrt:2", beta="1/2", wall_s=0.5)


class WriterTests(TestCase):
    def test_csv(self):
        stream = StringIO()
        row = AnalyticRow(X=10, observed=0.25, predicted=0.5, ratio=0.5)
        write_csv([row], AnalyticRow, stream)
        self.assertEqual(stream.getvalue(), "X,observed,predicted,ratio\n10,0.25,0.5,0.5\n")

    def test_csv_header_without_rows(self):
        stream = StringIO()
        write_csv([], ExpSumRow, stream)
        self.assertEqual(stream.getvalue(), "j_or_d,N,observed,reference,flag\n")

    def test_json(self):
        stream = StringIO()
        write_rows([census_row(20, c=10, a=12, n=14)], CensusRow, stream, OutputFormat.JSON)
        (record,) = json.loads(stream.getvalue())
        self.assertEqual(record["x"], 20)
        self.assertEqual(record["beta"], "1/2")


class CheckpointTests(TestCase):
    def test_round_trip(self):
        with TemporaryDirectory() as directory:
            path = Path(directory) / "checkpoint.csv"
            writer = CheckpointWriter(path)
            writer(census_row(10, c=5, a=6, n=7))
            writer(census_row(20, c=10, a=12, n=14, c_star=7, a_star=9, n_star=11))
            self.assertTrue(path.read_text().startswith(HEADER))
            rows = read_checkpoint(path)
            self.assertEqual([row.x for row in rows], [10, 20])
            self.assertEqual(rows[1].c_star, 7)
            # Reopening in append mode keeps the rows and the single header.
            CheckpointWriter(path, append=True)(census_row(30, c=12, a=14, n=16))
            self.assertEqual(path.read_text().count("wall_s"), 1)
            self.assertEqual(len(read_checkpoint(path)), 3)

    def test_fresh_writer_replaces_file(self):
        with TemporaryDirectory() as directory:
            path = Path(directory) / "checkpoint.csv"
            first = CheckpointWriter(path)
            first(census_row(10, c=5, a=6, n=7))
            first(census_row(20, c=10, a=12, n=14))
            again = CheckpointWriter(path)
            again(census_row(10, c=5, a=6, n=7))
            self.assertEqual([row.x for row in read_checkpoint(path)], [10])

    def test_fresh_writer_starts_with_given_rows(self):
        with TemporaryDirectory() as directory:
            path = Path(directory) / "checkpoint.csv"
            writer = CheckpointWriter(path, rows=[census_row(10, c=5, a=6, n=7)])
            writer(census_row(20, c=10, a=12, n=14))
            self.assertEqual([row.x for row in read_checkpoint(path)], [10, 20])

    def test_rejects_foreign_file(self):
        with TemporaryDirectory() as directory:
            path = Path(directory) / "other.csv"
            path.write_text("X,observed\n10,0.5\n")
            with self.assertRaises(UsageError):
                read_checkpoint(path)

    def test_rejects_descending_rows(self):
        with TemporaryDirectory() as directory:
            path = Path(directory) / "checkpoint.csv"
            writer = CheckpointWriter(path)
            writer(census_row(20))
            writer(census_row(10))
            with self.assertRaises(UsageError):
                read_checkpoint(path)

    def test_rejects_broken_chain(self):
        with TemporaryDirectory() as directory:
            path = Path(directory) / "checkpoint.csv"
            path.write_text(HEADER + "10,7,6,5,0,0,0,sqrt:2,0,0.1\n")
            with self.assertRaises(UsageError):
                read_checkpoint(path)
