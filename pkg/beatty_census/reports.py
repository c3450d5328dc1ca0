# SPDX-FileCopyrightText: Magenta ApS
#
# SPDX-License-Identifier: MPL-2.0

import csv
import json
from pathlib import Path
from typing import IO, List, Sequence, Type

import structlog
from pydantic import BaseModel, ValidationError

from beatty_census.errors import UsageError
from beatty_census.models import CensusRow, OutputFormat

logger = structlog.stdlib.get_logger()


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(rows: Sequence[BaseModel], model: Type[BaseModel], stream: IO[str]) -> None:
    """Write rows as CSV with a header line, even when there are no rows."""
    fields = list(model.__fields__)
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        writer.writerow([_cell(getattr(row, field)) for field in fields])


def write_json(rows: Sequence[BaseModel], stream: IO[str]) -> None:
    json.dump([json.loads(row.json()) for row in rows], stream, indent=2)
    stream.write("\n")


def write_rows(
    rows: Sequence[BaseModel],
    model: Type[BaseModel],
    stream: IO[str],
    output_format: OutputFormat = OutputFormat.CSV,
) -> None:
    if output_format is OutputFormat.JSON:
        write_json(rows, stream)
    else:
        write_csv(rows, model, stream)


def read_checkpoint(path: Path) -> List[CensusRow]:
    """Census rows from a checkpoint CSV, in file order."""
    with path.open(newline="", encoding="utf-8") as stream:
        reader = csv.DictReader(stream)
        expected = list(CensusRow.__fields__)
        if reader.fieldnames != expected:
            raise UsageError(f"{path} is not a census checkpoint file: header {reader.fieldnames}")
        try:
            rows = [CensusRow.parse_obj(record) for record in reader]
        except ValidationError as exc:
            raise UsageError(f"Malformed checkpoint row in {path}: {exc}") from exc
    xs = [row.x for row in rows]
    if xs != sorted(set(xs)):
        raise UsageError(f"Checkpoint rows in {path} are not strictly ascending in x")
    logger.info("Checkpoint read", path=str(path), rows=len(rows))
    return rows


class CheckpointWriter:
    """Writes each completed census row to a checkpoint CSV.

    A fresh writer replaces any existing file and starts it with ``rows``;
    with ``append`` it continues the file it was resumed from.
    """

    def __init__(
        self, path: Path, rows: Sequence[CensusRow] = (), append: bool = False
    ) -> None:
        self.path = path
        self.fields = list(CensusRow.__fields__)
        if append and path.exists() and path.stat().st_size > 0:
            return
        with path.open("w", newline="", encoding="utf-8") as stream:
            writer = csv.writer(stream, lineterminator="\n")
            writer.writerow(self.fields)
            writer.writerows([_cell(getattr(row, field)) for field in self.fields] for row in rows)
        logger.debug("Checkpoint file started", path=str(path), rows=len(rows))

    def __call__(self, row: CensusRow) -> None:
        with self.path.open("a", newline="", encoding="utf-8") as stream:
            csv.writer(stream, lineterminator="\n").writerow(
                [_cell(getattr(row, field)) for field in self.fields]
            )
        logger.debug("Checkpoint written", path=str(self.path), x=row.x)
