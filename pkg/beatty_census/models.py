# SPDX-FileCopyrightText: Magenta ApS
#
# SPDX-License-Identifier: MPL-2.0

from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, PositiveInt, root_validator, validator

from beatty_census.pydantic_types import ScientificInt


class CensusRow(BaseModel):
    """Exact class counts up to x, overall and inside the Beatty sequence."""

    class Config:
        schema_extra = {
            "example": {
                "x": 20,
                "c": 10,
                "a": 12,
                "n": 14,
                "c_star": 7,
                "a_star": 9,
                "n_star": 11,
                "alpha": "sqrt:2",
                "beta": "0",
                "wall_s": 0.01,
            }
        }

    x: int
    c: int
    a: int
    n: int
    c_star: int
    a_star: int
    n_star: int
    alpha: str
    beta: str
    wall_s: float

    @root_validator(skip_on_failure=True)
    def ensure_count_chain(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        if not 0 <= values["c"] <= values["a"] <= values["n"] <= max(values["x"], 0):
            raise ValueError("Counts must satisfy c <= a <= n <= x")
        if not 0 <= values["c_star"] <= values["a_star"] <= values["n_star"]:
            raise ValueError("Starred counts must satisfy c* <= a* <= n*")
        for name in ("c", "a", "n"):
            if values[f"{name}_star"] > values[name]:
                raise ValueError(f"{name}_star exceeds {name}")
        return values


class RatioRow(BaseModel):
    x: int
    c_ratio: Optional[float]
    a_ratio: Optional[float]
    n_ratio: Optional[float]
    inverse_alpha: float
    c_deviation: Optional[float]
    a_deviation: Optional[float]
    n_deviation: Optional[float]
    # Rows with a zero unstarred count carry no ratios.
    excluded: bool = False


class ComparisonRow(BaseModel):
    x: int
    series: str
    order: int
    count: int
    prediction: float
    ratio: float
    # The class's printed expansion is shorter than the requested order.
    truncated: bool = False


class AnalyticRow(BaseModel):
    """One line of a ``X,observed,predicted,ratio`` diagnostic table."""

    X: int
    observed: float
    predicted: float
    ratio: float


class ExpSumRow(BaseModel):
    """One line of a ``j_or_d,N,observed,reference,flag`` diagnostic table."""

    j_or_d: int
    N: int
    observed: float
    reference: float
    flag: str = ""


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


class RunConfig(BaseModel):
    """Validated arguments of a census invocation."""

    subcommand: str = "census"
    alpha_spec: str = "sqrt:2"
    beta_spec: str = "0"
    x_max: ScientificInt
    checkpoints: List[ScientificInt] = []
    order: int = 0
    output_format: OutputFormat = OutputFormat.CSV
    output_path: Optional[str] = None
    worker_count: PositiveInt = PositiveInt(1)
    segment_size: ScientificInt = ScientificInt(10**6)
    resume_path: Optional[str] = None

    @validator("x_max")
    def x_max_non_negative(cls, value: int) -> int:
        if value < 0:
            raise ValueError("x_max must be non-negative")
        return value

    @validator("segment_size")
    def segment_size_floor(cls, value: int) -> int:
        if value < 10**4:
            raise ValueError("segment_size must be at least 1e4")
        return value

    @root_validator(skip_on_failure=True)
    def ensure_checkpoints(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        checkpoints = sorted(set(values["checkpoints"]))
        if checkpoints and checkpoints[-1] > values["x_max"]:
            raise ValueError("Checkpoints must not exceed x_max")
        if any(x < 0 for x in checkpoints):
            raise ValueError("Checkpoints must be non-negative")
        if not checkpoints or checkpoints[-1] != values["x_max"]:
            checkpoints.append(values["x_max"])
        values["checkpoints"] = checkpoints
        return values
