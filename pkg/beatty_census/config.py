# SPDX-FileCopyrightText: Magenta ApS
#
# SPDX-License-Identifier: MPL-2.0

from typing import Any, Dict, List

from pydantic import BaseSettings, PositiveInt, confloat, root_validator, validator

from beatty_census.pydantic_types import ScientificInt


class Settings(BaseSettings):
    threads: PositiveInt = PositiveInt(1)
    segment_size: ScientificInt = ScientificInt(10**6)
    checkpoints: List[ScientificInt] = [
        ScientificInt(10**5),
        ScientificInt(10**6),
        ScientificInt(10**7),
        ScientificInt(10**8),
    ]

    # Resource caps
    spf_limit_cap: ScientificInt = ScientificInt(5 * 10**7)
    # Residue products in the segment classifier are int64; p * p must fit.
    census_x_cap: ScientificInt = ScientificInt(3 * 10**9)
    rough_y_cap: ScientificInt = ScientificInt(10**7)

    precision_start_bits: PositiveInt = PositiveInt(64)
    precision_cap_bits: PositiveInt = PositiveInt(4096)

    epsilon: confloat(gt=0, lt=1) = 0.05  # type: ignore
    exact_rational_limit: ScientificInt = ScientificInt(10**4)

    log_level: str = "WARNING"

    class Config:
        env_prefix = "BEATTY_CENSUS_"

    @validator("segment_size")
    def segment_size_floor(cls, value: int) -> int:
        if value < 10**4:
            raise ValueError("segment_size must be at least 1e4")
        return value

    @validator("checkpoints")
    def checkpoints_ascending(cls, value: List[int]) -> List[int]:
        if any(x < 0 for x in value):
            raise ValueError("checkpoints must be non-negative")
        if list(value) != sorted(value):
            raise ValueError("checkpoints must be sorted ascending")
        return value

    @validator("log_level")
    def known_log_level(cls, value: str) -> str:
        value = value.upper()
        if value not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"Unknown log level {value}")
        return value

    @root_validator
    def ensure_precision_schedule(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        start = values.get("precision_start_bits")
        cap = values.get("precision_cap_bits")
        if start is not None and cap is not None and start > cap:
            raise ValueError("precision_start_bits exceeds precision_cap_bits")
        return values


def get_settings(**overrides) -> Settings:
    return Settings(**overrides)
