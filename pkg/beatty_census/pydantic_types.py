# SPDX-FileCopyrightText: Magenta ApS
#
# SPDX-License-Identifier: MPL-2.0

from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import TYPE_CHECKING, Any, Optional, no_type_check

from pydantic.validators import str_validator

if TYPE_CHECKING:  # pragma: no cover
    from pydantic.typing import CallableGenerator


def parse_scientific_int(text: str) -> int:
    """Parse an integer literal that may use scientific notation.

    Example:

        parse_scientific_int("1e8")  # --> 100000000
        parse_scientific_int("2.5e3")  # --> 2500

    Args:
        text: Literal such as ``"1e8"``, ``"100_000"`` or ``"42"``.

    Raises:
        ValueError: If the literal is malformed or not integral.

    Returns:
        The exact integer value.
    """
    cleaned = text.strip().replace("_", "")
    try:
        value = Decimal(cleaned)
    except InvalidOperation as exc:
        raise ValueError(f"Not a number: {text!r}") from exc
    if not value.is_finite() or value != value.to_integral_value():
        raise ValueError(f"Not an integer: {text!r}")
    return int(value)


class ScientificInt(int):
    @no_type_check
    def __new__(cls, value: Optional[int]) -> object:
        return int.__new__(cls, value)

    def __init__(self, value: int, *args, **kwargs) -> None:
        int.__init__(value)

    @classmethod
    def __get_validators__(cls) -> "CallableGenerator":
        yield cls.validate

    @classmethod
    def validate(cls, value: Any) -> "ScientificInt":
        if isinstance(value, bool):
            raise TypeError("Integer required")
        if isinstance(value, int):
            return cls(value)
        if isinstance(value, float):
            if not value.is_integer():
                raise ValueError("Integral value required")
            return cls(int(value))
        if isinstance(value, str):
            return cls(parse_scientific_int(str_validator(value)))
        raise TypeError("Integer or scientific notation literal required")


class RationalValue(Fraction):
    """An exact rational parsed from ``num/den`` or a decimal literal."""

    @classmethod
    def __get_validators__(cls) -> "CallableGenerator":
        yield cls.validate

    @classmethod
    def validate(cls, value: Any) -> "RationalValue":
        if isinstance(value, bool):
            raise TypeError("Rational required")
        if isinstance(value, (int, Fraction)):
            return cls(value)
        if isinstance(value, float):
            # Go through the shortest repr so 0.1 means 1/10.
            return cls(repr(value))
        if isinstance(value, str):
            try:
                return cls(str_validator(value).strip())
            except (ValueError, ZeroDivisionError) as exc:
                raise ValueError(f"Not a rational literal: {value!r}") from exc
        raise TypeError("Rational literal required")

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}('{self}')"
