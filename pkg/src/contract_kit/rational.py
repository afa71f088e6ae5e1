"""Exact rational helpers built on :class:`fractions.Fraction`.

Floats are rejected on input so that no binary rounding ever leaks into a
value; decimal strings such as ``"0.55"`` parse to ``Fraction(11, 20)``.
"""

from __future__ import annotations

import decimal
from fractions import Fraction
from typing import Iterable, Union

from .errors import InvalidArgument

RationalLike = Union[int, Fraction, str]


def to_rational(x) -> Fraction:
    if isinstance(x, bool):
        raise InvalidArgument("booleans are not rationals")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        raise InvalidArgument(f"refusing float {x!r}; pass 'p/q' or a decimal string")
    if isinstance(x, decimal.Decimal):
        return Fraction(x)
    if isinstance(x, str):
        s = x.strip()
        if not s:
            raise InvalidArgument("empty rational string")
        try:
            return Fraction(s)
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidArgument(f"cannot parse {x!r} as a rational") from exc
    raise InvalidArgument(f"cannot convert {type(x).__name__} to a rational")


def parse_list(text: str) -> list[Fraction]:
    """Parse a comma separated list like ``"1/2, 0.3, 4"``."""
    parts = [p for p in text.split(",")]
    if any(not p.strip() for p in parts):
        raise InvalidArgument(f"malformed list {text!r}")
    return [to_rational(p) for p in parts]


def fmt(q: Fraction) -> str:
    """Canonical string: ``"p/q"`` in lowest terms, or ``"p"`` for integers."""
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def fmt_list(values: Iterable[Fraction]) -> list[str]:
    return [fmt(v) for v in values]


def to_decimal_str(q, digits: int = 20) -> str:
    """Display-only decimal rendering with ``digits`` significant digits."""
    ctx = decimal.Context(prec=digits)
    q = Fraction(q)
    return str(ctx.divide(decimal.Decimal(q.numerator), decimal.Decimal(q.denominator)))
