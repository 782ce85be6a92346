"""Exact-number parsing and rendering.

Everything inside the library is a :class:`fractions.Fraction` or an ``int``.
Decimal literals are refused on input so that a scenario can never smuggle a
rounded value into an exact computation.
"""
from __future__ import annotations

import re
from decimal import Context, Decimal
from fractions import Fraction

_FRACTION_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+))?\s*$")


class ExactnessError(ValueError):
    """A value could not be read as an exact rational."""


def parse_fraction(value) -> Fraction:
    """Read ``value`` as an exact rational.

    Accepts ints, Fractions and strings of the form ``"p"`` or ``"p/q"``.
    Floats and decimal strings are rejected.
    """
    if isinstance(value, bool):
        raise ExactnessError(f"boolean {value!r} is not a number")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        raise ExactnessError(f"decimal literal {value!r} rejected; write it as a fraction 'p/q'")
    if isinstance(value, str):
        m = _FRACTION_RE.match(value)
        if not m:
            raise ExactnessError(f"{value!r} is not an exact fraction 'p/q'")
        num, den = m.group(1), m.group(2)
        if den is not None and int(den) == 0:
            raise ExactnessError(f"{value!r} has a zero denominator")
        return Fraction(int(num), int(den) if den else 1)
    raise ExactnessError(f"cannot read {value!r} as a fraction")


def fmt_fraction(value) -> str:
    """``"p/q"`` (or ``"p"`` for integers)."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


_DEC12 = Context(prec=12)


def fmt_decimal(value, digits: int = 12) -> str:
    """Decimal rendering to ``digits`` significant digits (display only)."""
    value = Fraction(value)
    ctx = _DEC12 if digits == 12 else Context(prec=digits)
    d = ctx.divide(Decimal(value.numerator), Decimal(value.denominator))
    text = format(d, "f") if abs(d.adjusted()) < digits else format(d, "e")
    if "." in text and "e" not in text:
        text = text.rstrip("0").rstrip(".")
    return text or "0"
