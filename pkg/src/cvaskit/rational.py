"""Exact rational scalars and the "p/q" text grammar used across the package.

Every numeric quantity in this package is an exact rational; floating point
never enters any decision procedure.
"""

from __future__ import annotations

from fractions import Fraction

try:
    from gmpy2 import mpq as Rational
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    Rational = Fraction

ZERO = Rational(0)
ONE = Rational(1)


class RationalSyntaxError(ValueError):
    """Malformed rational literal, with the offending text attached."""

    def __init__(self, text: str, reason: str):
        super().__init__(f"malformed rational {text!r}: {reason}")
        self.text = text
        self.reason = reason


def rat(value, den=None) -> Rational:
    """Build a Rational from ints, strings, Fractions, or another Rational."""
    if den is not None:
        return Rational(value, den)
    if isinstance(value, str):
        return parse_rational(value)
    return Rational(value)


def parse_rational(text: str) -> Rational:
    """Parse "p/q" or "n" (optional sign, decimal digits). Rejects q = 0."""
    body = text.strip()
    if not body:
        raise RationalSyntaxError(text, "empty")
    num_part, slash, den_part = body.partition("/")
    if not _is_signed_int(num_part):
        raise RationalSyntaxError(text, "numerator is not an integer")
    if slash:
        if not _is_signed_int(den_part) or den_part.lstrip("+-") == "":
            raise RationalSyntaxError(text, "denominator is not an integer")
        if int(den_part) == 0:
            raise RationalSyntaxError(text, "denominator is zero")
        return Rational(int(num_part), int(den_part))
    return Rational(int(num_part))


def _is_signed_int(body: str) -> bool:
    if body and body[0] in "+-":
        body = body[1:]
    return body.isdigit()


def format_rational(q) -> str:
    """Canonical text form: "p/q" when the denominator is not 1, else "p"."""
    q = Rational(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"
