"""Precision-controlled scalar arithmetic used by every other module.

Scalars live in one of two modes:

* ``float``    -- MPFR binary floats at a configurable precision (default
  128 bits).  Every operation result is reproducible given the precision
  and the inputs.
* ``rational`` -- exact big rationals (``gmpy2.mpq``).  Arithmetic is
  closed and comparisons are decidable; no rounding ever happens.

Rather than wrapping numbers in a bespoke class, values are plain
``gmpy2.mpfr`` / ``gmpy2.mpq`` objects and the mode/precision travels in a
:class:`ScalarContext`.  Numeric work must run inside ``with ctx.active():``
so MPFR rounds at the context precision.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from fractions import Fraction

import gmpy2
from gmpy2 import mpfr, mpq, mpz

from .errors import PrecisionInsufficient

DEFAULT_PRECISION = 128
MAX_PRECISION = 4096

_SQRT_RE = re.compile(r"^sqrt\(\s*([0-9]+(?:/[0-9]+)?)\s*\)$")
_LIOUVILLE_RE = re.compile(r"^liouville(?:\(\s*([0-9]+)\s*\))?$")


@dataclass(frozen=True)
class ScalarContext:
    """Mode flag plus working precision for scalar arithmetic."""

    mode: str = "float"
    precision_bits: int = DEFAULT_PRECISION

    def __post_init__(self):
        if self.mode not in ("float", "rational"):
            raise ValueError(f"unknown scalar mode {self.mode!r}")
        if not (2 <= self.precision_bits <= MAX_PRECISION):
            raise ValueError(f"precision_bits out of range: {self.precision_bits}")

    def active(self):
        """gmpy2 context manager rounding at this precision."""
        return gmpy2.context(precision=self.precision_bits)

    def escalate(self):
        """Context with doubled precision, for retry after PrecisionInsufficient."""
        if self.precision_bits * 2 > MAX_PRECISION:
            raise PrecisionInsufficient(
                f"precision cap {MAX_PRECISION} reached (at {self.precision_bits} bits)"
            )
        return replace(self, precision_bits=self.precision_bits * 2)

    @property
    def rel_tolerance(self):
        """2^(-P/2), the relative tolerance contract for derived quantities."""
        return math.ldexp(1.0, -(self.precision_bits // 2))

    def decimal_digits(self):
        """Digits needed for round-trip-exact decimal serialization."""
        return math.ceil(self.precision_bits * math.log10(2)) + 2


def is_rational(x) -> bool:
    return isinstance(x, (int, mpz, mpq, Fraction))


def to_scalar(value, ctx: ScalarContext):
    """Coerce ``value`` into the context's representation."""
    if ctx.mode == "rational":
        if isinstance(value, mpq):
            return value
        if isinstance(value, (int, mpz)):
            return mpq(value)
        if isinstance(value, Fraction):
            return mpq(value.numerator, value.denominator)
        if isinstance(value, str):
            return _parse_rational(value)
        if isinstance(value, float):
            f = Fraction(value)  # exact binary expansion
            return mpq(f.numerator, f.denominator)
        if isinstance(value, mpfr):
            num, exp = value.as_mantissa_exp()
            return mpq(int(num), 1) * mpq(2) ** int(exp)
        raise TypeError(f"cannot represent {type(value).__name__} exactly in rational mode")
    with ctx.active():
        if isinstance(value, mpfr):
            return mpfr(value)
        if isinstance(value, (int, mpz)):
            return mpfr(value)
        if isinstance(value, mpq):
            return mpfr(value)
        if isinstance(value, Fraction):
            return mpfr(mpq(value.numerator, value.denominator))
        if isinstance(value, float):
            return mpfr(value)
        if isinstance(value, str):
            return parse_value(value, ctx)
        raise TypeError(f"cannot convert {type(value).__name__} to scalar")


def _parse_rational(text: str):
    text = text.strip()
    if "/" in text:
        num, den = text.split("/")
        return mpq(int(num), int(den))
    if re.match(r"^-?[0-9]+$", text):
        return mpq(int(text))
    # decimal literal: exact as a rational
    m = re.match(r"^(-?)([0-9]*)\.([0-9]+)$", text)
    if m:
        sign = -1 if m.group(1) else 1
        whole = int(m.group(2) or 0)
        frac = m.group(3)
        return sign * (mpq(whole) + mpq(int(frac), 10 ** len(frac)))
    raise ValueError(f"not a rational literal: {text!r}")


def parse_value(text: str, ctx: ScalarContext):
    """Parse a scalar literal: decimal, rational a/b, sqrt(r), phi, e, pi, liouville."""
    text = text.strip().lower()
    if ctx.mode == "rational":
        return _parse_rational(text)
    with ctx.active():
        if text == "phi":
            return (1 + gmpy2.sqrt(mpfr(5))) / 2
        if text == "e":
            return gmpy2.exp(mpfr(1))
        if text == "pi":
            return gmpy2.const_pi()
        m = _SQRT_RE.match(text)
        if m:
            return gmpy2.sqrt(mpfr(_parse_rational(m.group(1))))
        m = _LIOUVILLE_RE.match(text)
        if m:
            return liouville_value(int(m.group(1) or 10), ctx)
        try:
            return mpfr(_parse_rational(text))
        except ValueError:
            pass
        try:
            return mpfr(text)
        except ValueError:
            raise ValueError(f"cannot parse scalar literal {text!r}") from None


def liouville_value(base: int, ctx: ScalarContext):
    """sum_j base^(-j!) to the context precision (terms below ulp dropped)."""
    with ctx.active():
        total = mpfr(0)
        j = 1
        while True:
            e = math.factorial(j)
            if e * math.log2(base) > ctx.precision_bits + 8:
                break
            total += mpfr(base) ** (-e)
            j += 1
        return total


def scalar_str(x, ctx: ScalarContext) -> str:
    """Decimal string, exact for rationals and round-trip-exact for floats."""
    if isinstance(x, mpq):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, (int, mpz)):
        return str(int(x))
    return f"{x:.{ctx.decimal_digits()}g}"


def scalar_from_str(text: str, ctx: ScalarContext):
    """Inverse of :func:`scalar_str` under the same context."""
    if ctx.mode == "rational" or "/" in text:
        return _parse_rational(text)
    with ctx.active():
        return mpfr(text)


def nearest_int(x) -> int:
    """Nearest integer, ties to even (decidable for rationals)."""
    if isinstance(x, (int, mpz)):
        return int(x)
    if isinstance(x, mpq):
        fl = x.numerator // x.denominator
        rem2 = 2 * (x.numerator - fl * x.denominator)
        if rem2 < x.denominator:
            return int(fl)
        if rem2 > x.denominator:
            return int(fl) + 1
        return int(fl) if fl % 2 == 0 else int(fl) + 1
    return int(gmpy2.rint(x))


def frac_dist(x):
    """Distance from x to the nearest integer, same type as x."""
    n = nearest_int(x)
    return abs(x - n)


def as_float(x) -> float:
    return float(x)


def mantissa_exponent(x):
    """(M, S) with x = M / 2**S exactly; requires an mpfr input."""
    m, e = x.as_mantissa_exp()
    return int(m), -int(e)
