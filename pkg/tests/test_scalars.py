import math
from fractions import Fraction

import gmpy2
import pytest
from gmpy2 import mpfr, mpq

from latflow.errors import PrecisionInsufficient
from latflow.scalars import (
    ScalarContext,
    frac_dist,
    liouville_value,
    nearest_int,
    parse_value,
    scalar_from_str,
    scalar_str,
    to_scalar,
)


def test_context_modes_and_bounds():
    assert ScalarContext().precision_bits == 128
    with pytest.raises(ValueError):
        ScalarContext(mode="decimal")
    with pytest.raises(ValueError):
        ScalarContext(precision_bits=1)


def test_escalation_doubles_and_caps():
    ctx = ScalarContext(precision_bits=2048)
    assert ctx.escalate().precision_bits == 4096
    with pytest.raises(PrecisionInsufficient):
        ctx.escalate().escalate()


@pytest.mark.parametrize("expr", ["phi", "sqrt(2)", "e", "pi", "liouville", "0.625", "7/3"])
def test_float_serialization_round_trip(expr, ctx):
    x = parse_value(expr, ctx)
    s = scalar_str(x, ctx)
    assert scalar_from_str(s, ctx) == x


def test_rational_serialization_exact():
    ctx = ScalarContext(mode="rational")
    x = to_scalar("22/7", ctx)
    assert x == mpq(22, 7)
    assert scalar_str(x, ctx) == "22/7"
    assert scalar_from_str("22/7", ctx) == x


def test_rational_mode_accepts_floats_exactly():
    ctx = ScalarContext(mode="rational")
    x = to_scalar(0.1, ctx)
    assert x == mpq(Fraction(0.1).numerator, Fraction(0.1).denominator)


def test_rational_mode_decimal_literal_is_exact():
    ctx = ScalarContext(mode="rational")
    assert to_scalar("0.1", ctx) == mpq(1, 10)


def test_parse_value_irrationals(ctx):
    with ctx.active():
        assert abs(float(parse_value("phi", ctx)) - (1 + 5**0.5) / 2) < 1e-15
        assert abs(float(parse_value("sqrt(2)", ctx)) - 2**0.5) < 1e-15
    with pytest.raises(ValueError):
        parse_value("sqrt(-1)", ctx)


def test_liouville_value_matches_direct_sum():
    ctx = ScalarContext(precision_bits=256)
    x = liouville_value(10, ctx)
    with ctx.active():
        direct = sum(mpfr(10) ** (-math.factorial(j)) for j in range(1, 6))
        assert abs(x - direct) < mpfr(2) ** (-240)


def test_nearest_int_ties_to_even():
    assert nearest_int(mpq(5, 2)) == 2
    assert nearest_int(mpq(7, 2)) == 4
    assert nearest_int(mpq(-5, 2)) == -2
    assert nearest_int(mpfr("2.5")) == 2


def test_frac_dist():
    assert frac_dist(mpq(1, 3)) == mpq(1, 3)
    assert frac_dist(mpq(7, 3)) == mpq(1, 3)
    assert float(frac_dist(mpfr("2.75"))) == 0.25


def test_precision_governs_results():
    a = ScalarContext(precision_bits=128)
    b = ScalarContext(precision_bits=256)
    xa = parse_value("sqrt(2)", a)
    xb = parse_value("sqrt(2)", b)
    assert xa != xb
    assert abs(float(xa) - float(xb)) < 1e-15
    # doubling precision moves the value by less than 2^(-P/2)
    with b.active():
        assert abs(xa - xb) < mpfr(2) ** (-100)
