from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dlab.exact import (
    ceil_root,
    decimal_string,
    exact_power,
    floor_root,
    nearest_int_distance_interval,
    parse_rational,
    power_ceil,
    power_enclosure,
    power_floor,
)


def test_parse_rational_forms():
    assert parse_rational("3/8") == Fraction(3, 8)
    assert parse_rational(" -7 ") == -7
    assert parse_rational("0.375") == Fraction(3, 8)
    assert parse_rational(2) == 2


@given(st.integers(0, 10**40), st.integers(1, 7))
def test_roots_bracket(x, k):
    r = floor_root(x, k)
    assert r**k <= x < (r + 1) ** k
    c = ceil_root(x, k)
    assert (c - 1) ** k < x <= c**k or (x == 0 and c == 0)


def test_exact_power_detects_rational_powers():
    assert exact_power(8, Fraction(2, 3)) == 4
    assert exact_power(Fraction(1, 27), Fraction(-1, 3)) == 3
    assert exact_power(2, Fraction(1, 2)) is None


@settings(max_examples=200)
@given(st.integers(2, 10**12), st.fractions(min_value=Fraction(-5), max_value=Fraction(5), max_denominator=12))
def test_power_enclosure_contains_mpmath_value(base, e):
    lo, hi = power_enclosure(base, e, 64)
    with mpmath.workprec(300):
        v = mpmath.mpf(base) ** (mpmath.mpf(e.numerator) / e.denominator)
        slack = v * mpmath.mpf(2) ** -250  # the oracle's own rounding of e
        assert mpmath.mpf(lo.numerator) / lo.denominator <= v + slack
        assert v - slack <= mpmath.mpf(hi.numerator) / hi.denominator
    if lo != hi:
        assert (hi - lo) / lo <= Fraction(2) ** -63


@given(st.integers(1, 10**6), st.integers(2, 10**9), st.fractions(min_value=Fraction(1, 3), max_value=Fraction(4), max_denominator=9))
def test_power_floor_ceil(c, q, e):
    f = power_floor(c, q, e)
    g = power_ceil(c, q, e)
    assert g - f in (0, 1)
    # f <= c q^(a/b) <= g  <=>  f^b <= c^b q^a <= g^b, in integers
    a, b = e.numerator, e.denominator
    target = c**b * q**a
    assert f**b <= target <= g**b
    assert (f + 1) ** b > target


def test_distance_interval_pins_extremes():
    assert nearest_int_distance_interval(Fraction(9, 10), Fraction(11, 10)) == (0, Fraction(1, 10))
    assert nearest_int_distance_interval(Fraction(2, 5), Fraction(3, 5)) == (Fraction(2, 5), Fraction(1, 2))


def test_decimal_string_truncates_downward():
    assert decimal_string(Fraction(1, 3), 5) == "0.33333"
    assert decimal_string(Fraction(-1, 3), 2) == "-0.34"
