"""Exact rational helpers: integer roots, rational powers and their enclosures."""

from __future__ import annotations

import math
import os
import re
from fractions import Fraction
from typing import Union

import gmpy2

Number = Union[int, Fraction]

DEFAULT_BITS = 128
_RATIONAL = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+))?\s*$")


def default_precision() -> int:
    """Working precision in bits, overridable through ``DLAB_PRECISION_BITS``."""
    raw = os.environ.get("DLAB_PRECISION_BITS")
    if not raw:
        return DEFAULT_BITS
    bits = int(raw)
    if bits < 16:
        raise ValueError(f"DLAB_PRECISION_BITS too small: {bits}")
    return bits


def parse_rational(text: Union[str, int, float, Fraction]) -> Fraction:
    """Parse ``"p/q"``, an integer, or a decimal literal into an exact Fraction."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, float):
        return Fraction(str(text))
    m = _RATIONAL.match(text)
    if m:
        num, den = m.groups()
        return Fraction(int(num), int(den) if den else 1)
    return Fraction(text.strip())


def floor_root(x: int, k: int) -> int:
    """Largest integer r with r**k <= x (x >= 0)."""
    if x < 0:
        raise ValueError("negative radicand")
    if k == 1:
        return x
    return int(gmpy2.iroot(gmpy2.mpz(x), k)[0])


def ceil_root(x: int, k: int) -> int:
    """Smallest integer r with r**k >= x (x >= 0)."""
    r = floor_root(x, k)
    return r if r**k == x else r + 1


def _floor(x: Fraction) -> int:
    return x.numerator // x.denominator


def _ceil(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def _as_power(base: Number, exponent: Fraction) -> tuple[Fraction, int]:
    """Return (V, b) with base**exponent == V**(1/b) and b > 0."""
    base = Fraction(base)
    a, b = exponent.numerator, exponent.denominator
    return base**a, b


def power_floor(coeff: Number, base: Number, exponent: Fraction) -> int:
    """floor(coeff * base**exponent), exactly."""
    v, b = _as_power(base, exponent)
    v *= Fraction(coeff) ** b
    return floor_root(_floor(v), b)


def power_ceil(coeff: Number, base: Number, exponent: Fraction) -> int:
    """ceil(coeff * base**exponent), exactly."""
    v, b = _as_power(base, exponent)
    v *= Fraction(coeff) ** b
    return ceil_root(_ceil(v), b)


def exact_power(base: Number, exponent: Fraction) -> Fraction | None:
    """base**exponent when it is rational, else None."""
    v, b = _as_power(base, exponent)
    if b == 1:
        return v
    num = floor_root(v.numerator, b)
    den = floor_root(v.denominator, b)
    if num**b == v.numerator and den**b == v.denominator:
        return Fraction(num, den)
    return None


def power_enclosure(base: Number, exponent: Fraction, bits: int = 64) -> tuple[Fraction, Fraction]:
    """Dyadic enclosure [lo, hi] of base**exponent with relative width <= 2**(1-bits).

    Returns lo == hi when the power is rational.
    """
    base = Fraction(base)
    if base <= 0:
        raise ValueError("base must be positive")
    exact = exact_power(base, exponent)
    if exact is not None:
        return exact, exact
    v, b = _as_power(base, exponent)
    # log2 of the result, roughly, from bit lengths
    log2v = (v.numerator.bit_length() - v.denominator.bit_length()) / b
    t = bits + 2 - math.floor(log2v)
    scaled = v * Fraction(2) ** (t * b)
    f = floor_root(_floor(scaled), b)
    scale = Fraction(2) ** t
    return Fraction(f) / scale, Fraction(f + 1) / scale


def round_down(base: Number, exponent: Fraction, bits: int = 64) -> Fraction:
    """Rationalization policy: the exact power when rational, else a dyadic round-down."""
    return power_enclosure(base, exponent, bits)[0]


def log_rational(x: Number) -> float:
    """Natural log of a positive int or Fraction of any size."""
    x = Fraction(x)
    if x <= 0:
        raise ValueError("log of non-positive value")
    return math.log(x.numerator) - math.log(x.denominator)


def nearest_int_distance_interval(lo: Fraction, hi: Fraction) -> tuple[Fraction, Fraction]:
    """Range of ||x|| over x in [lo, hi] (hi - lo < 1/2)."""

    def dist(x: Fraction) -> Fraction:
        f = x - _floor(x)
        return min(f, 1 - f)

    dlo, dhi = dist(lo), dist(hi)
    out_lo, out_hi = min(dlo, dhi), max(dlo, dhi)
    # an integer or half-integer inside the window pins an extreme
    for k in range(_ceil(2 * lo), _floor(2 * hi) + 1):
        if k % 2 == 0:
            out_lo = Fraction(0)
        else:
            out_hi = Fraction(1, 2)
    return out_lo, out_hi


def decimal_string(x: Fraction, digits: int) -> str:
    """Fixed-point decimal rendering of x, truncated toward -inf, with ``digits`` places."""
    scaled = _floor(x * 10**digits)
    sign = "-" if scaled < 0 else ""
    scaled = abs(scaled)
    whole, frac = divmod(scaled, 10**digits)
    if digits == 0:
        return f"{sign}{whole}"
    return f"{sign}{whole}.{frac:0{digits}d}"
