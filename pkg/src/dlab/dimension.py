"""Dimension formulas, the N-landscape, cover sums and box counting.

Exact inputs (ints and Fractions) give exact outputs; floats are accepted and
produce floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import stats

from .errors import InsufficientDepth, InvalidInputs
from .exact import log_rational
from .target_sets import IntervalSet, LevelGeometry

FIT_POINTS = 3


# -- closed forms -----------------------------------------------------------------


def _check_nbk(N, B, K) -> None:
    if not (B >= 1 and 1 <= N <= B):
        raise InvalidInputs(f"need 1 <= N <= B, got N={N}, B={B}")
    if not K > 1:
        raise InvalidInputs(f"need K > 1, got K={K}")


def S_formula(N, B, K):
    """min(N/K, max(1/K, 1/(1+B-N)))."""
    _check_nbk(N, B, K)
    return min(N / K, max(1 / K, 1 / (1 + B - N)))


def S_piecewise(N, B, K):
    """The same value read off by comparing K with 1+B-N and N(1+B-N)."""
    _check_nbk(N, B, K)
    t = 1 + B - N
    if K < t:
        return 1 / K
    if K <= N * t:
        return 1 / t
    return N / K


def threshold_fact(N, B, K) -> tuple[bool, bool]:
    """(strict, weak) truth of: B >= K implies N/K > 1/(1+B-N); B < K implies
    1/K < 1/(1+B-N).  The strict form degenerates to equality exactly when
    B = K and N is 1 or B."""
    _check_nbk(N, B, K)
    t = 1 + B - N
    if B >= K:
        return N * t > K, N * t >= K
    return K > t, K >= t


def theorem2_lower_bound(u, l, beta):
    """min{u, max{l, (1+u)/(1+beta)}}; the alternative max/min form is checked."""
    if not (0 <= l <= u <= 1):
        raise InvalidInputs(f"need 0 <= l <= u <= 1, got l={l}, u={u}")
    if beta < 1:
        raise InvalidInputs(f"need beta >= 1, got {beta}")
    t = (1 + u) / (1 + beta)
    first = min(u, max(l, t))
    second = max(l, min(u, t))
    if first != second:
        raise AssertionError(f"bound forms disagree: {first} != {second}")
    return first


def landscape(N, u, beta):
    """M(N) = min(u, max(u/N, 1/(1+beta-N)))."""
    return min(u, max(u / N, 1 / (1 + beta - N)))


def landscape_n0(u, beta):
    """Where u/N meets 1/(1+beta-N)."""
    return u * (1 + beta) / (1 + u)


def landscape_min(u, beta, grid: int = 200_001) -> tuple[float, float]:
    """Grid minimum of M over N in [1, beta]; returns (N_star, value)."""
    u, beta = float(u), float(beta)
    if not 0 < u <= 1:
        raise InvalidInputs(f"need 0 < u <= 1, got {u}")
    if beta < 1:
        raise InvalidInputs(f"need beta >= 1, got {beta}")
    if grid < 1000:
        raise InvalidInputs("grid needs at least 1000 points")
    N = np.linspace(1.0, beta, grid)
    with np.errstate(divide="ignore"):
        M = np.minimum(u, np.maximum(u / N, 1.0 / (1.0 + beta - N)))
    k = int(np.argmin(M))
    return float(N[k]), float(M[k])


def log_convexity_check(a: float, b: float, c: float, d: float, delta: float, slack: float = 1e-12) -> tuple[float, float, bool]:
    """log(da+(1-d)c)/log(db+(1-d)d') against min(log a/log b, log c/log d)."""
    if not (1 > a > b > 0 and 1 > c > d > 0):
        raise InvalidInputs("need 1 > a > b > 0 and 1 > c > d > 0")
    if not 0 <= delta <= 1:
        raise InvalidInputs("delta must lie in [0, 1]")
    lhs = math.log(delta * a + (1 - delta) * c) / math.log(delta * b + (1 - delta) * d)
    rhs = min(math.log(a) / math.log(b), math.log(c) / math.log(d))
    return lhs, rhs, lhs >= rhs - slack


# -- cover sums -----------------------------------------------------------------


def _log(x) -> float:
    if isinstance(x, Fraction):
        return log_rational(x)
    if isinstance(x, int):
        return math.log(x)
    return math.log(float(x))


def cover_log_sums(levels: Sequence[tuple[int, Fraction]], s: float) -> list[float]:
    """log(count * length^s) per level."""
    if not 0 < s <= 1:
        raise InvalidInputs("s must lie in (0, 1]")
    return [_log(count) + s * _log(length) for count, length in levels]


def cover_sum(levels: Sequence[tuple[int, Fraction]], s: float) -> list[float]:
    """count * length^s per level (0.0 on underflow; use cover_log_sums to compare)."""
    return [math.exp(v) if v > -745 else 0.0 for v in cover_log_sums(levels, s)]


def strictly_decreasing(values: Sequence[float]) -> bool:
    return all(b < a for a, b in zip(values, values[1:]))


# -- box counting -----------------------------------------------------------------


@dataclass
class BoxCountReport:
    scales: list[Fraction]
    counts: list[int]
    log_counts: list[float]
    slope_fit: tuple[float, float]
    local_slopes: list[float] = field(default_factory=list)

    def rows(self) -> list[tuple[Fraction, int]]:
        return list(zip(self.scales, self.counts))


def _cells_hit(s: IntervalSet, delta: Fraction) -> int:
    """Grid cells [k delta, (k+1) delta) of [0, 1) meeting the set."""
    D = Fraction(delta) * s.den  # cell width in numerator units
    a, b = D.numerator, D.denominator
    last = -1
    count = 0
    for lo, hi in s.arcs:
        k0 = lo * b // a
        k1 = -(-hi * b // a) - 1
        k0 = max(k0, last + 1)
        if k1 >= k0:
            count += k1 - k0 + 1
            last = k1
    return count


def fit_slope(scales: Sequence[Fraction], log_counts: Sequence[float], points: int = FIT_POINTS) -> tuple[tuple[float, float], list[float]]:
    """Least squares slope of log count against -log delta over the ``points``
    smallest scales, plus consecutive local slopes (in decreasing-scale order)."""
    pairs = sorted(zip(scales, log_counts), key=lambda t: t[0], reverse=True)
    xs = [-_log(d) for d, _ in pairs]
    ys = [c for _, c in pairs]
    local = [(y2 - y1) / (x2 - x1) for (x1, y1), (x2, y2) in zip(zip(xs, ys), zip(xs[1:], ys[1:])) if x2 != x1]
    tail_x, tail_y = xs[-points:], ys[-points:]
    if len(tail_x) < 2:
        raise InsufficientDepth("need at least two scales for a slope")
    if len(tail_x) == 2:
        return (local[-1], 0.0), local
    fit = stats.linregress(tail_x, tail_y)
    return (float(fit.slope), float(fit.stderr)), local


def box_count(s: IntervalSet, scales: Sequence[Fraction], points: int = FIT_POINTS) -> BoxCountReport:
    """Exact box counts of a built set."""
    if not scales:
        raise ValueError("no scales")
    # the whole circle is exact at every scale
    shortest = Fraction(0) if s.total_length == 1 else s.shortest_length()
    scales = sorted((Fraction(d) for d in scales), reverse=True)
    for d in scales:
        if d <= 0 or d > 1:
            raise ValueError(f"scale {d} outside (0, 1]")
        if d < shortest:
            raise InsufficientDepth(f"scale {float(d):.3g} below the built resolution {float(shortest):.3g}")
    counts = [_cells_hit(s, d) for d in scales]
    logs = [math.log(c) for c in counts]
    fit, local = fit_slope(scales, logs, points)
    return BoxCountReport(scales, counts, logs, fit, local)


# -- predicted log-geometry -----------------------------------------------------


@dataclass(frozen=True)
class LogGeometry:
    """Nested family described by per-level component length L_j and children
    per parent k_j; C_j = k_1 ... k_j components of length L_j survive."""

    lengths: tuple[Fraction, ...]
    log_children: tuple[float, ...]

    @property
    def depth(self) -> int:
        return len(self.lengths)

    @property
    def log_counts(self) -> list[float]:
        out, acc = [], 0.0
        for k in self.log_children:
            acc += k
            out.append(acc)
        return out

    def cover_levels(self) -> list[tuple[float, Fraction]]:
        """(log C_j, L_j) for every level."""
        return list(zip(self.log_counts, self.lengths))

    @classmethod
    def from_levels(cls, geoms: Sequence[LevelGeometry], exact_log_children: Sequence[float | None] | None = None) -> "LogGeometry":
        """Children per parent: a parent of length L_{j-1} receives about
        count(E_j) * (L_{j-1} - L_j) components of E_j, the E_j components
        being spread evenly over the circle.  ``exact_log_children`` (log of
        the measured mean children count) overrides levels that were built."""
        lengths, kids = [], []
        prev = Fraction(1)
        for j, g in enumerate(geoms):
            L = g.predicted_length
            known = exact_log_children[j] if exact_log_children and j < len(exact_log_children) else None
            if known is not None:
                k = known
            elif j == 0:
                k = math.log(g.predicted_count)
            else:
                span = prev - L
                if span <= 0:
                    raise InvalidInputs(f"level {j + 1} components are not shorter than level {j}")
                k = math.log(g.predicted_count) + log_rational(span)
                k = max(k, 0.0)
            lengths.append(L)
            kids.append(k)
            prev = L
        return cls(tuple(lengths), tuple(kids))

    def scales(self) -> list[Fraction]:
        return list(self.lengths)

    def log_box_count(self, delta: Fraction) -> float:
        """log N(delta) for L_j <= delta < L_{j-1}:
        C_{j-1} * min(k_j (L_j/delta + 1), L_{j-1}/delta + 1)."""
        delta = Fraction(delta)
        if delta >= 1:
            return 0.0
        if delta < self.lengths[-1]:
            raise InsufficientDepth("scale below the deepest level")
        prev, log_c = Fraction(1), 0.0
        for L, k in zip(self.lengths, self.log_children):
            if delta >= L:
                a = k + math.log1p(float(L / delta))
                b = math.log1p(float(prev / delta)) if prev / delta < 10**300 else log_rational(prev / delta)
                return log_c + min(a, b)
            prev, log_c = L, log_c + k
        raise AssertionError("unreachable")


def box_count_predicted(geo: LogGeometry, scales: Sequence[Fraction] | None = None, points: int = FIT_POINTS) -> BoxCountReport:
    scales = sorted((Fraction(d) for d in (scales or geo.scales())), reverse=True)
    logs = [geo.log_box_count(d) for d in scales]
    counts = [_exp_int(v) for v in logs]
    fit, local = fit_slope(scales, logs, points)
    return BoxCountReport(scales, counts, logs, fit, local)


def _exp_int(v: float) -> int:
    with localcontext() as ctx:
        ctx.prec = 60
        return int(Decimal(v).exp().to_integral_value())
