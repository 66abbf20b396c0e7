"""Gap structure of orbit segments {n alpha mod 1 : m' < n <= m}.

Every gap between circle-neighbours n1 -> n2 equals the linear form
(n2 - n1) alpha - j for an integer j, so gaps are identified exactly by
their form (k, j); the rational enclosures only serve to order and report
lengths.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

from .cf_core import ContinuedFraction, linear_form_enclosure
from .errors import PrecisionConflict, ScheduleTooThin

MAX_POINTS = 10**6
MAX_BITS = 4096


@dataclass(frozen=True)
class Gap:
    lo: Fraction
    hi: Fraction
    multiplicity: int
    form: tuple[int, int]  # length = k*alpha - j

    @property
    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2


@dataclass(frozen=True)
class GapSpectrum:
    distinct_gaps: tuple[Gap, ...]  # sorted by length
    point_count: int
    index_range: tuple[int, int]

    @property
    def lengths(self) -> list[tuple[Fraction, Fraction]]:
        return [(g.lo, g.hi) for g in self.distinct_gaps]

    def total_length_enclosure(self) -> tuple[Fraction, Fraction]:
        lo = sum((g.lo * g.multiplicity for g in self.distinct_gaps), Fraction(0))
        hi = sum((g.hi * g.multiplicity for g in self.distinct_gaps), Fraction(0))
        return lo, hi


def sorted_orbit(cf: ContinuedFraction, first: int, last: int, precision: int = 128) -> tuple[list[int], int, int, int]:
    """Indices first..last sorted by the circle position of n*alpha.

    Returns (order, P, Q, M) where P/Q = p_M/q_M is the proxy used.  With
    q_M > last the proxy orbit has the same cyclic order and the same
    floor(n alpha) as alpha itself.
    """
    m = cf.proxy_index(last, precision)
    P, Q = cf.p(m), cf.q(m)
    order = sorted(range(first, last + 1), key=lambda n: n * P % Q)
    return order, P, Q, m


def _spectrum_forms(order: list[int], P: int, Q: int) -> Counter:
    forms: Counter = Counter()
    count = len(order)
    for idx, n1 in enumerate(order):
        wrap = idx == count - 1
        n2 = order[0] if wrap else order[idx + 1]
        j = (n2 * P) // Q - (n1 * P) // Q - (1 if wrap else 0)
        forms[(n2 - n1, j)] += 1
    return forms


def gap_spectrum_bruteforce(cf: ContinuedFraction, index_range: tuple[int, int], precision: int = 128) -> GapSpectrum:
    """Sort the orbit segment and collect its circle gaps by exact linear form."""
    first, last = index_range
    if last < first or first < 1:
        raise ValueError(f"bad index range {index_range}")
    if last - first + 1 > MAX_POINTS:
        raise ValueError(f"orbit segment longer than {MAX_POINTS} points")
    order, P, Q, _ = sorted_orbit(cf, first, last, precision)
    forms = _spectrum_forms(order, P, Q)

    bits = precision
    while True:
        gaps = []
        for (k, j), mult in forms.items():
            if k == 0:
                lo = hi = Fraction(-j)
            else:
                lo, hi = linear_form_enclosure(cf, k, j, bits)
            gaps.append(Gap(lo, hi, mult, (k, j)))
        gaps.sort(key=lambda g: (g.lo, g.hi))
        if all(a.hi < b.lo for a, b in zip(gaps, gaps[1:])):
            return GapSpectrum(tuple(gaps), len(order), (first, last))
        if bits >= MAX_BITS:
            raise PrecisionConflict("gap enclosures overlap at the escalation cap")
        bits *= 2


@dataclass(frozen=True)
class GroupStructure:
    """q_{n_i} groups of floor(N_i/q_{n_i}) (or one more) points.

    Inside a group neighbours are xi apart; the closest groups are zeta apart.
    """

    n_i: int
    group_count: int
    points_per_group: int
    remainder: int
    N_i: int
    xi: tuple[Fraction, Fraction]
    zeta: tuple[Fraction, Fraction]
    admissible: bool

    def predicted_gaps(self) -> dict[str, object]:
        """Intra-group gaps: xi with multiplicity N_i - q.  Inter-group gaps: q
        gaps of length zeta + t*xi, t in {-1, 0, 1}; the -1 variant only occurs
        next to the remainder groups that carry one extra point."""
        return {
            "xi_multiplicity": self.N_i - self.group_count,
            "inter_count": self.group_count,
            "variants": (-1, 0, 1) if self.remainder else (0, 1),
        }


def group_structure(
    cf: ContinuedFraction, level: tuple[int, int, int], precision: int = 128
) -> GroupStructure:
    """Group data for the orbit segment (m_prev, m_i] at scale q_{n_i}."""
    n_i, m_prev, m_i = level
    if n_i < 1:
        raise ValueError("n_i must be >= 1")
    q = cf.q(n_i)
    N = m_i - m_prev
    if N < q:
        raise ScheduleTooThin(f"N_i = {N} < q_{n_i} = {q}")
    c, r = divmod(N, q)
    # ||q_k alpha|| = (-1)^k (q_k alpha - p_k)
    sign = 1 if n_i % 2 == 0 else -1
    xi = _signed_form(cf, sign * q, sign * cf.p(n_i), precision)
    # zeta = ||q_{n-1} alpha|| - (c-1)||q_n alpha|| is itself one signed linear form
    k = -sign * (cf.q(n_i - 1) + (c - 1) * q)
    j = -sign * (cf.p(n_i - 1) + (c - 1) * cf.p(n_i))
    bits = precision
    while True:
        zeta = _signed_form(cf, k, j, bits)
        if zeta[0] > 0 or zeta[1] < 0 or (zeta[0] == zeta[1] == 0):
            break
        if bits >= MAX_BITS:
            raise PrecisionConflict("zeta enclosure straddles 0")
        bits *= 2
    return GroupStructure(
        n_i=n_i,
        group_count=q,
        points_per_group=c,
        remainder=r,
        N_i=N,
        xi=xi,
        zeta=zeta,
        admissible=zeta[0] > 0,
    )


def _signed_form(cf: ContinuedFraction, k: int, j: int, precision: int) -> tuple[Fraction, Fraction]:
    if k == 0:
        v = Fraction(-j)
        return v, v
    return linear_form_enclosure(cf, k, j, precision)


def _overlaps(a: tuple[Fraction, Fraction], b: tuple[Fraction, Fraction]) -> bool:
    return a[0] <= b[1] and b[0] <= a[1]


def matches_spectrum(gs: GroupStructure, spectrum: GapSpectrum) -> tuple[bool, str]:
    """Check the brute-force gap multiset against the group prediction."""
    if spectrum.point_count != gs.N_i:
        return False, f"point count {spectrum.point_count} != N_i {gs.N_i}"
    pred = gs.predicted_gaps()
    xi_mult = 0
    inter = 0
    for g in spectrum.distinct_gaps:
        span = (g.lo, g.hi)
        if _overlaps(span, gs.xi):
            xi_mult += g.multiplicity
            continue
        for t in pred["variants"]:
            target = (gs.zeta[0] + t * gs.xi[0], gs.zeta[1] + t * gs.xi[1]) if t >= 0 else (
                gs.zeta[0] + t * gs.xi[1],
                gs.zeta[1] + t * gs.xi[0],
            )
            if _overlaps(span, target):
                inter += g.multiplicity
                break
        else:
            return False, f"gap {float(g.lo):.6g} matches neither xi nor a zeta variant"
    if xi_mult != pred["xi_multiplicity"]:
        return False, f"xi multiplicity {xi_mult} != {pred['xi_multiplicity']}"
    if inter != pred["inter_count"]:
        return False, f"inter-group gap count {inter} != {pred['inter_count']}"
    return True, "ok"
