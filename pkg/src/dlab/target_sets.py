"""Level sets E_i, nested intersections F_j and the uniform mass distribution.

Geometry is exact on a rational proxy alpha~ = p_M/q_M of alpha, with M
chosen so that q_M exceeds every orbit index in play: alpha~ shares the
partial quotients a_1..a_M with alpha, hence the same cyclic order, the same
three-gap structure and the same q_k, while every endpoint stays rational.
"""

from __future__ import annotations

import bisect
import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .cf_core import ContinuedFraction, linear_form_enclosure
from .errors import BudgetExceeded, EmptyIntersection, InsufficientDepth, InvalidK, ScheduleTooThin
from .exact import round_down

DEFAULT_BUDGET = 400_000


# -- interval sets on R/Z -------------------------------------------------------


@dataclass(frozen=True)
class IntervalSet:
    """Finite union of disjoint half-open arcs [lo, hi) of R/Z.

    Endpoints are stored as integer numerators over the common denominator
    ``den``; arcs are sorted, pairwise disjoint and non-touching inside
    [0, den].  An arc ending at den and one starting at 0 form a single
    circle component.
    """

    den: int
    arcs: tuple[tuple[int, int], ...]

    @classmethod
    def from_raw(cls, den: int, raw: Sequence[tuple[int, int]]) -> "IntervalSet":
        """Union of arbitrary arcs [lo, hi) (numerators, any real offset), merged."""
        pieces = []
        for lo, hi in raw:
            if hi <= lo:
                continue
            if hi - lo >= den:
                return cls(den, ((0, den),))
            a = lo % den
            b = a + (hi - lo)
            if b > den:
                pieces.append((a, den))
                pieces.append((0, b - den))
            else:
                pieces.append((a, b))
        return cls(den, _merge(pieces))

    @classmethod
    def from_fractions(cls, arcs: Sequence[tuple[Fraction, Fraction]]) -> "IntervalSet":
        den = 1
        for lo, hi in arcs:
            den = math.lcm(den, Fraction(lo).denominator, Fraction(hi).denominator)
        raw = [(int(Fraction(lo) * den), int(Fraction(hi) * den)) for lo, hi in arcs]
        return cls.from_raw(den, raw)

    @classmethod
    def full(cls) -> "IntervalSet":
        return cls(1, ((0, 1),))

    def rescale(self, den: int) -> "IntervalSet":
        if den == self.den:
            return self
        if den % self.den:
            raise ValueError("new denominator must be a multiple of the old one")
        f = den // self.den
        return IntervalSet(den, tuple((lo * f, hi * f) for lo, hi in self.arcs))

    def fractions(self) -> list[tuple[Fraction, Fraction]]:
        return [(Fraction(lo, self.den), Fraction(hi, self.den)) for lo, hi in self.arcs]

    @property
    def wraps(self) -> bool:
        return len(self.arcs) > 1 and self.arcs[0][0] == 0 and self.arcs[-1][1] == self.den

    @property
    def component_count(self) -> int:
        return len(self.arcs) - (1 if self.wraps else 0)

    @property
    def total_length(self) -> Fraction:
        return Fraction(sum(hi - lo for lo, hi in self.arcs), self.den)

    def components(self) -> list[tuple[int, int]]:
        """Circle components (start, end) over ``den``; a wrapping one has end > den
        and is listed last."""
        if not self.wraps:
            return list(self.arcs)
        first, last = self.arcs[0], self.arcs[-1]
        return list(self.arcs[1:-1]) + [(last[0], self.den + first[1])]

    def component_lengths(self) -> list[Fraction]:
        return [Fraction(e - s, self.den) for s, e in self.components()]

    def shortest_length(self) -> Fraction:
        return Fraction(min(e - s for s, e in self.components()), self.den)

    def __len__(self) -> int:
        return self.component_count


def _merge(pieces: list[tuple[int, int]]) -> tuple[tuple[int, int], ...]:
    pieces.sort()
    out: list[list[int]] = []
    for lo, hi in pieces:
        if out and lo <= out[-1][1]:
            if hi > out[-1][1]:
                out[-1][1] = hi
        else:
            out.append([lo, hi])
    return tuple((a, b) for a, b in out)


def common_den(sets: Sequence[IntervalSet]) -> int:
    den = 1
    for s in sets:
        den = math.lcm(den, s.den)
    return den


# -- level geometry -------------------------------------------------------------


@dataclass(frozen=True)
class Proxy:
    """Convergent p_M/q_M standing in for alpha."""

    index: int
    P: int
    Q: int

    @classmethod
    def for_range(cls, cf: ContinuedFraction, n_max: int, precision: int = 128) -> "Proxy":
        m = cf.proxy_index(n_max, precision)
        return cls(m, cf.p(m), cf.q(m))

    def residue(self, n: int) -> int:
        """Q * frac(n alpha~)."""
        return n * self.P % self.Q

    def step(self, k: int) -> Fraction:
        """Signed circle displacement of k*alpha~, in (-1/2, 1/2]."""
        r = self.residue(k)
        return Fraction(r if 2 * r <= self.Q else r - self.Q, self.Q)

    def dist(self, k: int) -> Fraction:
        """||k alpha~||."""
        r = self.residue(k)
        return Fraction(min(r, self.Q - r), self.Q)


@dataclass(frozen=True)
class LevelGeometry:
    """Predicted shape of E_i.  Case 1: q_{n_i} merged groups of length y.
    Case 2: N_i separate arcs of length z."""

    n_i: int
    m_prev: int
    m_i: int
    q: int
    case_tag: int
    M_i: int
    N_i: int
    points_per_group: int
    xi: Fraction
    zeta: Fraction
    y: Fraction
    z: Fraction
    c: Fraction
    d: Fraction | None
    s_i: int

    @property
    def predicted_count(self) -> int:
        return self.M_i if self.case_tag == 1 else self.N_i

    @property
    def predicted_length(self) -> Fraction:
        return self.y if self.case_tag == 1 else self.z

    @property
    def divisible(self) -> bool:
        return self.N_i % self.q == 0

    @property
    def enumeration_size(self) -> int:
        """Arcs the group construction has to emit."""
        return self.q if self.case_tag == 1 else self.N_i


def arc_length(q: int, K: Fraction, bits: int = 64) -> Fraction:
    """q^-K, exact when rational, else rounded down to ``bits`` significant bits."""
    K = Fraction(K)
    if K <= 1:
        raise InvalidK(f"K must exceed 1, got {K}")
    return round_down(q, -K, bits)


def level_geometry(
    cf: ContinuedFraction, level: tuple[int, int, int], z: Fraction, proxy: Proxy
) -> LevelGeometry:
    n_i, m_prev, m_i = level
    if n_i < 1:
        raise ValueError("n_i must be >= 1")
    if proxy.Q <= m_i:
        raise ValueError("proxy denominator must exceed m_i")
    q = cf.q(n_i)
    N = m_i - m_prev
    if N < q:
        raise ScheduleTooThin(f"level n_i={n_i}: N_i = {N} < q = {q}")
    groups = N // q
    xi = proxy.dist(q)
    zeta = proxy.dist(cf.q(n_i - 1)) - (groups - 1) * xi
    if zeta <= 0:
        raise ScheduleTooThin(f"level n_i={n_i}: groups collide (zeta <= 0); m_i too far past q_(n_i+1)")
    case = 1 if xi <= z else 2
    return LevelGeometry(
        n_i=n_i,
        m_prev=m_prev,
        m_i=m_i,
        q=q,
        case_tag=case,
        M_i=q,
        N_i=N,
        points_per_group=groups,
        xi=xi,
        zeta=zeta,
        y=(groups - 1) * xi + z,
        z=z,
        c=zeta - z,
        d=(xi - z) if case == 2 else None,
        s_i=q,
    )


def _den_for(proxy: Proxy, z: Fraction) -> int:
    half = z / 2
    return math.lcm(proxy.Q, half.denominator)


def level_arcs_bruteforce(level: tuple[int, int, int], z: Fraction, proxy: Proxy, budget: int = DEFAULT_BUDGET) -> IntervalSet:
    """Union of the arcs [x_n - z/2, x_n + z/2), one per orbit index, merged."""
    _, m_prev, m_i = level
    if m_i - m_prev > budget:
        raise BudgetExceeded(f"{m_i - m_prev} arcs exceed budget {budget}")
    den = _den_for(proxy, z)
    f = den // proxy.Q
    h = int(z / 2 * den)
    raw = []
    for n in range(m_prev + 1, m_i + 1):
        c = proxy.residue(n) * f
        raw.append((c - h, c + h))
    return IntervalSet.from_raw(den, raw)


def level_arcs_groups(geom: LevelGeometry, proxy: Proxy, budget: int = DEFAULT_BUDGET) -> IntervalSet:
    """Same set, built from the group structure: in Case 1 each residue class
    mod q is one arc spanning its points, so only q arcs are emitted."""
    if geom.case_tag == 2:
        return level_arcs_bruteforce((geom.n_i, geom.m_prev, geom.m_i), geom.z, proxy, budget)
    if geom.q > budget:
        raise BudgetExceeded(f"{geom.q} group arcs exceed budget {budget}")
    den = _den_for(proxy, geom.z)
    f = den // proxy.Q
    h = int(geom.z / 2 * den)
    step = proxy.step(geom.q) * den  # exact integer
    step = int(step)
    extra = geom.N_i - geom.q * geom.points_per_group
    raw = []
    for t in range(geom.q):
        n0 = geom.m_prev + 1 + t
        count = geom.points_per_group + (1 if t < extra else 0)
        c0 = proxy.residue(n0) * f
        c1 = c0 + (count - 1) * step
        lo, hi = min(c0, c1), max(c0, c1)
        raw.append((lo - h, hi + h))
    return IntervalSet.from_raw(den, raw)


def build_level(
    cf: ContinuedFraction,
    level: tuple[int, int, int],
    K: Fraction | None = None,
    *,
    z: Fraction | None = None,
    proxy: Proxy | None = None,
    bits: int = 64,
    method: str = "groups",
    budget: int = DEFAULT_BUDGET,
) -> tuple[IntervalSet, LevelGeometry]:
    """E_i for the schedule level (n_i, m_{i-1}, m_i): arcs of length z = q_{n_i}^-K.

    Pass ``z`` directly to override the q^-K rule (for instance z = m_i^(-1/u)).
    """
    n_i, m_prev, m_i = level
    if z is None:
        if K is None:
            raise ValueError("need K or z")
        z = arc_length(cf.q(n_i), K, bits)
    elif K is not None and Fraction(K) <= 1:
        raise InvalidK(f"K must exceed 1, got {K}")
    if proxy is None:
        proxy = Proxy.for_range(cf, m_i)
    geom = level_geometry(cf, level, z, proxy)
    if method == "groups":
        arcs = level_arcs_groups(geom, proxy, budget)
    elif method == "bruteforce":
        arcs = level_arcs_bruteforce(level, z, proxy, budget)
    else:
        raise ValueError(f"unknown method {method!r}")
    return arcs, geom


# -- nesting --------------------------------------------------------------------


class ContainmentRule(enum.Enum):
    CONTAINED = "contained"  # keep E_j components lying inside a retained parent
    INTERSECT = "intersect"  # keep the pieces E_j ∩ F_{j-1}


class _Line:
    """Circle components unrolled onto the line for containment queries."""

    def __init__(self, comps: list[tuple[int, int]], den: int):
        items = [(s, e, i) for i, (s, e) in enumerate(comps)]
        if comps and comps[-1][1] > den:
            s, e = comps[-1]
            items.insert(0, (s - den, e - den, len(comps) - 1))
        self.items = items
        self.starts = [s for s, _, _ in items]

    def parent_of(self, s: int, e: int) -> int | None:
        k = bisect.bisect_right(self.starts, s) - 1
        if k >= 0:
            ps, pe, idx = self.items[k]
            if e <= pe:
                return idx
        return None


def _children(parents: IntervalSet, child: IntervalSet) -> list[list[int]]:
    """For each parent component, the indices of child components inside it."""
    den = parents.den
    pc = parents.components()
    line = _Line(pc, den)
    out: list[list[int]] = [[] for _ in pc]
    for ci, (s, e) in enumerate(child.components()):
        idx = line.parent_of(s, e)
        if idx is not None:
            out[idx].append(ci)
    return out


def retained_family(levels: Sequence[IntervalSet], keep_rule: ContainmentRule = ContainmentRule.CONTAINED) -> list[IntervalSet]:
    """F_1, ..., F_j with F_1 = E_1."""
    if not levels:
        raise ValueError("levels must be nonempty")
    den = common_den(levels)
    levels = [s.rescale(den) for s in levels]
    fam = [levels[0]]
    for j, e in enumerate(levels[1:], start=2):
        prev = fam[-1]
        if keep_rule is ContainmentRule.CONTAINED:
            kids = _children(prev, e)
            comps = e.components()
            keep = [comps[i] for group in kids for i in group]
            nxt = IntervalSet.from_raw(den, keep)
        else:
            nxt = intersect_pair(prev, e)
        if nxt.component_count == 0:
            raise EmptyIntersection(f"level {j} keeps no component")
        fam.append(nxt)
    return fam


def intersect_levels(levels: Sequence[IntervalSet], keep_rule: ContainmentRule = ContainmentRule.CONTAINED) -> IntervalSet:
    return retained_family(levels, keep_rule)[-1]


def intersect_pair(a: IntervalSet, b: IntervalSet) -> IntervalSet:
    den = math.lcm(a.den, b.den)
    a, b = a.rescale(den), b.rescale(den)
    out = []
    i = j = 0
    while i < len(a.arcs) and j < len(b.arcs):
        lo = max(a.arcs[i][0], b.arcs[j][0])
        hi = min(a.arcs[i][1], b.arcs[j][1])
        if lo < hi:
            out.append((lo, hi))
        if a.arcs[i][1] < b.arcs[j][1]:
            i += 1
        else:
            j += 1
    return IntervalSet.from_raw(den, out)


# -- mass distribution ----------------------------------------------------------


@dataclass
class MassDistribution:
    """Uniform measure on the nested components F_1 ⊃ ... ⊃ F_depth.

    ``levels[j]`` holds the retained components of level j+1 and their mass;
    ``parents[j][k]`` indexes the level-j component containing component k.
    """

    den: int
    levels: list[tuple[list[tuple[int, int]], list[Fraction]]]
    parents: list[list[int]] = field(default_factory=list)

    @property
    def depth(self) -> int:
        return len(self.levels)

    def level_set(self, j: int) -> IntervalSet:
        return IntervalSet.from_raw(self.den, self.levels[j - 1][0])

    def component_mass(self, j: int) -> list[Fraction]:
        return self.levels[j - 1][1]


def build_mass_distribution(family: Sequence[IntervalSet], equalize: bool = True) -> MassDistribution:
    """Spread unit mass over the nested family, equally among siblings.

    Childless components are pruned bottom-up.  With ``equalize`` every
    parent keeps the same number of children (the minimum over parents), so
    all components of one level carry the same mass.
    """
    den = common_den(family)
    family = [s.rescale(den) for s in family]
    comps = [s.components() for s in family]
    kids = [None] + [_children(family[j - 1], family[j]) for j in range(1, len(family))]

    alive = [set(range(len(c))) for c in comps]
    for j in range(len(family) - 1, 0, -1):
        # drop children whose subtree died, then parents left without children
        for p in list(alive[j - 1]):
            live = [k for k in kids[j][p] if k in alive[j]]
            kids[j][p] = live
            if not live:
                alive[j - 1].discard(p)
        alive[j] = {k for p in alive[j - 1] for k in kids[j][p]}
    if not alive[0]:
        raise EmptyIntersection("no component survives to the deepest level")

    if equalize:
        for j in range(1, len(family)):
            # trim children trees top-down so every parent retains k_min children
            live_parents = sorted(alive[j - 1])
            kmin = min(len(kids[j][p]) for p in live_parents)
            kept = set()
            for p in live_parents:
                kids[j][p] = kids[j][p][:kmin]
                kept.update(kids[j][p])
            alive[j] = kept

    order = [sorted(alive[0])]
    masses = [[Fraction(1, len(order[0]))] * len(order[0])]
    parents: list[list[int]] = [[]]
    for j in range(1, len(family)):
        pos = {p: i for i, p in enumerate(order[j - 1])}
        row, mrow, prow = [], [], []
        for p in order[j - 1]:
            ch = [k for k in kids[j][p] if k in alive[j]]
            share = masses[j - 1][pos[p]] / len(ch)
            for k in ch:
                row.append(k)
                mrow.append(share)
                prow.append(pos[p])
        # sort by position for bisect queries
        idx = sorted(range(len(row)), key=lambda i: comps[j][row[i]][0])
        order.append([row[i] for i in idx])
        masses.append([mrow[i] for i in idx])
        parents.append([prow[i] for i in idx])
    levels = [([comps[j][k] for k in order[j]], masses[j]) for j in range(len(family))]
    return MassDistribution(den=den, levels=levels, parents=parents)


def _ball_index(md: MassDistribution) -> tuple[list[int], list[int], list[Fraction], Fraction]:
    cache = getattr(md, "_index", None)
    if cache is None:
        comps, masses = md.levels[-1]
        prefix = [Fraction(0)]
        for m in masses:
            prefix.append(prefix[-1] + m)
        shortest = Fraction(min(e - s for s, e in comps), md.den)
        cache = ([s for s, _ in comps], [e for _, e in comps], prefix, shortest)
        md._index = cache
    return cache


def mass_of_ball(md: MassDistribution, center: Fraction, radius: Fraction) -> Fraction:
    """mu([center - radius, center + radius]); deepest-level components that the
    ball touches count with their full mass."""
    radius = Fraction(radius)
    if radius <= 0:
        raise ValueError("radius must be positive")
    if radius >= Fraction(1, 2):
        return Fraction(1)
    starts, ends, prefix, shortest = _ball_index(md)
    if radius < shortest / 2:
        raise InsufficientDepth(f"radius {float(radius):.3g} below the deepest scale {float(shortest):.3g}")
    den = md.den
    a = (Fraction(center) - radius) * den
    b = (Fraction(center) + radius) * den
    shift = math.floor(a) // den * den
    a, b = a - shift, b - shift
    # [s, e) meets [a, b] iff e > a and s <= b; for integers that reads
    # e > floor(a) and s <= floor(b).  Copies at -den, 0, +den cover the circle.
    ranges = []
    for off in (-den, 0, den):
        lo = bisect.bisect_right(ends, math.floor(a - off))
        hi = bisect.bisect_right(starts, math.floor(b - off))
        if lo < hi:
            ranges.append((lo, hi))
    ranges.sort()
    total, reach = Fraction(0), 0
    for lo, hi in ranges:
        lo = max(lo, reach)
        if lo < hi:
            total += prefix[hi] - prefix[lo]
            reach = hi
    return total


# -- membership in E_phi(alpha) -------------------------------------------------


@dataclass(frozen=True)
class MembershipResult:
    witnesses: list[int]
    near_misses: list[int]


def membership_check(cf: ContinuedFraction, phi, y: Fraction, n_max: int, precision: int = 128) -> MembershipResult:
    """All n <= n_max with ||n alpha - y|| < phi(n), certified by enclosures.

    A float pass screens candidates with a generous margin; every candidate is
    then decided with exact rational enclosures of alpha and phi(n).
    """
    import numpy as np

    if n_max > 10**7:
        raise ValueError("n_max above 10^7")
    y = Fraction(y)
    idx = cf.enclosure_index(n_max, precision)
    a_lo, a_hi = cf.interval(idx)
    alpha_f = float(a_lo)
    y_f = float(y - (y.numerator // y.denominator))
    cand: list[int] = []
    chunk = 1 << 18
    for start in range(1, n_max + 1, chunk):
        n = np.arange(start, min(start + chunk, n_max + 1), dtype=np.float64)
        # frac(n*alpha) in two pieces keeps the float error near 1e-9
        a_hi_part = float(np.float32(alpha_f))
        a_lo_part = alpha_f - a_hi_part
        x = np.mod(n * a_hi_part, 1.0) + np.mod(n * a_lo_part, 1.0) - y_f
        x = np.mod(x, 1.0)
        dist = np.minimum(x, 1.0 - x)
        bound = phi.approx_array(n)
        hit = np.nonzero(dist < bound * (1 + 1e-6) + 1e-7)[0]
        cand.extend(int(n[h]) for h in hit)
    witnesses, near = [], []
    from .exact import nearest_int_distance_interval

    for n in cand:
        d_lo, d_hi = nearest_int_distance_interval(n * a_lo - y, n * a_hi - y)
        p_lo, p_hi = phi.enclosure(n)
        if d_hi < p_lo:
            witnesses.append(n)
        elif d_lo < p_hi:
            near.append(n)
    return MembershipResult(witnesses, near)
