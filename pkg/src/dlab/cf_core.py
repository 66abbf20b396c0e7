"""Continued fractions of alpha in (0, 1): convergents, ||n alpha|| enclosures,
Diophantine-type estimates and synthesis of alpha with prescribed growth.

alpha is only ever held as its stream of partial quotients a_1, a_2, ...
(a_0 = 0).  Every real-valued query is answered with a rational enclosure
taken from consecutive convergents, which bracket alpha.
"""

from __future__ import annotations

import itertools
import json
import math
import re
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

from .errors import ExhaustedQuotients, InfeasibleGrowth, InsufficientDepth
from .exact import nearest_int_distance_interval, parse_rational, power_ceil, power_floor


class ContinuedFraction:
    """Lazy continued fraction [0; a_1, a_2, ...] with a convergent cache.

    The cache holds (p_k, q_k) for k = 0..depth with (p_0, q_0) = (0, 1).
    Forcing a deeper cache takes a lock; reads of an already forced prefix
    are lock-free.
    """

    def __init__(self, quotients: Iterable[int], provenance: str = "explicit", name: str | None = None):
        self._source: Iterator[int] = iter(quotients)
        self.provenance = provenance
        self.name = name
        self._a: list[int] = [0]
        self._p: list[int] = [0]
        self._q: list[int] = [1]
        self._exhausted = False
        self._lock = threading.Lock()

    def __repr__(self) -> str:
        label = self.name or self.provenance
        head = ",".join(str(a) for a in self._a[1:9])
        return f"ContinuedFraction({label}: [0;{head}{',...' if not self._exhausted else ''}])"

    @property
    def depth(self) -> int:
        """Number of partial quotients forced so far."""
        return len(self._a) - 1

    def force(self, n: int) -> None:
        """Make sure a_1..a_n and the matching convergents are cached."""
        if n <= self.depth:
            return
        with self._lock:
            while self.depth < n:
                if self._exhausted:
                    raise ExhaustedQuotients(f"only {self.depth} partial quotients available, need {n}")
                try:
                    a = int(next(self._source))
                except StopIteration:
                    self._exhausted = True
                    continue
                if a < 1:
                    raise ValueError(f"partial quotient a_{self.depth + 1} = {a} is not positive")
                p_prev = self._p[-2] if len(self._p) > 1 else 1
                q_prev = self._q[-2] if len(self._q) > 1 else 0
                p = a * self._p[-1] + p_prev
                q = a * self._q[-1] + q_prev
                k = len(self._a)
                # p_k q_{k-1} - p_{k-1} q_k = (-1)^(k-1)
                assert p * self._q[-1] - self._p[-1] * q == (-1) ** (k - 1)
                self._a.append(a)
                self._p.append(p)
                self._q.append(q)

    def quotient(self, n: int) -> int:
        if n == 0:
            return 0
        self.force(n)
        return self._a[n]

    def p(self, n: int) -> int:
        if n == -1:
            return 1
        self.force(n)
        return self._p[n]

    def q(self, n: int) -> int:
        if n == -1:
            return 0
        self.force(n)
        return self._q[n]

    def quotients(self, n: int) -> list[int]:
        """a_1..a_n."""
        self.force(n)
        return self._a[1 : n + 1]

    def index_above(self, bound: int) -> int:
        """Smallest k with q_k > bound."""
        k = 0
        while self.q(k) <= bound:
            k += 1
        return k

    def interval(self, k: int) -> tuple[Fraction, Fraction]:
        """[lo, hi] from convergents k and k+1; alpha lies strictly inside."""
        a = Fraction(self.p(k), self.q(k))
        b = Fraction(self.p(k + 1), self.q(k + 1))
        return (a, b) if a < b else (b, a)

    def proxy_index(self, n_max: int, precision: int) -> int:
        """Smallest k with q_k > n_max and n_max / (q_k q_{k+1}) < 2**-precision.

        The convergent p_k/q_k then has the same partial quotients as alpha up
        to index k, so the orbit of p_k/q_k reproduces the gap structure of
        alpha for every index below q_k.
        """
        k = self.index_above(n_max)
        limit = 1 << precision
        while max(n_max, 1) * limit >= self.q(k) * self.q(k + 1):
            k += 1
        return k

    def enclosure_index(self, n: int, precision: int) -> int:
        """Smallest k with n / (q_k q_{k+1}) < 2**-precision."""
        k = 0
        limit = 1 << precision
        while max(n, 1) * limit >= self.q(k) * self.q(k + 1):
            k += 1
        return k


# -- named constants ------------------------------------------------------------


def _e_pattern() -> Iterator[int]:
    # e - 2 = [0; 1, 2, 1, 1, 4, 1, 1, 6, ...]
    yield 1
    for k in itertools.count(1):
        yield 2 * k
        yield 1
        yield 1


NAMED = {
    "golden": lambda: itertools.repeat(1),
    "sqrt2": lambda: itertools.repeat(2),
    "e": _e_pattern,
}


def named(name: str) -> ContinuedFraction:
    """golden = (sqrt5-1)/2, sqrt2 = sqrt2-1, e = e-2."""
    try:
        factory = NAMED[name]
    except KeyError:
        raise ValueError(f"unknown constant {name!r}; expected one of {sorted(NAMED)}") from None
    return ContinuedFraction(factory(), provenance="named", name=name)


def from_quotients(quotients: Sequence[int]) -> ContinuedFraction:
    """Finite explicit list; queries past its end raise ExhaustedQuotients."""
    qs = list(quotients)
    if qs and qs[0] == 0:
        # accept the [0; a_1, ...] spelling
        qs = qs[1:]
    return ContinuedFraction(qs, provenance="explicit")


# -- operations -----------------------------------------------------------------


def convergents(cf: ContinuedFraction, n: int) -> list[tuple[int, int]]:
    """(p_k, q_k) for k = 0..n."""
    if n < 0:
        raise ValueError("n must be >= 0")
    cf.force(n)
    return [(cf.p(k), cf.q(k)) for k in range(n + 1)]


def nearest_int_distance(cf: ContinuedFraction, n: int, precision: int = 128) -> tuple[Fraction, Fraction]:
    """Rational bounds (lo, hi) on ||n alpha|| of width below 2**-precision."""
    if n < 1:
        raise ValueError("n must be positive")
    k = cf.enclosure_index(n, precision)
    lo, hi = cf.interval(k)
    return nearest_int_distance_interval(n * lo, n * hi)


def linear_form_enclosure(
    cf: ContinuedFraction, k: int, j: int, precision: int = 128
) -> tuple[Fraction, Fraction]:
    """Enclosure of k*alpha - j with width below 2**-precision."""
    idx = cf.enclosure_index(abs(k), precision)
    lo, hi = cf.interval(idx)
    a, b = k * lo - j, k * hi - j
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class DiophantineTypeEstimate:
    beta_hat: float
    window: tuple[int, int]
    per_index_ratios: list[float] = field(default_factory=list)


def estimate_type(cf: ContinuedFraction, depth: int, start: int | None = None) -> DiophantineTypeEstimate:
    """Max of log q_{n+1} / log q_n over the window n in [start, depth-1].

    The default window is the later half of the prefix (skipping q_n = 1),
    since early ratios carry O(1/log q_n) bias.
    """
    if depth < 2:
        raise InsufficientDepth("estimate_type needs depth >= 2")
    cf.force(depth)
    first_valid = next((n for n in range(depth) if cf.q(n) > 1), None)
    if first_valid is None:
        raise InsufficientDepth(f"no q_n > 1 below depth {depth}")
    if start is None:
        start = max(first_valid, depth // 2)
    start = max(start, first_valid)
    if start > depth - 1:
        raise InsufficientDepth(f"empty window [{start}, {depth - 1}]")
    ratios = [math.log(cf.q(n + 1)) / math.log(cf.q(n)) for n in range(start, depth)]
    return DiophantineTypeEstimate(beta_hat=max(max(ratios), 1.0), window=(start, depth - 1), per_index_ratios=ratios)


# -- synthesis ------------------------------------------------------------------

_POWER = re.compile(
    r"^\s*(?:(?P<c>[0-9]+(?:/[0-9]+)?)\s*\*\s*)?q(?:\s*\^\s*\(?\s*(?P<e>[0-9]+(?:/[0-9]+)?)\s*\)?)?\s*$"
)


@dataclass(frozen=True)
class PowerLaw:
    """c * q^e with rational c, e."""

    coeff: Fraction
    exponent: Fraction

    @classmethod
    def parse(cls, text: str) -> "PowerLaw":
        m = _POWER.match(text)
        if not m:
            raise ValueError(f"expected c*q^e, got {text!r}")
        c = parse_rational(m["c"]) if m["c"] else Fraction(1)
        e = parse_rational(m["e"]) if m["e"] else Fraction(1)
        return cls(c, e)

    def floor(self, q: int) -> int:
        return power_floor(self.coeff, q, self.exponent)

    def ceil(self, q: int) -> int:
        return power_ceil(self.coeff, q, self.exponent)

    def __str__(self) -> str:
        return f"{self.coeff}*q^{self.exponent}"


@dataclass(frozen=True)
class GrowthSpec:
    kind: str  # "band" | "fixed-type" | "explicit"
    lo: PowerLaw | None = None
    hi: PowerLaw | None = None
    seed_q1: int = 2
    beta: Fraction | None = None
    quotients: tuple[int, ...] = ()

    @classmethod
    def band(cls, lo: str | PowerLaw, hi: str | PowerLaw, seed_q1: int = 2) -> "GrowthSpec":
        lo = PowerLaw.parse(lo) if isinstance(lo, str) else lo
        hi = PowerLaw.parse(hi) if isinstance(hi, str) else hi
        if lo.coeff < 1 or lo.exponent < 1:
            raise ValueError("band lower edge must satisfy lo(q) >= q")
        return cls("band", lo=lo, hi=hi, seed_q1=seed_q1)

    @classmethod
    def fixed_type(cls, beta, seed_q1: int = 2) -> "GrowthSpec":
        beta = parse_rational(beta)
        if beta < 1:
            raise ValueError("Diophantine type must be >= 1")
        return cls("fixed-type", lo=PowerLaw(Fraction(1), beta), hi=PowerLaw(Fraction(2), beta), seed_q1=seed_q1, beta=beta)

    @classmethod
    def explicit(cls, quotients: Sequence[int]) -> "GrowthSpec":
        return cls("explicit", quotients=tuple(int(a) for a in quotients))

    @classmethod
    def from_json(cls, obj: dict | str) -> "GrowthSpec":
        if isinstance(obj, str):
            obj = json.loads(obj)
        kind = obj["kind"]
        seed = int(obj.get("seed_q1", 2))
        if kind == "band":
            return cls.band(obj["lo"], obj["hi"], seed)
        if kind in ("fixed-type", "fixed_type"):
            return cls.fixed_type(obj["beta"], seed)
        if kind == "explicit":
            return cls.explicit(obj["quotients"])
        raise ValueError(f"unknown growth kind {kind!r}")


def _band_stream(lo: PowerLaw, hi: PowerLaw, seed_q1: int) -> Iterator[int]:
    if seed_q1 < 1:
        raise InfeasibleGrowth("seed_q1 must be a positive integer")
    yield seed_q1
    q_prev, q = 1, seed_q1
    while True:
        target, cap = lo.ceil(q), hi.floor(q)
        a = max(1, -((q_prev - target) // q))  # ceil((target - q_prev) / q)
        nxt = a * q + q_prev
        if nxt < target:
            a += 1
            nxt += q
        if nxt > cap:
            raise InfeasibleGrowth(f"no partial quotient puts q_next in [{lo}, {hi}] at q = {q}")
        yield a
        q_prev, q = q, nxt


def synthesize_quotients(growth: GrowthSpec) -> ContinuedFraction:
    """alpha whose denominators follow ``growth``; smallest admissible quotient wins ties."""
    if growth.kind == "explicit":
        return ContinuedFraction(growth.quotients, provenance="explicit")
    if growth.kind in ("band", "fixed-type"):
        return ContinuedFraction(_band_stream(growth.lo, growth.hi, growth.seed_q1), provenance="synthesized", name=growth.kind)
    raise ValueError(f"unknown growth kind {growth.kind!r}")


def load_alpha(spec) -> ContinuedFraction:
    """Named constant, explicit quotient list, or growth object (dict or JSON text)."""
    if isinstance(spec, ContinuedFraction):
        return spec
    if isinstance(spec, str):
        text = spec.strip()
        if text in NAMED:
            return named(text)
        spec = json.loads(text)
    if isinstance(spec, (list, tuple)):
        return from_quotients(spec)
    if isinstance(spec, dict):
        if "name" in spec:
            return named(spec["name"])
        return synthesize_quotients(GrowthSpec.from_json(spec))
    raise ValueError(f"cannot interpret alpha spec {spec!r}")
