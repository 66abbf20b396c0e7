"""Decreasing error functions phi: N -> R+ evaluated as rational enclosures.

Families:

* ``power(gamma)``         phi(n) = n^-gamma
* ``linear(c)``            phi(n) = c / n
* ``thm4(l, u, beta, q)``  phi(n) = max(n^(-1/l), k_i^(-1/u)) on k_{i-1} < n <= k_i,
                           k_i = floor(q_i^(u/z)), z = max(l, (1+u)/(1+beta))
* ``thm5(l, u)``           tower n_1 = 2, n_{i+1} = 2^n_i; phi(n) = n_i^(-1/l) on
                           (n_i, floor(n_i^(u/l))], n^(-1/u) elsewhere
* ``example3(l, u, q)``    phi(n) = max(n^(-1/l), q_k^(-1/l)) on
                           floor(q_{k-1}^(u/l)) < n <= floor(q_k^(u/l))
* ``table``                explicit values phi(1), phi(2), ...

Irrational band edges are floored to integers; every exponent is an exact
rational and irrational powers are enclosed between dyadic rationals.
"""

from __future__ import annotations

import bisect
import itertools
import json
import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import gmpy2
import numpy as np

from .cf_core import ContinuedFraction
from .errors import FamilyGap, InvalidInputs, NotDecreasing, PrecisionConflict
from .exact import log_rational, parse_rational, power_enclosure, power_floor

Enclosure = tuple[Fraction, Fraction]
MAX_BITS = 4096


class _QSource:
    """Lazy view of a denominator sequence (explicit list or a continued fraction)."""

    def __init__(self, source):
        self._cf = source if isinstance(source, ContinuedFraction) else None
        self._list = None if self._cf is not None else [int(x) for x in source]

    def get(self, k: int) -> int | None:
        if self._cf is not None:
            return self._cf.q(k)
        return self._list[k] if k < len(self._list) else None

    def to_list(self, limit: int | None = None) -> list[int]:
        if self._list is not None:
            return list(self._list)
        return [self._cf.q(k) for k in range(limit or self._cf.depth + 1)]


class ErrorFunction:
    """phi with family metadata, an evaluation cache and a monotonicity guard."""

    def __init__(self, family: str, params: dict, bits: int = 64):
        self.family = family
        self.params = params
        self.bits = bits
        self._cache: dict[int, Enclosure] = {}
        self._keys: list[int] = []
        self._lock = threading.Lock()
        self._edges: list[int] | None = None

    def __repr__(self) -> str:
        shown = {k: str(v) for k, v in self.params.items() if k not in ("q", "values")}
        return f"ErrorFunction({self.family}, {shown})"

    # -- public API ----------------------------------------------------------

    @property
    def u(self) -> Fraction | None:
        """Upper exponent limsup log n / -log phi(n), when the family fixes it."""
        if self.family == "power":
            return 1 / self.params["gamma"]
        if self.family == "linear":
            return Fraction(1)
        return self.params.get("u")

    @property
    def l(self) -> Fraction | None:
        if self.family == "power":
            return 1 / self.params["gamma"]
        if self.family == "linear":
            return Fraction(1)
        return self.params.get("l")

    def enclosure(self, n: int, bits: int | None = None) -> Enclosure:
        """Rational enclosure of phi(n) with relative width below 2**(1-bits)."""
        if n < 1:
            raise ValueError("phi is defined on positive integers")
        bits = bits or self.bits
        if bits == self.bits:
            hit = self._cache.get(n)
            if hit is not None:
                return hit
        enc = self._evaluate(n, bits)
        if enc[0] <= 0:
            raise InvalidInputs(f"phi({n}) is not positive")
        if bits == self.bits:
            self._store(n, enc)
        return enc

    def value(self, n: int) -> Fraction:
        """Round-down representative of phi(n)."""
        return self.enclosure(n)[0]

    def approx(self, n: int) -> float:
        lo, hi = self.enclosure(n)
        return float((lo + hi) / 2)

    def approx_array(self, n: np.ndarray) -> np.ndarray:
        """Float phi over an array; slightly generous, used only for screening."""
        if self.family == "power":
            return np.power(n, -float(self.params["gamma"]))
        if self.family == "linear":
            return float(self.params["c"]) / n
        return np.array([self.approx(int(k)) for k in n])

    def log_ratio(self, n: int) -> float:
        """log n / -log phi(n)."""
        lo, hi = self.enclosure(n)
        return math.log(n) / -log_rational((lo + hi) / 2)

    def breakpoints(self, n_max: int) -> list[int]:
        """Band edges (and their neighbours) up to n_max, where log-ratio extremes sit."""
        edges = self._band_edges(n_max)
        out = set()
        for e in edges:
            for k in (e - 1, e, e + 1):
                if 1 <= k <= n_max:
                    out.add(k)
        return sorted(out)

    def edge_plateaus(self, n_max: int) -> list[int]:
        """Band edges e with phi(e+1) == phi(e) exactly (strict decrease fails there)."""
        out = []
        for e in self._band_edges(n_max):
            if e + 1 <= n_max and e >= 1:
                a, b = self.enclosure(e), self.enclosure(e + 1)
                if a[0] == a[1] == b[0] == b[1]:
                    out.append(e)
        return out

    # -- internals -----------------------------------------------------------

    def _store(self, n: int, enc: Enclosure) -> None:
        with self._lock:
            if n in self._cache:
                return
            i = bisect.bisect_left(self._keys, n)
            if i > 0:
                prev = self._keys[i - 1]
                if enc[0] > self._cache[prev][1]:
                    raise NotDecreasing(f"{self!r}: phi({n}) > phi({prev})")
            if i < len(self._keys):
                nxt = self._keys[i]
                if self._cache[nxt][0] > enc[1]:
                    raise NotDecreasing(f"{self!r}: phi({nxt}) > phi({n})")
            self._keys.insert(i, n)
            self._cache[n] = enc

    def _pow(self, base: int, exponent: Fraction, bits: int) -> Enclosure:
        return power_enclosure(base, exponent, bits)

    def _evaluate(self, n: int, bits: int) -> Enclosure:
        fam, p = self.family, self.params
        if fam == "power":
            return self._pow(n, -p["gamma"], bits)
        if fam == "linear":
            v = p["c"] / n
            return v, v
        if fam == "table":
            vals = p["values"]
            if n > len(vals):
                raise FamilyGap(f"table defines phi only up to n = {len(vals)}")
            v = vals[n - 1]
            return v, v
        if fam == "thm5":
            return self._eval_thm5(n, bits)
        if fam == "thm4":
            return self._eval_thm4(n, bits)
        if fam == "example3":
            return self._eval_example3(n, bits)
        raise ValueError(f"unknown family {fam!r}")

    def _tower(self, limit: int) -> list[int]:
        tower = [2]
        while tower[-1] <= limit and tower[-1] < 1 << 20:
            tower.append(1 << tower[-1])
        return tower

    def _eval_thm5(self, n: int, bits: int) -> Enclosure:
        l, u = self.params["l"], self.params["u"]
        tower = self._tower(n)
        owners = [t for t in tower if t < n <= power_floor(1, t, u / l)]
        if len(owners) > 1:
            raise FamilyGap(f"thm5 bands overlap at n = {n}; u/l too large for the tower")
        if owners:
            return self._pow(owners[0], -1 / l, bits)
        return self._pow(n, -1 / u, bits)

    def _k_edges(self, upto: int) -> list[int]:
        """k_i = floor(q_i^(u/z)) for the bound q-subsequence, far enough to cover ``upto``."""
        src: _QSource = self.params["q"]
        ratio = self.params["u"] / self.params["z"]
        ks = self.params.setdefault("_k", [])
        while not ks or ks[-1] < upto:
            q = src.get(len(ks))
            if q is None:
                break
            ks.append(power_floor(1, q, ratio))
        return ks

    def _eval_thm4(self, n: int, bits: int) -> Enclosure:
        l, u = self.params["l"], self.params["u"]
        ks = self._k_edges(n)
        i = bisect.bisect_left(ks, n)  # first k_i >= n
        if i == len(ks):
            raise FamilyGap(f"thm4: n = {n} beyond the last bound denominator")
        band = self._pow(ks[i], -1 / u, bits)
        if l == 0:
            return band
        own = self._pow(n, -1 / l, bits)
        return max(own[0], band[0]), max(own[1], band[1])

    def _q_edges(self, upto: int) -> list[int]:
        """floor(q_k^(u/l)) for k = 0, 1, ... until an edge reaches ``upto``."""
        src: _QSource = self.params["q"]
        ratio = self.params["u"] / self.params["l"]
        es = self.params.setdefault("_e", [])
        while not es or es[-1] < upto:
            q = src.get(len(es))
            if q is None:
                break
            es.append(power_floor(1, q, ratio))
        return es

    def _eval_example3(self, n: int, bits: int) -> Enclosure:
        l = self.params["l"]
        es = self._q_edges(n)
        k = bisect.bisect_left(es, n)  # smallest k with n <= floor(q_k^(u/l))
        if k == len(es):
            raise FamilyGap(f"example3: n = {n} beyond the last denominator")
        src: _QSource = self.params["q"]
        qk = src.get(k)
        own = self._pow(n, -1 / l, bits)
        band = self._pow(qk, -1 / l, bits)
        return max(own[0], band[0]), max(own[1], band[1])

    def _band_edges(self, n_max: int) -> list[int]:
        fam, p = self.family, self.params
        if fam == "thm5":
            out = []
            for t in self._tower(n_max):
                if t > n_max:
                    break
                out += [t, min(power_floor(1, t, p["u"] / p["l"]), n_max)]
            return out
        if fam == "thm4":
            return [k for k in self._k_edges(n_max) if k <= n_max] + self._q_inside(n_max)
        if fam == "example3":
            src: _QSource = p["q"]
            es = [e for e in self._q_edges(n_max) if e <= n_max]
            qs = [src.get(k) for k in range(len(es) + 1)]
            return sorted(set(es + [q for q in qs if q is not None and q <= n_max]))
        return []

    def _q_inside(self, n_max: int) -> list[int]:
        src: _QSource = self.params["q"]
        out = []
        for k in itertools.count():
            q = src.get(k)
            if q is None or q > n_max:
                break
            out.append(q)
        return out


# -- constructors ---------------------------------------------------------------


def _check_lu(l: Fraction, u: Fraction) -> None:
    if not (0 <= l < u <= 1):
        raise InvalidInputs(f"need 0 <= l < u <= 1, got l={l}, u={u}")


def power(gamma) -> ErrorFunction:
    gamma = parse_rational(gamma)
    if gamma <= 0:
        raise InvalidInputs("gamma must be positive")
    return ErrorFunction("power", {"gamma": gamma})


def linear(c) -> ErrorFunction:
    c = parse_rational(c)
    if c <= 0:
        raise InvalidInputs("c must be positive")
    return ErrorFunction("linear", {"c": c})


def thm5(l, u) -> ErrorFunction:
    l, u = parse_rational(l), parse_rational(u)
    _check_lu(l, u)
    if l == 0:
        raise InvalidInputs("thm5 needs l > 0 (phi uses n_i^(-1/l))")
    return ErrorFunction("thm5", {"l": l, "u": u})


def thm4_z(l: Fraction, u: Fraction, beta: Fraction) -> Fraction:
    return max(l, (1 + u) / (1 + beta))


def thm4(l, u, beta, q) -> ErrorFunction:
    """``q`` is the sparse denominator subsequence q_{n_1} < q_{n_2} < ... of alpha."""
    l, u, beta = parse_rational(l), parse_rational(u), parse_rational(beta)
    _check_lu(l, u)
    if u * beta <= 1:
        raise InvalidInputs("thm4 needs u > 1/beta")
    z = thm4_z(l, u, beta)
    return ErrorFunction("thm4", {"l": l, "u": u, "beta": beta, "z": z, "q": _QSource(q)})


def example3(l, u, q) -> ErrorFunction:
    """``q`` is the full denominator sequence q_0, q_1, ... (list or ContinuedFraction)."""
    l, u = parse_rational(l), parse_rational(u)
    _check_lu(l, u)
    if l == 0:
        raise InvalidInputs("example3 needs l > 0")
    return ErrorFunction("example3", {"l": l, "u": u, "q": _QSource(q)})


def table(values: Sequence) -> ErrorFunction:
    vals = [parse_rational(v) for v in values]
    if any(v <= 0 for v in vals):
        raise InvalidInputs("table values must be positive")
    for i in range(1, len(vals)):
        if vals[i] > vals[i - 1]:
            raise NotDecreasing(f"table increases at n = {i + 1}")
    return ErrorFunction("table", {"values": vals})


def from_spec(spec, alpha: ContinuedFraction | None = None, subsequence: Sequence[int] | None = None) -> ErrorFunction:
    """Build a family from its JSON description.

    example3 binds to the denominators of ``alpha``; thm4 binds to
    ``subsequence`` (or an explicit ``"q"`` list in the spec).
    """
    if isinstance(spec, str):
        spec = json.loads(spec)
    fam = spec["family"]
    if fam == "power":
        return power(spec["gamma"])
    if fam == "linear":
        return linear(spec.get("c", 1))
    if fam == "thm5":
        return thm5(spec["l"], spec["u"])
    if fam == "example3":
        q = spec.get("q") or alpha
        if q is None:
            raise InvalidInputs("example3 needs alpha or an explicit q list")
        return example3(spec["l"], spec["u"], q)
    if fam == "thm4":
        q = spec.get("q") or subsequence
        if q is None:
            raise InvalidInputs("thm4 needs a bound denominator subsequence")
        return thm4(spec["l"], spec["u"], spec["beta"], q)
    if fam == "table":
        return table(spec["values"])
    raise InvalidInputs(f"unknown family {fam!r}")


def eval_phi(phi: ErrorFunction, n: int) -> Enclosure:
    return phi.enclosure(n)


# -- exponents ------------------------------------------------------------------


@dataclass(frozen=True)
class ExponentEstimate:
    u_hat: float
    l_hat: float
    sample_indices: list[int] = field(default_factory=list)
    ratios: list[float] = field(default_factory=list)


def geometric_grid(n_min: int, n_max: int, points: int = 200) -> list[int]:
    """Log-spaced integers floor(n_min^(1-t) n_max^t), exact for huge bounds."""
    grid = {n_min, n_max}
    lo, hi = gmpy2.mpz(n_min), gmpy2.mpz(n_max)
    for k in range(1, points - 1):
        val, _ = gmpy2.iroot(lo ** (points - 1 - k) * hi**k, points - 1)
        grid.add(int(val))
    return sorted(n for n in grid if n_min <= n <= n_max)


def estimate_exponents(phi: ErrorFunction, n_min: int, n_max: int, strategy: str = "breakpoints") -> ExponentEstimate:
    """Extremes of log n / -log phi(n) over sampled n in [n_min, n_max].

    ``geometric`` samples a log-spaced grid; ``breakpoints`` adds every band
    edge and its neighbours so that the extremes are attained.
    """
    if not 1 <= n_min < n_max:
        raise ValueError("need 1 <= n_min < n_max")
    samples = geometric_grid(max(n_min, 2), n_max)
    if strategy == "breakpoints":
        samples = sorted(set(samples) | {n for n in phi.breakpoints(n_max) if n >= max(n_min, 2)})
    elif strategy != "geometric":
        raise ValueError(f"unknown strategy {strategy!r}")
    used, ratios = [], []
    for n in samples:
        lo, hi = phi.enclosure(n)
        if hi >= 1:
            continue
        used.append(n)
        ratios.append(phi.log_ratio(n))
    if not ratios:
        raise InvalidInputs("no sample with phi(n) < 1")
    return ExponentEstimate(u_hat=max(ratios), l_hat=min(ratios), sample_indices=used, ratios=ratios)


def check_inclusion_threshold(
    phi: ErrorFunction, cf: ContinuedFraction, level: tuple[int, int, int], K: Fraction | None = None, z: Fraction | None = None
) -> bool:
    """phi(m_i) >= q_{n_i}^-K (or >= z when the arc length is given)."""
    n_i, _, m_i = level
    bits = 64
    while True:
        p_lo, p_hi = phi.enclosure(m_i, bits)
        if z is not None:
            t_lo = t_hi = Fraction(z)
        else:
            t_lo, t_hi = power_enclosure(cf.q(n_i), -Fraction(K), bits)
        if p_lo >= t_hi:
            return True
        if p_hi < t_lo:
            return False
        if bits >= MAX_BITS:
            raise PrecisionConflict(f"cannot compare phi({m_i}) with the threshold")
        bits *= 2
