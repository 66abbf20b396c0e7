"""Invariant suites behind ``dlab verify``.  Each suite returns (ok, detail)."""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Callable

from . import dimension as dim
from . import error_functions as ef
from .cf_core import ContinuedFraction, named
from .rotation import gap_spectrum_bruteforce, group_structure, matches_spectrum
from .target_sets import build_level


def random_nbk(rng: random.Random, den: int = 97) -> tuple[Fraction, Fraction, Fraction]:
    B = 1 + Fraction(rng.randrange(0, 6 * den), den)
    N = 1 + (B - 1) * Fraction(rng.randrange(0, den + 1), den)
    K = 1 + Fraction(rng.randrange(1, 8 * den), den)
    return N, B, K


def formula_identities(trials: int, seed: int = 1) -> tuple[bool, str]:
    rng = random.Random(seed)
    bad_form = bad_fact = bad_bound = 0
    for _ in range(trials):
        N, B, K = random_nbk(rng)
        if dim.S_formula(N, B, K) != dim.S_piecewise(N, B, K):
            bad_form += 1
        strict, weak = dim.threshold_fact(N, B, K)
        degenerate = B == K and N in (1, B)
        if not (strict or (degenerate and weak)):
            bad_fact += 1
        u = Fraction(rng.randrange(1, 101), 100)
        l = u * Fraction(rng.randrange(0, 101), 100)
        beta = 1 + Fraction(rng.randrange(0, 900), 100)
        try:
            dim.theorem2_lower_bound(u, l, beta)
        except AssertionError:
            bad_bound += 1
    ok = bad_form == bad_fact == bad_bound == 0
    return ok, f"{trials} tuples: form {bad_form}, fact {bad_fact}, bound {bad_bound} failures"


def random_convexity_tuple(rng: random.Random) -> tuple[float, ...]:
    a = rng.uniform(1e-6, 1 - 1e-9)
    b = rng.uniform(1e-9, a)
    c = rng.uniform(1e-6, 1 - 1e-9)
    d = rng.uniform(1e-9, c)
    return a, b, c, d, rng.random()


def log_convexity_suite(trials: int, seed: int = 2) -> tuple[bool, str]:
    rng = random.Random(seed)
    bad = 0
    for _ in range(trials):
        a, b, c, d, delta = random_convexity_tuple(rng)
        if not (b < a and d < c):
            continue
        if not dim.log_convexity_check(a, b, c, d, delta)[2]:
            bad += 1
    return bad == 0, f"{trials} tuples, {bad} violations"


def landscape_suite() -> tuple[bool, str]:
    n, v = dim.landscape_min(Fraction(1, 2), 3)
    ok1 = abs(v - 0.375) <= 1e-4 and abs(n - 4 / 3) <= 1e-3
    _, v2 = dim.landscape_min(Fraction(1, 2), 2)
    ok2 = abs(v2 - 0.5) <= 1e-12
    vals = [dim.landscape_min(0.5, b, 20001)[1] for b in (1, 1.5, 2, 3, 5, 8)]
    ok3 = all(y <= x + 1e-12 for x, y in zip(vals, vals[1:]))
    return ok1 and ok2 and ok3, f"u=1/2,b=3 -> ({n:.5f}, {v:.6f}); b=2 -> {v2}; monotone {ok3}"


def _random_cf(seed: int) -> ContinuedFraction:
    rng = random.Random(seed)

    def stream():
        while True:
            yield rng.choice((1, 1, 1, 2, 2, 3, 5, 8, 20))

    return ContinuedFraction(stream(), provenance="random")


def three_distance_suite(pairs: int, seed: int = 3, n_max: int = 10**4) -> tuple[bool, str]:
    rng = random.Random(seed)
    bad = 0
    for t in range(pairs):
        cf = _random_cf(rng.randrange(10**9))
        N = rng.randrange(1, n_max + 1)
        spec = gap_spectrum_bruteforce(cf, (1, N))
        if len(spec.distinct_gaps) > 3:
            bad += 1
    return bad == 0, f"{pairs} segments, {bad} with more than three gaps"


def group_suite(levels: int, seed: int = 4) -> tuple[bool, str]:
    rng = random.Random(seed)
    done = bad = 0
    while done < levels:
        cf = _random_cf(rng.randrange(10**9))
        n = rng.randrange(2, 9)
        q, q_next = cf.q(n), cf.q(n + 1)
        if q_next > 20000:
            continue
        m_prev = rng.randrange(0, q + 1)
        m = rng.randrange(m_prev + q, m_prev + q_next + 1)
        gs = group_structure(cf, (n, m_prev, m))
        if not gs.admissible:
            continue
        ok, _ = matches_spectrum(gs, gap_spectrum_bruteforce(cf, (m_prev + 1, m)))
        bad += not ok
        done += 1
    return bad == 0, f"{levels} admissible levels, {bad} mismatches"


def geometry_suite() -> tuple[bool, str]:
    g = named("golden")
    bad = []
    for level in [(8, 10, 44), (9, 0, 89), (7, 5, 47)]:
        arcs, geo = build_level(g, level, Fraction(3))
        brute, _ = build_level(g, level, Fraction(3), method="bruteforce")
        if arcs != brute or (geo.divisible and arcs.component_count != geo.predicted_count):
            bad.append(level)
    return not bad, f"mismatched levels {bad}" if bad else "golden K=3 levels match"


def monotonicity_suite() -> tuple[bool, str]:
    fams = [ef.power(2), ef.linear(3), ef.thm5("1/3", "1/2"), ef.example3("1/3", "1/2", [1, 2, 5, 27, 734, 538783])]
    for phi in fams:
        for n in range(1, 3000):
            phi.enclosure(n)  # the cache raises NotDecreasing on a violation
    return True, "power, linear, thm5, example3 decreasing on n < 3000"


SUITES: dict[str, Callable[[bool], tuple[bool, str]]] = {
    "formula": lambda quick: formula_identities(10**4 if quick else 10**5),
    "log-convexity": lambda quick: log_convexity_suite(10**4 if quick else 10**5),
    "landscape": lambda quick: landscape_suite(),
    "three-distance": lambda quick: three_distance_suite(20 if quick else 200),
    "groups": lambda quick: group_suite(10 if quick else 50),
    "geometry": lambda quick: geometry_suite(),
    "monotone": lambda quick: monotonicity_suite(),
}


def run_suites(names: list[str] | None = None, quick: bool = False) -> list[tuple[str, bool, str]]:
    out = []
    for name in names or list(SUITES):
        ok, detail = SUITES[name](quick)
        out.append((name, ok, detail))
    return out
