import math
import threading
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dlab.cf_core import (
    ContinuedFraction,
    GrowthSpec,
    PowerLaw,
    convergents,
    estimate_type,
    from_quotients,
    linear_form_enclosure,
    load_alpha,
    named,
    nearest_int_distance,
    synthesize_quotients,
)
from dlab.errors import ExhaustedQuotients, InfeasibleGrowth, InsufficientDepth

mpmath.mp.prec = 600
ORACLE = {
    "golden": (mpmath.sqrt(5) - 1) / 2,
    "sqrt2": mpmath.sqrt(2) - 1,
    "e": mpmath.e - 2,
}


def as_mpf(x: Fraction):
    return mpmath.mpf(x.numerator) / x.denominator


def test_golden_denominators_are_fibonacci():
    assert [q for _, q in convergents(named("golden"), 6)] == [1, 1, 2, 3, 5, 8, 13]


def test_sqrt2_convergents_against_oracle():
    cf = named("sqrt2")
    conv = convergents(cf, 4)
    assert [Fraction(p, q) for p, q in conv] == [0, Fraction(1, 2), Fraction(2, 5), Fraction(5, 12), Fraction(12, 29)]
    for n in range(5):
        p, q = conv[n]
        err = abs(ORACLE["sqrt2"] - mpmath.mpf(p) / q)
        assert err < mpmath.mpf(1) / (q * cf.q(n + 1))


def test_seed_case():
    assert convergents(named("e"), 0) == [(0, 1)]


def test_e_quotient_pattern_matches_oracle():
    assert named("e").quotients(12) == [1, 2, 1, 1, 4, 1, 1, 6, 1, 1, 8, 1]
    # independent: the regular continued fraction of e - 2 from 600-bit arithmetic
    x, got = ORACLE["e"], []
    for _ in range(30):
        x = 1 / x
        a = int(mpmath.floor(x))
        got.append(a)
        x -= a
    assert got == named("e").quotients(30)


@given(st.lists(st.integers(1, 10**6), min_size=1, max_size=60))
def test_determinant_identity_and_growth(qs):
    cf = from_quotients(qs)
    cf.force(len(qs))
    for n in range(1, len(qs) + 1):
        assert cf.p(n) * cf.q(n - 1) - cf.p(n - 1) * cf.q(n) == (-1) ** (n - 1)
        assert cf.q(n) > cf.q(n - 1) or n == 1


def test_exhausted_quotients():
    cf = from_quotients([0, 3, 5])
    assert cf.q(2) == 16
    with pytest.raises(ExhaustedQuotients):
        cf.q(3)


def test_golden_distance_at_convergent():
    lo, hi = nearest_int_distance(named("golden"), 8)
    assert Fraction(1, 21) < lo <= hi < Fraction(1, 13)


def test_sqrt2_distance_at_12():
    lo, hi = nearest_int_distance(named("sqrt2"), 12)
    v = abs(12 * ORACLE["sqrt2"] - 5)
    assert as_mpf(lo) <= v <= as_mpf(hi)
    assert hi - lo < Fraction(2) ** -127
    assert abs(float(lo) - 0.029437251522859) < 1e-12


@settings(max_examples=300)
@given(st.sampled_from(sorted(ORACLE)), st.integers(1, 10**6))
def test_distance_enclosure_contains_oracle(name, n):
    lo, hi = nearest_int_distance(named(name), n)
    x = n * ORACLE[name]
    f = x - mpmath.floor(x)
    v = min(f, 1 - f)
    assert as_mpf(lo) <= v <= as_mpf(hi)


@pytest.mark.parametrize("name", sorted(ORACLE))
def test_convergent_inequality_exact(name):
    cf = named(name)
    for k in range(1, 25):
        lo, hi = nearest_int_distance(cf, cf.q(k))
        assert Fraction(1, cf.q(k + 1) + cf.q(k)) < lo and hi < Fraction(1, cf.q(k + 1))


def test_linear_form_enclosure_brackets_oracle():
    lo, hi = linear_form_enclosure(named("golden"), 2, 1)
    v = 2 * ORACLE["golden"] - 1
    assert as_mpf(lo) <= v <= as_mpf(hi) and lo > 0


def test_estimate_type_golden_tends_to_one():
    est = estimate_type(named("golden"), 400)
    assert abs(est.beta_hat - 1) < 0.01
    assert est.beta_hat == max(est.per_index_ratios)


def test_estimate_type_depth_guard():
    with pytest.raises(InsufficientDepth):
        estimate_type(named("golden"), 1)


def test_estimate_type_explicit_list():
    cf = from_quotients([0, 1, 10, 100, 1000])
    q = [cf.q(k) for k in range(5)]
    est = estimate_type(cf, 4, start=1)
    # q_1 = 1 has no finite ratio; the window starts at the first q_n > 1
    ratios = [math.log(q[n + 1]) / math.log(q[n]) for n in range(2, 4)]
    assert est.per_index_ratios == pytest.approx(ratios)
    assert est.beta_hat == pytest.approx(max(ratios))


def test_band_synthesis_example3():
    cf = synthesize_quotients(GrowthSpec.band("q^2", "2*q^2", seed_q1=2))
    assert cf.q(1) == 2
    for n in range(1, 9):
        q, nxt = cf.q(n), cf.q(n + 1)
        assert q * q <= nxt <= 2 * q * q
    est = estimate_type(cf, 8)
    assert abs(est.beta_hat - 2) <= 0.1


def test_fixed_type_one_is_bounded():
    cf = synthesize_quotients(GrowthSpec.fixed_type(1))
    assert max(cf.quotients(60)) <= 2
    assert abs(estimate_type(cf, 200).beta_hat - 1) < 0.05


def test_explicit_growth_is_verbatim():
    cf = synthesize_quotients(GrowthSpec.explicit([3, 1, 4, 1, 5]))
    assert cf.quotients(5) == [3, 1, 4, 1, 5]


def test_infeasible_band():
    # hi(q) = q + 1 < lo(q) + q for q >= 2: no partial quotient fits
    cf = synthesize_quotients(GrowthSpec.band("q^2", "1*q^1", seed_q1=2))
    with pytest.raises(InfeasibleGrowth):
        cf.q(3)


def test_power_law_grammar():
    law = PowerLaw.parse("2*q^3/2")
    assert law.coeff == 2 and law.exponent == Fraction(3, 2)
    assert law.floor(4) == 16 and law.ceil(5) == 23
    with pytest.raises(ValueError):
        PowerLaw.parse("q+1")


def test_load_alpha_variants():
    assert load_alpha("golden").q(5) == 8
    assert load_alpha("[0, 2, 2]").q(2) == 5
    assert load_alpha({"kind": "band", "lo": "q^2", "hi": "2*q^2", "seed_q1": 2}).q(2) >= 4


def test_concurrent_forcing_agrees():
    cf = named("e")
    results = []

    def work():
        results.append([cf.q(k) for k in range(300)])

    threads = [threading.Thread(target=work) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert all(r == results[0] for r in results)
