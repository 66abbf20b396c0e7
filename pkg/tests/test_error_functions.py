import threading
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dlab import error_functions as ef
from dlab.cf_core import from_quotients, named
from dlab.errors import FamilyGap, InvalidInputs, NotDecreasing

E3_Q = [1, 2, 5, 27, 734, 538783]


def test_power_and_linear_values():
    assert ef.power(2).enclosure(10) == (Fraction(1, 100), Fraction(1, 100))
    assert ef.linear(3).value(6) == Fraction(1, 2)
    lo, hi = ef.power("3/2").enclosure(7)
    assert lo < hi and lo**2 * 7**3 <= 1 <= hi**2 * 7**3
    assert float(lo) == pytest.approx(7**-1.5, rel=1e-15)
    assert ef.power(2).u == Fraction(1, 2) and ef.linear(1).l == 1


def test_thm5_tower_values():
    phi = ef.thm5("1/3", "1/2")
    assert phi.value(5) == Fraction(1, 64)  # inside (4, 8]: 4^-3
    assert phi.value(8) == Fraction(1, 64)
    assert phi.value(9) == Fraction(1, 81)  # outside every band: n^-2
    assert phi.value(17) == Fraction(1, 16**3)


def test_thm5_overlapping_bands():
    with pytest.raises(FamilyGap):
        ef.thm5("1/10", "1").enclosure(5)


def test_thm4_values_and_gap():
    phi = ef.thm4("1/3", "1/2", 3, [2, 100, 10**6])
    assert phi.params["z"] == Fraction(3, 8)
    # first k_i >= 5 is floor(100^(4/3)) = 464; the n^-3 term dominates
    assert phi.value(5) == Fraction(1, 125)
    assert phi.value(1000) == Fraction(1, 10**9)
    with pytest.raises(FamilyGap):
        phi.enclosure(10**9)
    with pytest.raises(InvalidInputs):
        ef.thm4("1/3", "1/2", 2, [2])  # u * beta = 1


def test_example3_bands():
    phi = ef.example3("1/3", "1/2", E3_Q)
    for q in E3_Q[2:]:
        assert phi.value(q) == Fraction(1, q**3)
        assert phi.log_ratio(q) == pytest.approx(1 / 3, abs=1e-12)
    assert phi.value(100) == Fraction(1, 27**3)  # band (27, 140]


def test_from_spec_round_trip():
    assert ef.from_spec('{"family":"power","gamma":"2"}').value(3) == Fraction(1, 9)
    g = named("golden")
    phi = ef.from_spec({"family": "example3", "l": "1/3", "u": "1/2"}, alpha=g)
    # golden denominators are dense: the band of q_5 = 8 runs to 22 and owns q_6 = 13
    assert phi.value(g.q(6)) == Fraction(1, 8**3)
    sparse = from_quotients([0, 2, 3, 30, 800] + [1] * 300)
    phi = ef.from_spec({"family": "example3", "l": "1/3", "u": "1/2"}, alpha=sparse)
    assert phi.value(sparse.q(4)) == Fraction(1, sparse.q(4) ** 3)
    with pytest.raises(InvalidInputs):
        ef.from_spec({"family": "thm4", "l": "1/3", "u": "1/2", "beta": 3})
    with pytest.raises(InvalidInputs):
        ef.from_spec({"family": "nope"})


def test_table_rejects_increase():
    with pytest.raises(NotDecreasing):
        ef.table(["1/2", "1/3", "1/2"])
    t = ef.table(["1/2", "1/2", "1/5"])
    assert t.value(3) == Fraction(1, 5)


@pytest.mark.parametrize(
    "phi",
    [ef.power(2), ef.linear(3), ef.thm5("1/3", "1/2"), ef.example3("1/3", "1/2", E3_Q), ef.thm4("1/3", "1/2", 3, [2, 100, 10**6])],
    ids=["power", "linear", "thm5", "example3", "thm4"],
)
def test_non_increasing(phi):
    prev = None
    for n in range(1, 2500):
        lo, hi = phi.enclosure(n)
        assert 0 < lo <= hi
        if prev is not None:
            assert lo <= prev[1]
        prev = (lo, hi)


@given(st.integers(1, 10**30), st.fractions(min_value=Fraction(1, 10), max_value=Fraction(5), max_denominator=20))
def test_power_enclosure_brackets(n, gamma):
    lo, hi = ef.power(gamma).enclosure(n)
    # (lo^den <= n^-num <= hi^den) with gamma = num/den
    num, den = gamma.numerator, gamma.denominator
    assert lo**den * n**num <= 1 <= hi**den * n**num


def test_concurrent_enclosures_identical():
    phi = ef.example3("1/3", "1/2", E3_Q)
    ref = {n: ef.example3("1/3", "1/2", E3_Q).enclosure(n) for n in range(1, 3000)}
    errors = []

    def worker(offset):
        try:
            for n in list(range(offset, 3000, 7)) + list(range(1, 3000)):
                if phi.enclosure(n) != ref[n]:
                    errors.append(n)
        except Exception as exc:  # pragma: no cover - surfaced below
            errors.append(exc)

    threads = [threading.Thread(target=worker, args=(k + 1,)) for k in range(6)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors


def test_estimate_exponents_thm5():
    est = ef.estimate_exponents(ef.thm5("1/3", "1/2"), 2, 10**5)
    assert 0.45 <= est.u_hat <= 0.5 + 1e-12
    assert 1 / 3 - 1e-12 <= est.l_hat <= 0.37


def test_estimate_exponents_power_and_grid():
    est = ef.estimate_exponents(ef.power(2), 1, 10**6, strategy="geometric")
    assert est.u_hat == pytest.approx(0.5, abs=1e-12) and est.l_hat == pytest.approx(0.5, abs=1e-12)
    grid = ef.geometric_grid(1, 10**400, 20)
    assert grid[0] == 1 and grid[-1] == 10**400 and len(grid) == 20
    with pytest.raises(ValueError):
        ef.estimate_exponents(ef.power(2), 5, 5)


def test_estimate_exponents_example3_attains_l():
    g = named("golden")
    phi = ef.example3("1/3", "1/2", g)
    est = ef.estimate_exponents(phi, 2, g.q(20))
    assert est.l_hat == pytest.approx(1 / 3, abs=1e-9)
    assert est.u_hat <= 0.5 + 1e-9


def test_inclusion_threshold():
    g = named("golden")  # q_5 = 8
    assert not ef.check_inclusion_threshold(ef.power(3), g, (5, 0, 10), Fraction(2))
    # phi(8) = 8^-2 exactly: the boundary counts as included
    assert ef.check_inclusion_threshold(ef.power(2), g, (5, 0, 8), Fraction(2))
    assert ef.check_inclusion_threshold(ef.power(2), g, (5, 0, 8), z=Fraction(1, 64))
    assert not ef.check_inclusion_threshold(ef.power(2), g, (5, 0, 9), z=Fraction(1, 64))
