from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from lorenzcert.interval import (DomainError, Dyadic, Interval, arith, div, enclose_fractions, ln, pow34, root4,
                                 round_down, round_up, sqrt)

dyadics = st.builds(lambda m, e: Dyadic(m, e), st.integers(-2**40, 2**40), st.integers(-60, 10))
positive = st.builds(lambda m, e: Dyadic(m, e), st.integers(1, 2**40), st.integers(-50, 5))
precisions = st.sampled_from([8, 24, 53, 64, 120])


def iv(a, b):
    return Interval(min(a, b), max(a, b))


def test_dyadic_canonical_form():
    assert Dyadic(12, 0) == Dyadic(3, 2)
    d = Dyadic(12, 0)
    assert (d.man, d.exp) == (3, 2)
    assert Dyadic(0, 17).exp == 0


def test_dyadic_parse_and_decimal():
    assert Dyadic.parse("3*2^-4") == Dyadic.parse("0.1875")
    assert Dyadic(3, -4).to_decimal() == "0.1875"
    with pytest.raises(ValueError):
        Dyadic.from_fraction(Fraction(1, 3))


def test_empty_interval_rejected():
    with pytest.raises(ValueError):
        Interval(1, 0)


@given(dyadics, precisions)
def test_rounding_brackets(d, p):
    lo, hi = round_down(d, p), round_up(d, p)
    assert lo <= d <= hi
    assert (hi - lo).to_fraction() <= Fraction(2) ** (-p) * max(1, abs(d.to_fraction())) * 2 + Fraction(2) ** -p


@settings(max_examples=300)
@given(dyadics, dyadics, dyadics, dyadics, st.sampled_from(["add", "sub", "mul"]), precisions)
def test_arith_contains_exact(a, b, c, d, op, p):
    x, y = iv(a, b), iv(c, d)
    r = arith(op, x, y, p)
    fn = {"add": lambda u, v: u + v, "sub": lambda u, v: u - v, "mul": lambda u, v: u * v}[op]
    for u in (x.lo, x.hi):
        for v in (y.lo, y.hi):
            assert r.lo.to_fraction() <= fn(u.to_fraction(), v.to_fraction()) <= r.hi.to_fraction()


@given(positive, positive, precisions)
def test_div_contains(a, b, p):
    r = div(Interval(a), Interval(b), p)
    assert r.contains(a.to_fraction() / b.to_fraction())


@given(positive, precisions)
def test_sqrt_contains(a, p):
    r = sqrt(Interval(a), p)
    x = a.to_fraction()
    assert r.lo.to_fraction() ** 2 <= x <= r.hi.to_fraction() ** 2


@given(positive, precisions)
def test_root4_and_pow34(a, p):
    x = a.to_fraction()
    r = root4(Interval(a), p)
    assert r.lo.to_fraction() ** 4 <= x <= r.hi.to_fraction() ** 4
    q = pow34(Interval(a), p)
    assert q.lo.to_fraction() ** 4 <= x**3 <= q.hi.to_fraction() ** 4


@given(positive, precisions)
def test_ln_exp_bracket(a, p):
    import math

    r = ln(Interval(a), p)
    v = math.log(float(a))
    assert float(r.lo) <= v + 1e-9 * (1 + abs(v)) and v - 1e-9 * (1 + abs(v)) <= float(r.hi)


def test_ln_exact_points():
    assert ln(Interval(1), 64) == Interval(0)
    with pytest.raises(DomainError):
        ln(Interval(Dyadic(-1), Dyadic(1)), 64)
    with pytest.raises(DomainError):
        sqrt(Interval(-1), 64)


@given(positive, positive)
def test_refinement_monotone(a, b):
    x = iv(a, b)
    for fn in (sqrt, ln):
        coarse, fine = fn(x, 30), fn(x, 90)
        assert coarse.lo <= fine.lo and fine.hi <= coarse.hi


def test_enclose_fractions():
    r = enclose_fractions(Fraction(1, 3), Fraction(2, 3), 20)
    assert r.contains(Fraction(1, 3)) and r.contains(Fraction(2, 3))
    assert r.width().to_fraction() <= Fraction(1, 3) + Fraction(2, 2**20)
