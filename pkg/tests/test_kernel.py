from __future__ import annotations

import cmath
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from oscint.kernel import (
    CoeffExpr, DomainError, ExactComplex, LinExponent, MeroCoeff, ParseError, PoleHit, PoleSet, Poly,
    PreconditionViolated, Ray, Strip, eval_mero, exponent_real_part, poleset_union,
)

small = st.fractions(min_value=-5, max_value=5, max_denominator=6)
ints = st.integers(-4, 4)


@st.composite
def exponents(draw):
    return LinExponent(draw(ints), ExactComplex(draw(small), draw(small)), draw(st.integers(1, 3)))


@st.composite
def pole_sets(draw):
    pts = draw(st.lists(st.builds(ExactComplex, small, small), max_size=3))
    rays = draw(st.lists(st.builds(Ray, st.builds(ExactComplex, small, small),
                                   st.sampled_from([Fraction(1), Fraction(1, 2), Fraction(2)])),
                         max_size=2))
    return PoleSet.of(pts, rays)


@st.composite
def linear_meros(draw):
    root = ExactComplex(draw(small), draw(small))
    num = Poly((ExactComplex(draw(small), 0), ExactComplex(draw(small), 1)))
    den = Poly((-root, ExactComplex(1)))
    return MeroCoeff(num, den, CoeffExpr.var(0) + 2)


def test_exact_complex_arithmetic():
    a = ExactComplex(Fraction(1, 2), 1)
    assert a * a == ExactComplex(Fraction(-3, 4), 1)
    assert ExactComplex.coerce("1/2") == ExactComplex(Fraction(1, 2))
    assert complex(a) == 0.5 + 1j


def test_strip_membership():
    st_ = Strip(-1, 1)
    assert st_.contains(0) and not st_.contains(1) and not st_.contains(-1)
    assert Strip(-2, 2).contains_strip(st_)
    with pytest.raises(PreconditionViolated):
        Strip(1, -1)


def test_linexponent_evaluation_and_solve():
    lam = LinExponent(2, ExactComplex(Fraction(1, 3), 1), 3)
    assert lam(1 + 1j) == pytest.approx((2 * (1 + 1j) + (1 / 3 + 1j)) / 3)
    assert lam.real_part(Fraction(1, 2)) == Fraction(4, 9)
    root = lam.solve(-1)
    assert lam(complex(root)) == pytest.approx(-1)


def test_poly_roots_and_mero_poles():
    m = MeroCoeff(Poly.const(1), Poly.from_exponent(LinExponent(1, ExactComplex(-2), 1)))
    assert m.poles().points == frozenset({ExactComplex(2)})
    assert eval_mero(m, 0.5) == pytest.approx(1 / (0.5 - 2))


def test_poleset_rays():
    P = PoleSet.of([ExactComplex(1)], [Ray(ExactComplex(0), 1)])
    assert P.contains(ExactComplex(-3)) and P.contains(ExactComplex(1))
    assert not P.contains(ExactComplex(Fraction(1, 2)))
    assert P.near(-2.0 + 1e-12j)


def test_coeff_expr_roundtrip_and_domain():
    e = (CoeffExpr.var(0) * 2 + 1).pow(Fraction(1, 2))
    assert e.evaluate((4.0,)) == pytest.approx(3.0)
    assert CoeffExpr.from_json(e.to_json()) == e
    with pytest.raises(DomainError):
        CoeffExpr.var(0).log().evaluate((-1.0,))
    with pytest.raises(ParseError):
        CoeffExpr.sym("nope")


def test_cis_of_pi_multiple_folds():
    assert CoeffExpr.sym("pi").cis().evaluate() == pytest.approx(-1)


@given(exponents(), small, small, st.fractions(0, 1, max_denominator=7))
def test_exponent_real_part_is_affine(lam, a, b, t):
    mid = t * a + (1 - t) * b
    assert exponent_real_part(lam, mid) == (t * exponent_real_part(lam, a)
                                           + (1 - t) * exponent_real_part(lam, b))


@given(exponents(), st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
def test_exponent_real_part_matches_float(lam, s):
    assert float(exponent_real_part(lam, Fraction(s.real))) == pytest.approx(
        lam(complex(float(Fraction(s.real)), s.imag)).real, abs=1e-9)


@given(pole_sets(), pole_sets(), st.builds(ExactComplex, small, small))
def test_poleset_union_is_monotone(p1, p2, z):
    u = poleset_union(p1, p2)
    if p1.contains(z) or p2.contains(z):
        assert u.contains(z)
    for q in p1.points | p2.points:
        assert u.contains(q)


@settings(max_examples=50)
@given(linear_meros(), linear_meros(),
       st.complex_numbers(max_magnitude=6, allow_nan=False, allow_infinity=False),
       st.floats(0, 1))
def test_eval_mero_is_multiplicative(a, b, s, x):
    P = a.poles() | b.poles()
    if P.near(s, 1e-3):
        return
    prod = eval_mero(a * b, s, (x,))
    ref = eval_mero(a, s, (x,)) * eval_mero(b, s, (x,))
    assert cmath.isclose(prod, ref, rel_tol=1e-9, abs_tol=1e-12)


@given(st.floats(0.1, 5), st.integers(0, 3))
def test_coeff_expr_evaluation_is_deterministic(x, k):
    e = (CoeffExpr.var(0).log() * k + CoeffExpr.var(0).pow(Fraction(1, 3))).exp()
    assert e.evaluate((x,)) == e.evaluate((x,))
    assert e.evaluate((x,)) == pytest.approx(math.exp(k * math.log(x) + x ** (1 / 3)))


S_POLY = Poly.from_exponent(LinExponent.s())


def test_eval_mero_examples():
    inv_s = MeroCoeff(Poly.const(1), S_POLY)
    assert eval_mero(inv_s, 2) == 0.5
    with pytest.raises(PoleHit):
        eval_mero(inv_s, 0)
    c = MeroCoeff(S_POLY, Poly.const(1), CoeffExpr.var(0).pow(Fraction(1, 2)))
    assert eval_mero(c, 1 + 1j, (4,)) == pytest.approx(2 + 2j)


@pytest.mark.parametrize("ell,eta,d,re_s,expected", [
    (1, 0, 1, -2, -2), (2, -1, 3, 1, Fraction(1, 3)), (0, Fraction(-5, 2), 2, 7, Fraction(-5, 4))])
def test_exponent_real_part_examples(ell, eta, d, re_s, expected):
    assert exponent_real_part(LinExponent(ell, ExactComplex(eta), d), re_s) == expected


def test_poleset_union_examples():
    z, m1, m2 = ExactComplex(0), ExactComplex(-1), ExactComplex(-2)
    assert poleset_union(PoleSet.of([z]), PoleSet.of([m1])).points == {z, m1}
    ray = Ray(m1, 1)
    assert poleset_union(PoleSet.of(), PoleSet.of([], [ray])) == PoleSet.of([], [ray])
    absorbed = poleset_union(PoleSet.of([m2]), PoleSet.of([], [ray]))
    assert not absorbed.points and absorbed.rays == {ray}
