from __future__ import annotations

import cmath
import dataclasses
import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oscint.asymptotics import (
    OscCoefficient, OscSummand, expand, expansion_uniqueness_check, flat_function_report,
    limit_at_infinity, noncompensation_witness,
)
from oscint.generators import Cell1D, Coeff, GeneratorSum, MonomialGenerator, OscPolynomial
from oscint.kernel import CoeffExpr, LinExponent, Strip
from oscint.validation import LOCUS_STRIP, _sqrt, load_fixture, random_monomial_sum


def test_geometric_expansion_coefficients():
    e = expand(load_fixture("geometric_unit"), 4)
    assert e.scale == [(Fraction(-n - 1), 0) for n in range(4)]
    y = 9.0
    for n, E in enumerate(e.coefficients):
        assert E.evaluate(0, (), y) == pytest.approx(2.0 ** -n * cmath.exp(1j * y), rel=1e-13)


@pytest.mark.parametrize("y", [12.0, 150.0, 3000.0])
def test_si_tail_bounds(y):
    e = expand(load_fixture("si"), 4)
    with mpmath.workdps(30):
        h = float(mpmath.si(y) - mpmath.pi / 2)
    for N in range(5):
        assert abs(h - e.partial(N, (), y)) <= e.tail_bound(N, (), y) + 1e-14 * abs(h)


def test_si_leading_terms():
    # Si(y) - pi/2 = -cos y / y - sin y / y^2 + ... ; checked at y with cos y = 1 and sin y = 1
    e = expand(load_fixture("si"), 3)
    a = e.coefficients[0].evaluate(0, (), 2 * math.pi)
    b = e.coefficients[1].evaluate(0, (), 2 * math.pi + math.pi / 2)
    assert a == pytest.approx(-1, abs=1e-12) and b == pytest.approx(-1, abs=1e-12)


def test_expansion_is_unique_under_recomputation():
    h = load_fixture("si")
    assert expansion_uniqueness_check(expand(h, 3), expand(h, 3)).passed
    rep = expansion_uniqueness_check(expand(h, 3), expand(load_fixture("geometric_unit"), 3))
    assert not rep.passed and rep.first_discrepancy is not None


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([Fraction(-3, 2), Fraction(-1, 3), 0]))
def test_scale_is_strictly_decreasing(seed, s):
    gen = np.random.default_rng(seed)
    h = GeneratorSum.make(random_monomial_sum(gen), LOCUS_STRIP, param_dim=1)
    e = expand(h, 3, s=s)
    assert all(a > b for a, b in zip(e.scale, e.scale[1:]))
    x, y = (0.3,), 1e3
    if e.tail_bound(len(e.coefficients), x, y) == 0.0:
        assert e.partial(len(e.coefficients), x, y) == pytest.approx(
            h.evaluate(complex(s), x, y), rel=1e-9, abs=1e-300)


def test_limit_of_x_times_eiy():
    lim = limit_at_infinity(load_fixture("x1_eiy"))
    for x1 in (0.0, 0.5, -3.0):
        assert lim.f.evaluate(0, (x1,)) == pytest.approx(x1 * x1)
        assert lim.g.evaluate(0, (x1,)) == 0
    assert lim.exists_at((0.0,)) and not lim.exists_at((1.0,))


def test_noncompensation_witness_found():
    # e^{iy} - e^{2iy} does not tend to zero; a witness must exist
    E = OscCoefficient.make([
        OscSummand(Coeff.one(), Fraction(0), OscPolynomial.build(1, {1: 1})),
        OscSummand(Coeff.of(CoeffExpr.const(-1)), Fraction(0), OscPolynomial.build(1, {1: 2})),
    ])
    w = noncompensation_witness(E, eps=0.5)
    assert w.found and abs(E.evaluate(0, (), w.y)) > 0.5


def test_flat_function_has_no_power_log_expansion():
    e = flat_function_report(lambda y: math.exp(-y))
    assert e.coefficients == [] and e.diagnostics
    assert not flat_function_report(lambda y: 1 / y).diagnostics


def test_expand_of_a_constant():
    st_ = Strip(-1, 1)
    one = MonomialGenerator(Coeff.one(), st_, LinExponent.const(0), 0, OscPolynomial(),
                            Cell1D(CoeffExpr.const(1), None, 0))
    e = expand(GeneratorSum.make([one], st_), 3)
    assert e.scale == [(0, 0)]
    assert e.coefficients[0].evaluate(0, (), 5.0) == pytest.approx(1)
    assert e.tail_bound(1, (), 5.0) == 0


def test_limit_of_constant_plus_decaying_wave():
    st_ = Strip(-1, 1)
    cell = Cell1D(CoeffExpr.const(1), None, 0)
    h = GeneratorSum.make([
        MonomialGenerator(Coeff.of(CoeffExpr.const(2)), st_, LinExponent.const(0), 0,
                          OscPolynomial(), cell),
        MonomialGenerator(Coeff.one(), st_, LinExponent.const(-1), 0, OscPolynomial.linear(), cell),
    ], st_)
    L = limit_at_infinity(h)
    assert L.f.evaluate(0, ()) == 0
    assert L.g.evaluate(0, ()) == pytest.approx(2)


def test_witness_examples():
    lin = OscPolynomial.linear()
    assert noncompensation_witness(OscCoefficient.simple(Coeff.one(), 0, lin), eps=0.9).found
    zero = OscCoefficient.make([OscSummand(Coeff.one(), Fraction(0), lin),
                                OscSummand(Coeff.of(CoeffExpr.const(-1)), Fraction(0), lin)])
    assert zero.is_zero()
    assert not noncompensation_witness(zero, eps=0.5).found
    two = OscCoefficient.make([OscSummand(Coeff.one(), Fraction(0), lin),
                               OscSummand(Coeff.one(), Fraction(0),
                                          OscPolynomial.build(1, {1: _sqrt(2)}))])
    w = noncompensation_witness(two, eps=1.9)
    assert w.found and abs(w.value) >= 1.9


def test_uniqueness_padding_and_perturbation():
    e = expand(load_fixture("geometric_unit"), 3)
    pad = dataclasses.replace(e, scale=e.scale + [(Fraction(-9), 0)],
                              coefficients=e.coefficients + [OscCoefficient()])
    assert expansion_uniqueness_check(e, pad).passed
    bump = OscSummand(Coeff.of(CoeffExpr.const(Fraction(1, 1000))), Fraction(0),
                      OscPolynomial.linear())
    P = OscCoefficient.make(list(e.coefficients[0].summands) + [bump])
    rep = expansion_uniqueness_check(e, dataclasses.replace(e, coefficients=[P] + e.coefficients[1:]))
    assert not rep.passed and rep.first_discrepancy["index"] == 0
