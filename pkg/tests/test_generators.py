from __future__ import annotations

import cmath
import json
import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scipy import integrate

from oscint.generators import (
    Cell1D, CellChart, Coeff, GeneratorSum, MonomialGenerator, OscPolynomial, PreparedGenerator,
    SeriesVar, StrongSeries, Tail, chart_pushforward, dumps, eval_generator, geometric_series,
    phases_from_polynomial, sum_add, sum_algebra_product, tag_leq, validate_strong_series,
)
from oscint.kernel import (
    CoeffExpr, ExactComplex, LinExponent, MeroCoeff, ParseError, PreconditionViolated, Strip,
)
from oscint.rewrite import fourier_fixed_freq
from oscint.validation import FIXTURES, LOCUS_STRIP, fixture_text, load_fixture, random_monomial_sum

ONE = CoeffExpr.const(1)


@pytest.mark.parametrize("name", FIXTURES)
def test_fixture_roundtrip_is_byte_identical(name):
    text = fixture_text(name)
    assert dumps(GeneratorSum.from_json(json.loads(text)).to_json()) == text


def test_gamma_fixture_matches_quadrature():
    h = load_fixture("gamma_ys")
    s = -1.5 + 0.3j
    with mpmath.workdps(20):
        ref = complex(mpmath.quadosc(lambda y: y ** s * mpmath.expj(y), [1, mpmath.inf], omega=1))
    assert abs(h.evaluate(s) - ref) < 1e-8


def test_indicator_fixture_pointwise():
    h = load_fixture("indicator_pi_2pi")
    assert h.evaluate(0, (), 4.0) == pytest.approx(0.5j)
    assert h.evaluate(0, (), 7.0) == 0


def test_geometric_series_tail_bound():
    v = SeriesVar("y_lower", ONE, 1)
    S = geometric_series(v, Fraction(1, 2), 6, tail_bound=1)
    for y in (2.0, 5.0, 40.0):
        exact = 1 / (1 - 0.5 / y)
        assert abs(S.evaluate(0, (), y) - exact) <= S.error_bound(0, (), y) + 1e-15


def test_monomial_generator_value():
    lam = LinExponent.s().shift(-1)
    T = MonomialGenerator(Coeff.of(CoeffExpr.var(0)), Strip(-2, 1), lam, 1,
                          OscPolynomial.build(1, {1: 1}), Cell1D(ONE, None, 1))
    s, x, y = -0.5 + 1j, (0.3,), 7.0
    ref = 0.3 * cmath.exp((s - 1) * math.log(y)) * math.log(y) * cmath.exp(1j * y)
    assert T.evaluate(s, x, y) == pytest.approx(ref, rel=1e-13)


def test_malformed_json_is_parse_error():
    with pytest.raises(ParseError):
        GeneratorSum.from_json({"kind": "nonsense"})
    obj = json.loads(fixture_text("si"))
    obj["terms"][0]["lam"] = "not an exponent"
    with pytest.raises(ParseError):
        GeneratorSum.from_json(obj)


def test_evaluate_outside_strip_is_refused():
    with pytest.raises(PreconditionViolated):
        load_fixture("gamma_ys").evaluate(0.5)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_product_is_multiplicative_and_tags_monotone(seed):
    gen = np.random.default_rng(seed)
    a = GeneratorSum.make(random_monomial_sum(gen, 2), LOCUS_STRIP, param_dim=1)
    b = GeneratorSum.make(random_monomial_sum(gen, 1), LOCUS_STRIP, param_dim=1)
    p = sum_algebra_product(a, b)
    assert tag_leq(a.class_tag, p.class_tag) and tag_leq(b.class_tag, p.class_tag)
    s, x, y = -0.7 + 0.2j, (0.4,), 3.5
    u = a.evaluate(s, x, y) * b.evaluate(s, x, y)
    assert cmath.isclose(p.evaluate(s, x, y), u, rel_tol=1e-10, abs_tol=1e-300)
    q = sum_add(a, b)
    assert cmath.isclose(q.evaluate(s, x, y), a.evaluate(s, x, y) + b.evaluate(s, x, y),
                         rel_tol=1e-12, abs_tol=1e-300)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_sum_serialization_is_canonical(seed):
    gen = np.random.default_rng(seed)
    h = GeneratorSum.make(random_monomial_sum(gen), LOCUS_STRIP, param_dim=1)
    text = dumps(h.to_json())
    again = GeneratorSum.from_json(json.loads(text))
    assert dumps(again.to_json()) == text
    assert again.evaluate(-0.5, (0.2,), 2.0) == h.evaluate(-0.5, (0.2,), 2.0)


CELL = Cell1D(ONE, None, 0)
WIDE = Strip(-3, 1)


def test_eval_generator_examples():
    T = MonomialGenerator(Coeff.one(), WIDE, LinExponent.s(), 0, OscPolynomial(), CELL)
    assert eval_generator(T, -2, (), 2.0) == pytest.approx(0.25)
    T3 = MonomialGenerator(Coeff.one(), WIDE, LinExponent.const(-2), 1, OscPolynomial.linear(),
                           CELL)
    assert eval_generator(T3, 0, (), math.e) == pytest.approx(math.exp(-2) * cmath.exp(1j * math.e))


def test_chart_pushforward_identity_and_translation():
    T = PreparedGenerator(Coeff.one(), WIDE, phases=phases_from_polynomial(OscPolynomial.linear()),
                          cell=CELL)
    assert chart_pushforward(T, CellChart(CoeffExpr.const(0), 1, 1, CELL)) is T
    c = CoeffExpr.const(Fraction(1, 3))
    R = chart_pushforward(T, CellChart(c, 1, 1, Cell1D(CoeffExpr.const(Fraction(2, 3)), None, 0)))
    assert R.evaluate(0, (), 2.0) == pytest.approx(cmath.exp(1j * (2 + 1 / 3)))


def test_chart_reflection_preserves_integral():
    T = PreparedGenerator(Coeff.one(), WIDE, lam=LinExponent.s(),
                          cell=Cell1D(None, CoeffExpr.const(-1), 0))
    chart = CellChart(CoeffExpr.const(0), -1, 1, CELL)
    R = chart_pushforward(T, chart)
    s = -2.5 + 0.3j
    with mpmath.workdps(20):
        src = complex(mpmath.quad(lambda u: mpmath.power(u, s), [-mpmath.inf, -1]))
    parts = [integrate.quad(lambda y, f=f: f(R.evaluate(s, (), y)), 1, math.inf, epsabs=1e-13)[0]
             for f in (lambda v: v.real, lambda v: v.imag)]
    assert abs(chart.orientation * complex(*parts) - src) < 1e-10


def test_product_examples():
    one = fourier_fixed_freq(load_fixture("indicator_pi_2pi"))
    h = load_fixture("geometric_unit")
    p = sum_algebra_product(h, one)
    assert p.evaluate(0.3, (), 3.0) == pytest.approx(h.evaluate(0.3, (), 3.0), rel=1e-13)
    a = GeneratorSum.make([MonomialGenerator(Coeff.one(), WIDE, LinExponent.s(), 0,
                                             OscPolynomial.linear(), CELL)], WIDE)
    b = GeneratorSum.make([MonomialGenerator(Coeff.one(), WIDE, LinExponent(-1, ExactComplex(1), 1),
                                             0, OscPolynomial.build(1, {2: 1}), CELL)], WIDE)
    (T,) = sum_algebra_product(a, b).terms
    assert T.lam == LinExponent.const(1)
    assert T.Q == OscPolynomial.build(1, {1: 1, 2: 1})


def _half_geometric(order: int, tail: Tail) -> StrongSeries:
    v = SeriesVar("c", ONE, 1)
    terms = {(k,): MeroCoeff.const(Fraction(1, 2) ** k) for k in range(41)}
    return StrongSeries.build((v,), terms, order, tail)


def test_validate_strong_series_examples():
    assert validate_strong_series(StrongSeries.one()).max_violation == 0
    # sum_{k>10} (r/2)^k <= 2 r^11 / (1 - r)
    assert validate_strong_series(_half_geometric(10, Tail.shell(2, 10)), seed=1).passed
    assert not validate_strong_series(_half_geometric(10, Tail.zero()), seed=1).passed
