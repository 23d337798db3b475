from __future__ import annotations

import cmath
import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scipy import integrate

from oscint.generators import (
    Cell1D, Coeff, GeneratorSum, MonomialGenerator, OscPolynomial, PreparedGenerator, SeriesVar,
    StrongSeries, TCellData, TranscendentalElement, geometric_series, phases_from_polynomial,
)
from oscint.kernel import (
    CoeffExpr, Divergent, ExactComplex, LinExponent, PreconditionViolated, Strip,
)
from oscint.rewrite import (
    PowerLogAntiderivative, extend_sum, fourier_fixed_freq, full_fourier, ibp_reduce_t,
    ibp_strip_extend, integrate_monomial, integrate_strongly_integrable, integrate_sum,
    invert_phase_series, mellin_transform, powerlog_integral, split_prepared, split_sum,
)
from oscint.validation import (
    LOCUS_STRIP, load_fixture, random_monomial_sum, random_split_instance,
)


def _quadosc(f, a):
    with mpmath.workdps(20):
        return complex(mpmath.quadosc(f, [a, mpmath.inf], omega=1))


def test_powerlog_integral_closed_form():
    # over [1, e]: y (log y - 1) gives 1 for w = 1, (log y)^2 / 2 gives 1/2 for w = 0
    assert powerlog_integral(1, 1, 1.0, math.e) == pytest.approx(1.0)
    assert powerlog_integral(0, 1, 1.0, math.e) == pytest.approx(0.5)
    F = PowerLogAntiderivative(2 + 1j, 2)
    y, h = 3.0, 1e-5
    deriv = (F(y + h) - F(y - h)) / (2 * h)
    assert deriv == pytest.approx(y ** (1 + 1j) * math.log(y) ** 2, rel=1e-8)


def test_powerlog_symbolic_matches_numeric():
    lam = LinExponent.s()
    c = powerlog_integral(lam, 1, 1.0, 2.0)
    s = 0.3 + 0.5j
    ref = complex(mpmath.quad(lambda y: y ** (s - 1) * mpmath.log(y), [1, 2]))
    assert c.evaluate(s, ()) == pytest.approx(ref, rel=1e-12)


def test_fourier_of_indicator_is_one():
    r = fourier_fixed_freq(load_fixture("indicator_pi_2pi"))
    assert r.evaluate(0.0) == pytest.approx(1, abs=1e-12)


def test_full_fourier_at_exact_frequency():
    h = load_fixture("mellin_interval")
    t = Fraction(1, 3)
    r = full_fourier(h, t)
    ref = complex(mpmath.quad(lambda y: mpmath.expj(-2 * mpmath.pi * t * y), [1, 2]))
    assert r.evaluate(0.0) == pytest.approx(ref, abs=1e-12)


@pytest.mark.parametrize("s", [-1.9, -1.5, -1.1 + 0.5j])
def test_strip_extension_agrees_on_the_original_strip(s):
    ext, traces = extend_sum(load_fixture("gamma_ys"), Strip(-2, 1))
    assert traces[0].steps == 2
    ref = _quadosc(lambda y: y ** s * mpmath.expj(y), 1)
    assert abs(ext.evaluate(s) - ref) < 1e-8


def test_strip_extension_continues_the_identity():
    ext, _ = extend_sum(load_fixture("gamma_ys"), Strip(-2, 1))
    s = 0.5 + 2j
    red = _quadosc(lambda y: y ** (s - 2) * mpmath.expj(y), 1)
    e1 = cmath.exp(1j)
    assert abs(ext.evaluate(s) - (1j * e1 - s * e1 - s * (s - 1) * red)) < 1e-8


def test_mellin_closed_forms():
    m = mellin_transform(load_fixture("mellin_interval"))
    assert abs(m.h.evaluate(0) - math.log(2)) < 1e-12
    assert m.h.evaluate(1.5) == pytest.approx((2 ** 1.5 - 1) / 1.5, rel=1e-13)
    m2 = mellin_transform(load_fixture("mellin_inverse_square"))
    assert m2.h.poles.contains(ExactComplex(2))
    assert m2.h.evaluate(-1 + 3j) == pytest.approx(1 / (3 - 3j), rel=1e-13)


def test_ibp_reduce_t_preserves_value():
    gen = np.random.default_rng(7)
    T = random_split_instance(1, gen)
    r = ibp_reduce_t(T, 1)
    s, y = -0.8 + 0.3j, 3.0
    exact = T.evaluate(s, (), y)
    tol = r.h.error_bound(s, (), y) + T.error_bound(s, (), y) + 1e-9
    assert abs(r.h.evaluate(s, (), y) - exact) <= tol


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([1, 2, 3]))
def test_split_sum_of_parts_matches_input(seed, case):
    gen = np.random.default_rng(seed)
    T = random_split_instance(case, gen)
    r = split_prepared(T)
    s = complex(gen.uniform(-1.4, 0.4), gen.uniform(-1, 1))
    if (r.poles_out | T.all_poles()).near(s, 1e-3):
        return
    y = float(gen.uniform(1.5, 30))
    exact = T.evaluate(s, (), y)
    tol = r.error_bound(s, (), y) + T.error_bound(s, (), y) + 1e-9 * (1 + abs(exact))
    assert abs(r.evaluate(s, (), y) - exact) <= tol


def test_split_sum_merges_a_sum():
    gen = np.random.default_rng(3)
    h = GeneratorSum.make(random_monomial_sum(gen, 2), LOCUS_STRIP, param_dim=1)
    r = split_sum(h)
    assert abs(r.evaluate(-0.4, (0.3,), 2.5) - h.evaluate(-0.4, (0.3,), 2.5)) < 1e-12


def test_integrate_sum_of_power_against_oracle():
    r = integrate_sum(load_fixture("ys_eiy"))
    assert not r.H.poles.points
    s = -1.2 + 0.4j
    assert abs(r.H.evaluate(s) - _quadosc(lambda y: y ** s * mpmath.expj(y), 1)) < 1e-8


def test_fourier_needs_integrable_input():
    with pytest.raises((PreconditionViolated, Divergent)):
        fourier_fixed_freq(load_fixture("x1_eiy"))


ONE = CoeffExpr.const(1)
RAY = Cell1D(ONE, None, 0)
# int_1^inf y^-2 e^{iy} dy = E_2(-i), mpmath expint at 30 digits
EXPINT2 = complex(-0.0844109505595738868890317703736, 0.504067061906928371989856117741)


def _one_term(T, strip):
    return GeneratorSum.make([T], strip)


def test_powerlog_integral_tail_cases():
    assert powerlog_integral(-1, 0, 1.0, None) == pytest.approx(1.0)
    assert powerlog_integral(-3, 1, 1.0, None) == pytest.approx(1 / 9)
    with pytest.raises(Divergent):
        powerlog_integral(0, 0, 1.0, None)
    assert powerlog_integral(LinExponent.s(), 0, 1.0, 2.0).evaluate(0, ()) == pytest.approx(
        math.log(2))


def test_mellin_of_log_on_unit_interval():
    st_ = Strip(-10, 10)
    T = PreparedGenerator(Coeff.one(), st_, mu=1, cell=Cell1D(ONE, CoeffExpr.sym("e"), 0))
    assert mellin_transform(_one_term(T, st_)).h.evaluate(1) == pytest.approx(1, abs=1e-13)


def test_fourier_fixed_freq_examples():
    st_ = Strip(-1, 1)
    T = PreparedGenerator(Coeff.one(), st_, cell=Cell1D(CoeffExpr.const(0), ONE, 0))
    assert fourier_fixed_freq(_one_term(T, st_)).evaluate(0) == pytest.approx(
        (cmath.exp(1j) - 1) / 1j, abs=1e-14)
    st2 = Strip(-3, -1)
    T2 = PreparedGenerator(Coeff.one(), st2, lam=LinExponent.s(), cell=RAY)
    assert abs(fourier_fixed_freq(_one_term(T2, st2)).evaluate(-2) - EXPINT2) < 1e-10


def test_full_fourier_of_indicators():
    st_ = Strip(-1, 1)
    sym = _one_term(PreparedGenerator(Coeff.one(), st_, cell=Cell1D(CoeffExpr.const(-1), ONE, 0)),
                    st_)
    assert abs(full_fourier(sym, Fraction(1, 2)).evaluate(0)) < 1e-14
    ref = math.sin(2 * math.pi / 3) / (math.pi / 3)
    assert full_fourier(sym, Fraction(1, 3)).evaluate(0) == pytest.approx(ref, abs=1e-14)
    box = PreparedGenerator(Coeff.one(), st_, cell=Cell1D(ONE, CoeffExpr.const(3), 0))
    assert full_fourier(_one_term(box, st_), 0).evaluate(0) == pytest.approx(2, abs=1e-14)


def test_ibp_strip_extend_examples():
    te = TranscendentalElement(TCellData(ONE), LinExponent.s(), 0, StrongSeries.one(), 1)
    assert ibp_strip_extend(te, Strip(-3, -1)).steps == 0
    te1 = TranscendentalElement(TCellData(ONE), LinExponent.s(), 1, StrongSeries.one(), 1)
    tr = ibp_strip_extend(te1, Strip(-2, 0))
    assert tr.steps == 1
    ref = _quadosc(lambda y: y ** -1.5 * mpmath.log(y) * mpmath.expj(y), 1)
    assert abs(tr.evaluate(-1.5) - ref) < 1e-10


@pytest.mark.parametrize("rho", [Fraction(-3, 2), Fraction(-2), Fraction(-5, 2)])
@pytest.mark.parametrize("k0", [0, 1, 2, 3])
def test_ibp_reduce_t_step_count(rho, k0):
    te = TranscendentalElement(TCellData(ONE, alpha=1), LinExponent.const(rho), 0,
                               StrongSeries.one(), 1)
    T = PreparedGenerator(Coeff.one(), Strip(-1, 1), lam=LinExponent.s().shift(-2), gamma=te,
                          cell=RAY)
    r = ibp_reduce_t(T, k0)
    assert r.trace.steps == max(0, math.floor(rho) + k0 + 1)
    s, y = 0.3 + 0.2j, 2.5
    assert abs(r.h.evaluate(s, (), y) - T.evaluate(s, (), y)) < 1e-12


def test_split_prepared_examples():
    st_ = Strip(-2, 1)
    lin = phases_from_polynomial(OscPolynomial.linear())
    bounded = PreparedGenerator(Coeff.one(), st_, lam=LinExponent.s(), phases=lin,
                                cell=Cell1D(ONE, CoeffExpr.const(3), 0))
    r = split_prepared(bounded)
    assert (len(r.monomial), len(r.strongly_integrable)) == (0, 1)
    M = MonomialGenerator(Coeff.one(), st_, LinExponent.s(), 0, OscPolynomial.linear(), RAY)
    assert split_prepared(M).monomial == [M]
    Phi = geometric_series(SeriesVar("y_lower", ONE, 1), Fraction(1, 2), 12, tail_bound=2)
    G = PreparedGenerator(Coeff.one(), st_, lam=LinExponent.s(), phases=lin, cell=RAY, series=Phi)
    r = split_prepared(G)
    assert sorted(str(T.lam) for T in r.monomial) == sorted([str(LinExponent.s()),
                                                             str(LinExponent.s().shift(-1))])
    s, y = -0.3 + 0.4j, 3.0
    exact = y ** s * cmath.exp(1j * y) / (1 - 0.5 / y)
    assert abs(r.evaluate(s, (), y) - exact) <= r.error_bound(s, (), y)


def test_invert_phase_series_examples():
    sq = invert_phase_series(OscPolynomial.build(1, {2: 1}), 6)
    assert (sq.c.evaluate(), sq.n, sq.d, sq.exact) == (1, 2, 1, True)
    assert invert_phase_series(OscPolynomial.build(1, {1: 2}), 6).c.evaluate() == 0.5
    # y + y^{1/2}
    mixed = invert_phase_series(OscPolynomial.build(2, {2: 1, 1: 1}), 6)
    assert [e.evaluate(0, ()) for e in mixed.eps2][:3] == pytest.approx([1, -1, 0.5])
    assert mixed.residual((), 1e2) < 1e-7
    assert mixed.residual((), 1e4) < 1e-12


def test_integrate_monomial_examples():
    st_ = Strip(-2, 1)
    M = MonomialGenerator(Coeff.one(), st_, LinExponent.s(), 0, OscPolynomial.linear(), RAY)
    mi = integrate_monomial(M)
    s = -1.5 + 0.3j
    assert abs(mi.H.evaluate(s) - _quadosc(lambda y: y ** s * mpmath.expj(y), 1)) < 1e-9
    assert mi.trace.steps == 2
    sq = integrate_monomial(MonomialGenerator(Coeff.one(), st_, LinExponent.s(), 0,
                                              OscPolynomial.build(1, {2: 1}), RAY))
    s = -0.5 + 0.3j
    ref = 0.5 * _quadosc(lambda z: z ** ((s - 1) / 2) * mpmath.expj(z), 1)
    assert abs(sq.H.evaluate(s) - ref) < 1e-9


def test_integrate_strongly_integrable_examples():
    st_ = Strip(-2, 1)
    T = PreparedGenerator(Coeff.one(), st_, lam=LinExponent.s(), mu=1,
                          cell=Cell1D(ONE, CoeffExpr.const(3), 0))
    ref = complex(mpmath.quad(lambda y: y ** 0.5 * mpmath.log(y), [1, 3]))
    assert integrate_strongly_integrable(T).evaluate(0.5) == pytest.approx(ref, rel=1e-12)
    S = split_prepared(random_split_instance(1, np.random.default_rng(11))).strongly_integrable[0]
    s = -0.7 + 0.2j
    parts = [integrate.quad(lambda y, f=f: f(S.evaluate(s, (), y)), 1, np.inf, limit=400,
                            epsabs=1e-10)[0] for f in (lambda v: v.real, lambda v: v.imag)]
    assert abs(integrate_strongly_integrable(S).evaluate(s) - complex(*parts)) < 1e-8
