from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oscint.generators import Cell1D, Coeff, MonomialGenerator, OscPolynomial
from oscint.grid import (
    build_grid, gcells, grid_data_of, locus_query, locus_query_detail, monomial_locus,
    nonintegrable_on,
)
from oscint.kernel import CoeffExpr, ExactComplex, LinExponent, PreconditionViolated, Strip
from oscint.validation import (
    LOCUS_STRIP, LOCUS_XS, probe_integrable, random_monomial_sum, random_split_instance,
)

ONE = CoeffExpr.const(1)
fracs = st.fractions(min_value=-3, max_value=3, max_denominator=4)


def _power(lam: LinExponent, f=None) -> MonomialGenerator:
    return MonomialGenerator(Coeff.of(f or ONE), LOCUS_STRIP, lam, 0, OscPolynomial(),
                             Cell1D(ONE, None, 1))


def test_grid_lines_of_single_power():
    # y^s on y > 1 changes type where Re s + 1 crosses the naturals
    g = build_grid(1, [(1, 0)])
    assert g.lines(Strip(-3, 1)) == [-1, 0]
    cells = gcells(g, Strip(-3, 1))
    assert [c.is_line for c in cells] == [False, True, False, True, False]


def test_build_grid_rejects_bad_input():
    with pytest.raises(PreconditionViolated):
        build_grid(0, [(1, 0)])
    with pytest.raises(PreconditionViolated):
        build_grid(1, [])


def test_locus_of_y_power_is_half_strip():
    locus, _ = monomial_locus([_power(LinExponent.s())], LOCUS_STRIP)
    assert locus_query(locus, -1.5 + 0.3j, (0.5,))
    assert not locus_query(locus, -0.5, (0.5,))
    assert not locus_query(locus, -1.0, (0.5,))
    detail = locus_query_detail(locus, -1.5, (0.5,))
    assert detail.member and not detail.numeric_zero


def test_vanishing_coefficient_is_integrable_everywhere():
    f = CoeffExpr.var(0) - CoeffExpr.const(Fraction(1, 2))
    locus, _ = monomial_locus([_power(LinExponent.s(), f)], LOCUS_STRIP)
    assert locus_query(locus, 0.5, (0.5,))
    assert not locus_query(locus, 0.5, (0.25,))


def test_nonintegrable_on_cell():
    g = build_grid(1, [(1, 0)])
    cells = gcells(g, LOCUS_STRIP)
    lam = LinExponent.s()
    flags = [nonintegrable_on(lam, c) for c in cells]
    assert flags[0] is False and all(flags[1:])


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.lists(st.tuples(fracs, fracs), min_size=1, max_size=3),
       st.fractions(0, 1, max_denominator=97))
def test_gcells_partition_the_strip(d, data, t):
    strip = Strip(-2, 1)
    cells = gcells(build_grid(d, data), strip)
    q = strip.p + (strip.q - strip.p) * t
    if strip.contains(q):
        assert sum(c.contains(q) for c in cells) == 1
    for a, b in zip(cells, cells[1:]):
        assert (a.hi if not a.is_line else a.lo) == b.lo


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([1, 2, 3]))
def test_grid_membership_constant_on_cells(seed, case):
    T = random_split_instance(case, np.random.default_rng(seed))
    grid = grid_data_of(T)
    for c in gcells(grid, T.strip):
        assert {grid.membership(q) for q in c.samples(4)} == {c.constraints}


@settings(max_examples=5, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_locus_agrees_with_brute_force(seed):
    gen = np.random.default_rng(seed)
    terms = random_monomial_sum(gen)
    locus, PA = monomial_locus(terms, LOCUS_STRIP)
    for lc in locus.cells:
        s = complex(float(lc.cell.representative()), 0.37)
        if PA.near(s, 1e-3):
            continue
        for x in LOCUS_XS:
            assert locus_query(locus, s, x) == probe_integrable(terms, s, x)


def test_grid_with_constant_exponent_has_no_lines():
    assert not build_grid(1, [(0, Fraction(1, 2))]).lines(Strip(-5, 5))


def test_collision_points_need_equal_phases():
    st_ = Strip(-2, 1)
    cell = Cell1D(CoeffExpr.const(1), None, 0)
    a = MonomialGenerator(Coeff.one(), st_, LinExponent.s(), 0, OscPolynomial(), cell)
    refl = LinExponent(-1, ExactComplex(-2), 1)
    b = MonomialGenerator(Coeff.one(), st_, refl, 0, OscPolynomial(), cell)
    assert monomial_locus([a, b], st_)[1].points == {ExactComplex(-1)}
    c = MonomialGenerator(Coeff.one(), st_, refl, 0, OscPolynomial.linear(), cell)
    assert not monomial_locus([a, c], st_)[1].points
