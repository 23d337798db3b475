"""Grids over strips, their cell partitions and integration loci.

A grid of denominator d with data (l_i, r_i) cuts a strip along the
vertical lines where l_i Re(s) + r_i + d is a nonnegative integer.  For a
monomial y^{(l s + r)/d} the first line is exactly Re(lambda) = -1, so on
every grid cell each monomial is either integrable at infinity for all s
or for none.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .generators import Coeff, MonomialGenerator, PreparedGenerator
from .kernel import (
    EMPTY_POLES, ExactComplex, LinExponent, PoleExcluded, PoleSet, PreconditionViolated,
    Strip, ceil_frac, floor_frac, frac, rat_str,
)

ZERO_TOL = 1e-9


@dataclass(frozen=True)
class Grid:
    d: int
    data: tuple  # ((l, r), ...) as Fractions

    def value(self, i: int, re_s) -> Fraction:
        l, r = self.data[i]
        return l * frac(re_s) + r + self.d

    def membership(self, re_s) -> frozenset:
        """The sets Xi_{i,j,*} containing Re(s) = re_s: (i, j, '-') or (i, j, 'o')."""
        out = set()
        for i in range(len(self.data)):
            v = self.value(i, re_s)
            if v < 0:
                out.add((i, 0, "o"))
            elif v.denominator == 1:
                out.add((i, int(v) + 1, "-"))
            else:
                out.add((i, math.floor(v) + 1, "o"))
        return frozenset(out)

    def lines(self, strip: Strip) -> list[Fraction]:
        """Abscissae strictly inside the strip where some value is a natural number."""
        pts = set()
        for l, r in self.data:
            if l == 0:
                continue
            vp, vq = l * strip.p + r + self.d, l * strip.q + r + self.d
            lo, hi = min(vp, vq), max(vp, vq)
            for n in range(max(0, ceil_frac(lo)), floor_frac(hi) + 1):
                x = (n - r - self.d) / l
                if strip.p < x < strip.q:
                    pts.add(x)
        return sorted(pts)

    def to_json(self):
        return {"d": self.d, "data": [[rat_str(l), rat_str(r)] for l, r in self.data]}


def build_grid(d: int, data: Iterable) -> Grid:
    if int(d) < 1:
        raise PreconditionViolated("grid denominator must be >= 1")
    items = tuple((frac(l), frac(r)) for l, r in data)
    if not items:
        raise PreconditionViolated("grid data must be nonempty")
    return Grid(int(d), items)


def grid_data_of(T: PreparedGenerator) -> Grid:
    """Grid data of a prepared generator (denominator d^2)."""
    lam = T.lam
    if T.gamma is None:
        return build_grid(lam.d, [(lam.ell, lam.eta.re)])
    rho, tc = T.gamma.rho, T.gamma.tcell
    d = math.lcm(lam.d, rho.d, tc.d)
    lam, rho = lam.with_denominator(d), rho.with_denominator(d)
    scale = Fraction(d, tc.d)  # alpha/tc.d = (alpha*scale)/d
    data = []
    for delta in sorted({0, tc.alpha * scale, tc.beta * scale}):
        data.append((d * lam.ell + delta * rho.ell, d * lam.eta.re + delta * rho.eta.re))
    return build_grid(d * d, data)


@dataclass(frozen=True)
class GCell:
    """An open substrip (lo, hi) or the vertical line Re(s) = lo (hi None)."""

    lo: Fraction
    hi: Fraction | None
    constraints: frozenset = frozenset()

    @property
    def is_line(self) -> bool:
        return self.hi is None

    def contains(self, re_s) -> bool:
        re_s = frac(re_s)
        if self.is_line:
            return re_s == self.lo
        return self.lo < re_s < self.hi

    def representative(self) -> Fraction:
        return self.lo if self.is_line else (self.lo + self.hi) / 2

    def samples(self, n: int) -> list[Fraction]:
        if self.is_line:
            return [self.lo] * n
        w = self.hi - self.lo
        return [self.lo + w * Fraction(k + 1, n + 1) for k in range(n)]

    def label(self) -> str:
        if self.is_line:
            return f"Re s = {rat_str(self.lo)}"
        return f"{rat_str(self.lo)} < Re s < {rat_str(self.hi)}"

    def to_json(self):
        return {"kind": "line" if self.is_line else "open", "lo": rat_str(self.lo),
                "hi": None if self.hi is None else rat_str(self.hi),
                "constraints": sorted([i, j, k] for i, j, k in self.constraints)}


def gcells(grid: Grid, strip: Strip) -> list[GCell]:
    """The partition of the strip into grid cells, left to right."""
    pts = grid.lines(strip)
    bounds = [strip.p] + pts + [strip.q]
    cells = []
    for k in range(len(bounds) - 1):
        lo, hi = bounds[k], bounds[k + 1]
        cells.append(GCell(lo, hi, grid.membership((lo + hi) / 2)))
        if k + 1 < len(bounds) - 1:
            cells.append(GCell(hi, None, grid.membership(hi)))
    return cells


def nonintegrable_on(lam: LinExponent, cell: GCell) -> bool:
    """Re(lam(s)) >= -1 on the cell (constant on grid cells of lam's grid)."""
    r = lam.real_part(cell.representative())
    return r >= -1


# ---------------------------------------------------------------------------
# loci

@dataclass
class LocusCell:
    cell: GCell
    J: tuple  # indices of the functions that must vanish

    @property
    def full(self) -> bool:
        return not self.J

    def to_json(self):
        return {"cell": self.cell.to_json(), "J": list(self.J), "full": self.full}


@dataclass
class Locus:
    strip: Strip
    cells: list
    functions: tuple          # Coeff f_j
    excluded: PoleSet = EMPTY_POLES
    advisory: bool = False    # inexact data: the grid is only numerically exact

    def cell_of(self, re_s) -> LocusCell:
        for c in self.cells:
            if c.cell.contains(re_s):
                return c
        raise PreconditionViolated(f"Re(s) = {re_s} is outside the strip")

    def to_json(self):
        return {"strip": self.strip.to_json(), "cells": [c.to_json() for c in self.cells],
                "excluded": self.excluded.to_json(), "advisory": self.advisory,
                "functions": [f.to_json() for f in self.functions]}

    def table(self) -> str:
        rows = [f"{'cell':<28} J_S"]
        for c in self.cells:
            rows.append(f"{c.cell.label():<28} {'FULL' if c.full else list(c.J)}")
        pts = ", ".join(str(p) for p in self.excluded.finite_points_in(self.strip))
        rows.append(f"collision/excluded poles: {pts or 'none'}")
        return "\n".join(rows)


def _monomial_key(T: MonomialGenerator):
    D = math.lcm(T.lam.d, T.Q.d)
    return (T.lam, T.mu, tuple(sorted((k, repr(c)) for k, c in T.Q.with_denominator(D).items())))


def monomial_locus(terms: Sequence[MonomialGenerator], strip: Strip,
                   P: PoleSet = EMPTY_POLES) -> tuple[Locus, PoleSet]:
    """Integration locus of a sum of monomial generators on a cell with
    unbounded fibers, and the pole set P_A enlarged by exponent collisions."""
    terms = list(terms)
    if not terms:
        raise PreconditionViolated("locus of an empty sum")
    keys = [_monomial_key(T) for T in terms]
    if len(set(keys)) != len(keys):
        raise PreconditionViolated("monomial data tuples must be pairwise distinct")
    for T in terms:
        if T.cell.upper is not None:
            raise PreconditionViolated("monomial locus needs unbounded y-fibers")
    D = 1
    for T in terms:
        D = math.lcm(D, T.lam.d)
    lams = [T.lam.with_denominator(D) for T in terms]
    grid = build_grid(D, [(l.ell, l.eta.re) for l in lams])
    cells = []
    for c in gcells(grid, strip):
        J = tuple(j for j, T in enumerate(terms) if nonintegrable_on(T.lam, c))
        cells.append(LocusCell(c, J))
    PA = P
    for i in range(len(terms)):
        for j in range(i + 1, len(terms)):
            if keys[i][1:] != keys[j][1:] or not terms[i].Q.same_as(terms[j].Q):
                continue
            li, lj = lams[i], lams[j]
            if li.ell == lj.ell:
                continue
            s0 = (lj.eta - li.eta) / ExactComplex(li.ell - lj.ell)
            PA = PA | PoleSet.of([s0])
    for T in terms:
        PA = PA | T.all_poles()
    advisory = any(l.inexact for l in lams)
    return Locus(strip, cells, tuple(T.coeff for T in terms), PA, advisory), PA


@dataclass
class LocusAnswer:
    member: bool
    numeric_zero: bool
    cell: str
    values: list = field(default_factory=list)


def locus_query_detail(locus: Locus, s, x: Sequence[float] = ()) -> LocusAnswer:
    s = ExactComplex.coerce(s)
    if locus.excluded.near(complex(s)):
        raise PoleExcluded(f"s = {complex(s)} is an excluded pole")
    lc = locus.cell_of(s.re)
    vals = [locus.functions[j].evaluate(complex(s), tuple(x)) for j in lc.J]
    zero = all(abs(v) <= ZERO_TOL for v in vals)
    nz = zero and any(v != 0 for v in vals)
    return LocusAnswer(zero, nz, lc.cell.label(), [abs(v) for v in vals])


def locus_query(locus: Locus, s, x: Sequence[float] = ()) -> bool:
    return locus_query_detail(locus, s, x).member
