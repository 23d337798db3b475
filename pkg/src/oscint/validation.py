"""Validation suites run by ``oscint validate``.

Every suite compares a symbolic result with an independent numeric route
(quadrature, special functions or brute-force probing) on fixtures and on
seeded random instances.  Suites are pure functions of their seed, so the
report is reproducible byte for byte.
"""

from __future__ import annotations

import cmath
import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Callable

import mpmath
import numpy as np

from . import numeric
from .asymptotics import expand, limit_at_infinity
from .generators import (
    Cell1D, Coeff, GeneratorSum, MonomialGenerator, OscPolynomial, PreparedGenerator,
    SeriesVar, StrongSeries, TCellData, TranscendentalElement, dumps, sum_algebra_product,
    tag_leq,
)
from .grid import gcells, grid_data_of, locus_query, monomial_locus
from .kernel import CoeffExpr, ExactComplex, LinExponent, MeroCoeff, OscintError, Strip
from .rewrite import (
    extend_sum, fourier_fixed_freq, integrate_sum, mellin_transform, split_prepared,
)

FIXTURES = ("indicator_pi_2pi", "gamma_ys", "si", "geometric_unit", "mellin_interval",
            "mellin_inverse_square", "x1_eiy", "ys_eiy")

_ONE = CoeffExpr.const(1)


def fixture_text(name: str) -> str:
    if not name.endswith(".json"):
        name += ".json"
    node = resources.files("oscint").joinpath("fixtures")
    for part in name.split("/"):
        node = node.joinpath(part)
    return node.read_text(encoding="utf-8")


def load_fixture(name: str) -> GeneratorSum:
    import json
    return GeneratorSum.from_json(json.loads(fixture_text(name)))


# ---------------------------------------------------------------------------
# reports

@dataclass
class SuiteResult:
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def to_json(self):
        return {"name": self.name, "passed": self.passed, "details": _jsonable(self.details)}


@dataclass
class ValidationReport:
    seed: int
    suites: list

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.suites)

    def to_json(self):
        return {"kind": "validation", "seed": self.seed, "passed": self.passed,
                "suites": [r.to_json() for r in self.suites]}

    def table(self) -> str:
        rows = [f"{'suite':<24} result"]
        for r in self.suites:
            rows.append(f"{r.name:<24} {'PASS' if r.passed else 'FAIL'}")
        rows.append(f"overall: {'PASS' if self.passed else 'FAIL'} (seed {self.seed})")
        return "\n".join(rows)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(u) for k, u in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(u) for u in v]
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    return v


# ---------------------------------------------------------------------------
# random instance families

def _pick(gen: np.random.Generator, xs):
    return xs[int(gen.integers(len(xs)))]


def _rand_series(gen, kind: str, expr: CoeffExpr, power: int = 0) -> StrongSeries:
    K = int(gen.integers(0, 3))
    if K == 0:
        return StrongSeries.one()
    v = SeriesVar(kind, expr, 1, power)
    co = {(0,): Coeff.one()}
    for k in range(1, K + 1):
        c = Fraction(int(gen.integers(-3, 4)), int(gen.integers(1, 4)))
        co[(k,)] = Coeff.of(MeroCoeff.const(c))
    return StrongSeries.build((v,), co, K)


SPLIT_STRIP = Strip(Fraction(-3, 2), Fraction(1, 2))


def random_split_instance(case: int, gen: np.random.Generator) -> PreparedGenerator:
    """A prepared generator on y > 1 whose t-cell falls in the given case.

    1: t-bounds independent of y; 2: lower t-bound grows with y;
    3: lower bound fixed, upper bound grows with y.
    """
    a0 = CoeffExpr.const(_pick(gen, [1, 2, Fraction(3, 2)]))
    sigma = _pick(gen, [1, -1])
    nu = _pick(gen, [0, 0, 1])
    if case == 1:
        lam = LinExponent.s().shift(_pick(gen, [0, Fraction(-1, 2), -1]))
        if gen.random() < 0.5:
            tc = TCellData(a0)
        else:
            tc = TCellData(a0, a0 + CoeffExpr.const(_pick(gen, [1, 2])))
        rho = LinExponent.const(_pick(gen, [-2, Fraction(-3, 2), Fraction(-5, 2)]))
        Phi = _rand_series(gen, "y_lower", _ONE)
    elif case == 2:
        lam = LinExponent.s().shift(_pick(gen, [0, Fraction(1, 2), 1]))
        al = _pick(gen, [1, 2])
        tc = TCellData(a0, alpha=al)
        rho = LinExponent.const(_pick(gen, [-2, Fraction(-3, 2), Fraction(-5, 2)]))
        Phi = _rand_series(gen, "t_lower", a0, al)
    elif case == 3:
        lam = LinExponent.s().shift(_pick(gen, [0, Fraction(-1, 2), -1]))
        tc = TCellData(_ONE, _ONE, alpha=0, beta=_pick(gen, [1, 2]))
        rho = LinExponent.const(_pick(gen, [Fraction(-1, 2), 0, Fraction(-3, 2)]))
        Phi = StrongSeries.one()
    else:
        raise ValueError(f"no case {case}")
    te = TranscendentalElement(tc, rho, nu, Phi, sigma)
    return PreparedGenerator(Coeff.one(), SPLIT_STRIP, lam=lam, gamma=te, cell=Cell1D(_ONE))


def split_instances(gen: np.random.Generator, n: int = 20) -> list:
    cases = [1 + (k % 3) for k in range(n)]
    return [(c, random_split_instance(c, gen)) for c in cases]


LOCUS_STRIP = Strip(-2, 1)
LOCUS_XS = ((0.5,), (0.25,), (1.0,))


def random_monomial_sum(gen: np.random.Generator, n_terms: int | None = None) -> list:
    """Up to three monomial generators on y > 1 with pairwise distinct data."""
    n = int(gen.integers(1, 4)) if n_terms is None else n_terms
    out, keys = [], set()
    while len(out) < n:
        d = _pick(gen, [1, 2])
        ell = _pick(gen, [-2, -1, 1, 2])
        eta = Fraction(int(gen.integers(-4, 3)), _pick(gen, [1, 2]))
        lam = LinExponent(ell, eta, d)
        mu = _pick(gen, [0, 0, 1])
        k = _pick(gen, [0, 1, 2])
        Q = OscPolynomial() if k == 0 else OscPolynomial.build(1, {k: Fraction(1, k)})
        key = (lam.key(), mu, k)
        if key in keys:
            continue
        keys.add(key)
        if gen.random() < 0.5:
            f = CoeffExpr.var(0) - CoeffExpr.const(Fraction(1, 2))
        else:
            f = CoeffExpr.const(_pick(gen, [1, -2, 3]))
        out.append(MonomialGenerator(Coeff.of(f), LOCUS_STRIP, lam, mu, Q, Cell1D(_ONE, None, 1)))
    return out


def probe_integrable(terms, s: complex, x) -> bool:
    """Brute-force test of int^inf |sum T| dy < inf.

    In u = log y the integrand is |h(e^u)| e^u.  We integrate it over two far
    windows; an integrable sum decays by orders of magnitude between them,
    a non-integrable one does not.
    """
    def window(U: float, n: int = 1500) -> float:
        u = np.linspace(U, U + 5.0, n)
        logmag = np.full((len(terms), n), -np.inf)
        phase = np.zeros((len(terms), n))
        for j, T in enumerate(terms):
            c = T.coeff.evaluate(s, x)
            if c == 0:
                continue
            lam = complex(T.lam(s))
            lm = math.log(abs(c)) + lam.real * u + 1.0 * u
            if T.mu:
                lm = lm + T.mu * np.log(u)
            logmag[j] = lm
            ph = cmath.phase(c) + lam.imag * u
            if not T.Q.is_zero():
                with np.errstate(over="ignore", invalid="ignore"):
                    q = np.array([_safe_q(T.Q, x, ui) for ui in u])
                ph = ph + q
            phase[j] = ph
        top = logmag.max(axis=0)
        if not np.isfinite(top).any():
            return 0.0
        z = np.zeros(n, dtype=complex)
        for j in range(len(terms)):
            if np.isfinite(logmag[j]).any():
                z += np.exp(logmag[j] - top + 1j * phase[j])
        vals = np.log(np.abs(z) + 1e-300) + top
        ref = vals.max()
        return float(ref + math.log(np.trapezoid(np.exp(vals - ref), u)))

    lo, hi = window(30.0), window(650.0)
    if lo == 0.0 and hi == 0.0:
        return True
    return hi - lo < math.log(0.5)


def _safe_q(Q: OscPolynomial, x, u: float) -> float:
    y = math.exp(u)
    try:
        v = Q.value(x, y)
    except OverflowError:
        return 0.0
    return v if math.isfinite(v) else 0.0


# ---------------------------------------------------------------------------
# suites

def suite_fourier_indicator(gen) -> dict:
    h = load_fixture("indicator_pi_2pi")
    r = fourier_fixed_freq(h)
    T = r.terms[0] if len(r.terms) == 1 else None
    symbolic = (T is not None and isinstance(T, PreparedGenerator) and T.cell is None
                and T.gamma is None and T.coeff.is_one())
    value = r.evaluate(0.0)
    oracle = numeric.integrate_oscillatory(lambda y: 0.5j, math.pi, 2 * math.pi).value
    ok = symbolic and abs(value - 1) < 1e-10 and abs(oracle - 1) < 1e-10
    return {"passed": ok, "symbolic_constant_one": symbolic, "value": value, "oracle": oracle}


def suite_strip_extension(gen) -> dict:
    h = load_fixture("gamma_ys")
    ext, traces = extend_sum(h, Strip(-2, 1))
    rows, ok = [], True
    e1 = cmath.exp(1j)
    for s in (-1.9, -1.5, -1.1):
        v = ext.evaluate(s)
        ref = numeric.integrate_oscillatory(lambda y, s=s: y ** s, 1.0).value
        err = abs(v - ref)
        ok &= err < 1e-8
        rows.append({"s": s, "engine": v, "oracle": ref, "error": err})
    for s in (0.0, 0.5 + 2j):
        v = ext.evaluate(s)
        red = numeric.integrate_oscillatory(lambda y, s=s: y ** (s - 2), 1.0).value
        ref = 1j * e1 - s * e1 - s * (s - 1) * red
        err = abs(v - ref)
        ok &= math.isfinite(abs(v)) and err < 1e-8
        rows.append({"s": s, "engine": v, "oracle": ref, "error": err})
    steps = traces[0].steps if traces else 0
    return {"passed": bool(ok and steps == 2), "steps": steps, "points": rows}


def suite_mellin(gen) -> dict:
    m1 = mellin_transform(load_fixture("mellin_interval"))
    v0 = m1.h.evaluate(0)
    ok = abs(v0 - math.log(2)) < 1e-12
    ok &= any(z.is_zero() for z in m1.removable)
    pts = []
    for s in (1.5, -0.7 + 0.4j, 2.0 + 1j):
        v = m1.h.evaluate(s)
        ref = (2 ** s - 1) / s
        quad = numeric.quad(numeric.QuadratureRequest(lambda y, s=s: y ** (s - 1), 1.0, 2.0)).value
        ok &= abs(v - ref) < 1e-12 and abs(v - quad) < 1e-10
        pts.append({"s": s, "engine": v, "closed": ref, "oracle": quad})
    m2 = mellin_transform(load_fixture("mellin_inverse_square"))
    pole = m2.h.poles.contains(2) and m2.strip.q == 2
    ok &= pole
    for s in (0.5, -1 + 3j):
        v = m2.h.evaluate(s)
        quad = numeric.quad(numeric.QuadratureRequest(lambda y, s=s: y ** (s - 3), 1.0)).value
        ok &= abs(v - 1 / (2 - s)) < 1e-12 and abs(v - quad) < 1e-9
        pts.append({"s": s, "engine": v, "closed": 1 / (2 - s), "oracle": quad})
    return {"passed": bool(ok), "value_at_0": v0, "pole_at_2": pole, "points": pts}


def _sample_s(gen, strip: Strip, poles, margin: float = 0.05) -> complex:
    while True:
        s = complex(gen.uniform(float(strip.p) + margin, float(strip.q) - margin),
                    gen.uniform(-2, 2))
        if not poles.near(s, 1e-3):
            return s


def suite_splitting(gen) -> dict:
    rows, ok = [], True
    for case, T in split_instances(gen):
        r = split_prepared(T)
        worst = 0.0
        for _ in range(20):
            s = _sample_s(gen, T.strip, r.poles_out | T.all_poles())
            y = float(math.exp(gen.uniform(math.log(1.5), math.log(50.0))))
            exact = T.evaluate(s, (), y)
            diff = abs(r.evaluate(s, (), y) - exact)
            tol = r.error_bound(s, (), y) + T.error_bound(s, (), y) + 1e-9 * (1 + abs(exact))
            worst = max(worst, diff / tol)
        ok &= worst <= 1.0
        rows.append({"case": case, "monomial": len(r.monomial),
                     "strongly_integrable": len(r.strongly_integrable),
                     "worst_ratio": worst})
    cases = sorted({row["case"] for row in rows})
    return {"passed": bool(ok and cases == [1, 2, 3]), "instances": rows}


def suite_locus(gen) -> dict:
    rows, disagreements = [], 0
    for _ in range(10):
        terms = random_monomial_sum(gen)
        locus, PA = monomial_locus(terms, LOCUS_STRIP)
        probes = 0
        for lc in locus.cells:
            for re_s in lc.cell.samples(8):
                while True:
                    s = complex(float(re_s), gen.uniform(-2, 2))
                    if not PA.near(s, 1e-3):
                        break
                for x in LOCUS_XS:
                    probes += 1
                    mine = locus_query(locus, s, x)
                    brute = probe_integrable(terms, s, x)
                    if mine != brute:
                        disagreements += 1
        rows.append({"terms": len(terms), "cells": len(locus.cells), "probes": probes})
    return {"passed": disagreements == 0, "disagreements": disagreements, "instances": rows}


def _si_oracle(y: float) -> float:
    with mpmath.workdps(30):
        return float(mpmath.si(y) - mpmath.pi / 2)


def _geometric_oracle(y: float) -> complex:
    return cmath.exp(1j * y) / (y - 0.5)


EPS = float(np.finfo(float).eps)


def _term_mass(e, N: int, y: float) -> float:
    tot = 0.0
    for (r, nu), E in list(zip(e.scale, e.coefficients))[:N]:
        tot += abs(E.evaluate(complex(e.s), (), y)) * y ** float(r) * math.log(y) ** nu
    return tot


def _tail_check(h: GeneratorSum, oracle: Callable, gen, N_max: int = 4) -> dict:
    e = expand(h, N_max)
    ys = np.exp(gen.uniform(math.log(10.0), math.log(1e4), 50))
    worst, fails = 0.0, 0
    for N in range(N_max + 1):
        for y in ys:
            y = float(y)
            hv = oracle(y)
            diff = abs(hv - e.partial(N, (), y))
            # double-precision rounding of h and of the partial sum
            rounding = 8 * EPS * (abs(hv) + _term_mass(e, N, y))
            bound = e.tail_bound(N, (), y)
            if diff > bound + rounding:
                fails += 1
            worst = max(worst, diff / (bound + rounding))
    ordered = all(a > b for a, b in zip(e.scale, e.scale[1:]))
    return {"expansion": e, "fails": fails, "worst_ratio": worst, "ordered": ordered}


def fitted_si_coefficients(n_terms: int = 3, n_fit: int = 8, ys=None) -> list:
    """Least-squares (a_n, b_n) with Si(y) - pi/2 ~ sum (a_n cos y + b_n sin y) y^{-n-1}.

    A joint fit of n_fit terms on high-precision oracle values; it never
    looks at the engine.
    """
    ys = np.linspace(40.0, 160.0, 120) if ys is None else np.asarray(ys)
    with mpmath.workdps(50):
        rows, rhs = [], []
        for y in ys:
            Y = mpmath.mpf(float(y))
            c, s = mpmath.cos(Y), mpmath.sin(Y)
            row = []
            for n in range(n_fit):
                w = Y ** (-n)  # equations are multiplied by y
                row += [c * w, s * w]
            rows.append(row)
            rhs.append((mpmath.si(Y) - mpmath.pi / 2) * Y)
        sol, _ = mpmath.qr_solve(mpmath.matrix(rows), mpmath.matrix(rhs))
        return [(float(sol[2 * n]), float(sol[2 * n + 1])) for n in range(n_terms)]


def engine_cos_sin(E, s=0) -> tuple:
    """(a, b) with E(y) = a cos y + b sin y for a coefficient with phases +-y."""
    two_pi = 2 * math.pi
    a = E.evaluate(s, (), two_pi)
    b = E.evaluate(s, (), two_pi + math.pi / 2)
    return a, b


def suite_expansions(gen) -> dict:
    geo = _tail_check(load_fixture("geometric_unit"), _geometric_oracle, gen)
    si = _tail_check(load_fixture("si"), _si_oracle, gen)
    fitted = fitted_si_coefficients(3)
    coef_ok, coef_rows = True, []
    for n, (fa, fb) in enumerate(fitted):
        ea, eb = engine_cos_sin(si["expansion"].coefficients[n])
        scale = max(abs(fa), abs(fb))
        err = max(abs(ea - fa), abs(eb - fb)) / scale
        coef_ok &= err < 1e-3 and abs(ea.imag) < 1e-12 and abs(eb.imag) < 1e-12
        coef_rows.append({"n": n, "fitted": [fa, fb], "engine": [ea.real, eb.real],
                          "relative_error": err})
    ok = (geo["fails"] == 0 and si["fails"] == 0 and geo["ordered"] and si["ordered"]
          and coef_ok)
    return {"passed": bool(ok),
            "geometric": {"fails": geo["fails"], "worst_ratio": geo["worst_ratio"]},
            "si": {"fails": si["fails"], "worst_ratio": si["worst_ratio"]},
            "si_coefficients": coef_rows}


def suite_limit(gen) -> dict:
    h = load_fixture("x1_eiy")
    lim = limit_at_infinity(h)
    ok = True
    fx = []
    for x1 in (0.0, 1.0, -2.0, 0.5):
        f = lim.f.evaluate(0, (x1,))
        g = lim.g.evaluate(0, (x1,))
        ok &= abs(f - x1 * x1) < 1e-12 and g == 0
        fx.append({"x1": x1, "f": f, "g": g})
    ys = np.linspace(1000.0, 1100.0, 400)
    conv = numeric.pointwise_cauchy(lambda y: h.evaluate(0, (0.0,), y), ys, 0.5)
    osc = numeric.pointwise_cauchy(lambda y: h.evaluate(0, (1.0,), y), ys, 0.5)
    ok &= conv and not osc and lim.exists_at((0.0,)) and not lim.exists_at((1.0,))
    return {"passed": bool(ok), "values": fx, "converges_at_0": conv, "cauchy_at_1": osc}


def _boxes(dim: int, k: int = 4) -> list:
    edges = [Fraction(i, k) for i in range(k + 1)]
    ivs = [(float(a), float(b)) for a, b in itertools.combinations(edges, 2)]
    return list(itertools.product(ivs, repeat=dim))


def suite_equidistribution(gen) -> dict:
    exp_sys = numeric.WeylSystem(((_ONE, 1),))
    weyl = {h: abs(numeric.weyl_sum(exp_sys, [h], (), 20.0)) for h in (1, 2, 3, -1, -2)}
    lin = numeric.WeylSystem((), (_sqrt(2),))
    disc = max(numeric.discrepancy(lin, list(b), [()], 1e4) for b in _boxes(1))
    dep = numeric.WeylSystem((), (_ONE, _ONE))
    disc_dep = max(numeric.discrepancy(dep, list(b), [()], 1e4) for b in _boxes(2))
    ok = max(weyl.values()) < 0.05 and disc < 1e-2 and disc_dep >= 0.1
    return {"passed": bool(ok), "weyl_exp_T20": {str(k): v for k, v in weyl.items()},
            "discrepancy_sqrt2": disc, "discrepancy_dependent": disc_dep}


def _sqrt(n: int) -> CoeffExpr:
    return CoeffExpr("pow", (CoeffExpr.const(n), ExactComplex(Fraction(1, 2))))


def suite_plancherel(gen) -> dict:
    rep = numeric.plancherel_check(lambda y: math.exp(-abs(y)),
                                   lambda t: 2 / (1 + 4 * math.pi ** 2 * t * t))
    return {"passed": rep.passed, "pointwise": {str(k): v for k, v in rep.pointwise.items()},
            "norm_h": rep.norm_h, "norm_fh": rep.norm_fh, "relative_gap": rep.relative_gap}


def suite_roundtrip(gen) -> dict:
    import json
    bad = []
    for name in FIXTURES:
        text = fixture_text(name)
        if dumps(GeneratorSum.from_json(json.loads(text)).to_json()) != text:
            bad.append(name)
    return {"passed": not bad, "mismatches": bad}


GOLDENS = (("si", 4, "si_expand_order4.json"),
           ("geometric_unit", 4, "geometric_unit_expand_order4.json"))


def json_close(a, b, rel: float = 1e-9, path: str = "") -> str | None:
    """First path where two JSON trees differ beyond a relative float tolerance."""
    if isinstance(a, float) or isinstance(b, float):
        if not isinstance(a, (int, float)) or not isinstance(b, (int, float)):
            return path
        if abs(a - b) <= rel * max(1.0, abs(a), abs(b)):
            return None
        return path
    if type(a) is not type(b):
        return path
    if isinstance(a, dict):
        if set(a) != set(b):
            return path
        for k in sorted(a):
            bad = json_close(a[k], b[k], rel, f"{path}/{k}")
            if bad is not None:
                return bad
        return None
    if isinstance(a, list):
        if len(a) != len(b):
            return path
        for i, (u, v) in enumerate(zip(a, b)):
            bad = json_close(u, v, rel, f"{path}/{i}")
            if bad is not None:
                return bad
        return None
    return None if a == b else path


def suite_goldens(gen) -> dict:
    import json
    from .cli import expansion_report
    rows, ok = [], True
    for name, N, golden in GOLDENS:
        payload, _ = expansion_report(load_fixture(name), N)
        fresh = json.loads(dumps(_jsonable(payload)))
        frozen = json.loads(fixture_text("golden/" + golden))
        bad = json_close(fresh, frozen)
        ok &= bad is None
        rows.append({"golden": golden, "first_difference": bad})
    return {"passed": bool(ok), "files": rows}


def suite_monomial_eval(gen) -> dict:
    worst = 0.0
    for _ in range(20):
        terms = random_monomial_sum(gen, 1)
        T = terms[0]
        for _ in range(5):
            s = complex(Fraction(int(gen.integers(-7, 3)), 4),
                        Fraction(int(gen.integers(-4, 5)), 3))
            x = (float(Fraction(int(gen.integers(0, 9)), 8)),)
            y = float(Fraction(int(gen.integers(9, 200)), 8))
            c = T.coeff.evaluate(s, x)
            lam = complex(T.lam(s))
            ref = c * cmath.exp(lam * math.log(y)) * math.log(y) ** T.mu
            if not T.Q.is_zero():
                ref *= cmath.exp(1j * T.Q.value(x, y))
            v = T.evaluate(s, x, y)
            worst = max(worst, abs(v - ref) / max(1.0, abs(ref)))
    return {"passed": worst < 1e-14, "worst_relative": worst}


def suite_multiplicative(gen) -> dict:
    worst = 0.0
    tags_ok = True
    for _ in range(10):
        a = GeneratorSum.make(random_monomial_sum(gen, 2), LOCUS_STRIP, param_dim=1)
        b = GeneratorSum.make(random_monomial_sum(gen, 2), LOCUS_STRIP, param_dim=1)
        p = sum_algebra_product(a, b)
        tags_ok &= tag_leq(a.class_tag, p.class_tag) and tag_leq(b.class_tag, p.class_tag)
        for _ in range(5):
            s = _sample_s(gen, LOCUS_STRIP, p.poles)
            x = (float(gen.uniform(0, 1)),)
            y = float(gen.uniform(1.5, 20))
            u = a.evaluate(s, x, y) * b.evaluate(s, x, y)
            worst = max(worst, abs(p.evaluate(s, x, y) - u) / max(1e-300, abs(u)))
    return {"passed": bool(worst < 1e-10 and tags_ok), "worst_relative": worst,
            "class_tags_monotone": tags_ok}


def suite_grid_partition(gen) -> dict:
    bad = 0
    for _ in range(10):
        T = random_split_instance(1 + int(gen.integers(0, 3)), gen)
        grid = grid_data_of(T)
        cells = gcells(grid, T.strip)
        for _ in range(100):
            q = T.strip.p + (T.strip.q - T.strip.p) * Fraction(int(gen.integers(1, 4096)), 4096)
            hits = sum(c.contains(q) for c in cells)
            bad += hits != 1
        for c in cells:
            for line in grid.lines(T.strip):
                if c.contains(line) and not c.is_line:
                    bad += 1
    return {"passed": bad == 0, "violations": bad}


def suite_split_grid_compat(gen) -> dict:
    bad = 0
    for case, T in split_instances(gen, 9):
        r = split_prepared(T)
        for M in r.monomial:
            grid = grid_data_of(M.to_prepared())
            for c in gcells(grid, T.strip):
                signs = {(M.lam.real_part(q) + 1 > 0) - (M.lam.real_part(q) + 1 < 0)
                         for q in c.samples(5)}
                bad += len(signs) != 1
    return {"passed": bad == 0, "violations": bad}


def suite_oracle_consistency(gen) -> dict:
    worst = 0.0
    for _ in range(50):
        p = float(gen.uniform(-2.5, -0.2))
        a = float(gen.uniform(1.0, 4.0))
        f = (lambda y, p=p: y ** p)
        req = numeric.QuadratureRequest(f, a, math.inf, int(_pick(gen, [1, -1])))
        r1, r2 = numeric.quad_rotation(req), numeric.quad_filon(req)
        worst = max(worst, abs(r1.value - r2.value) / (r1.error + r2.error + 1e-12))
    return {"passed": worst <= 1.0, "worst_ratio": worst}


def suite_pole_bookkeeping(gen) -> dict:
    h = load_fixture("ys_eiy")
    r = integrate_sum(h)
    ok = all(r.H.poles.contains(p) for p in h.poles.points)
    # the integral of y^s e^{iy} over y > 1 is entire: no poles may appear
    ok &= not r.H.poles.points
    vals = []
    for s in (-1.2 + 0.4j, -1.4):
        v = r.H.evaluate(s)
        ref = numeric.integrate_oscillatory(lambda y, s=s: y ** s, 1.0).value
        ok &= abs(v - ref) < 1e-8
        vals.append({"s": s, "engine": v, "oracle": ref})
    return {"passed": bool(ok), "points": vals}


SUITES: tuple = (
    ("fourier_indicator", suite_fourier_indicator),
    ("strip_extension", suite_strip_extension),
    ("mellin", suite_mellin),
    ("splitting", suite_splitting),
    ("locus", suite_locus),
    ("expansions", suite_expansions),
    ("limit", suite_limit),
    ("equidistribution", suite_equidistribution),
    ("plancherel", suite_plancherel),
    ("roundtrip", suite_roundtrip),
    ("monomial_eval", suite_monomial_eval),
    ("multiplicative", suite_multiplicative),
    ("grid_partition", suite_grid_partition),
    ("split_grid_compat", suite_split_grid_compat),
    ("oracle_consistency", suite_oracle_consistency),
    ("pole_bookkeeping", suite_pole_bookkeeping),
    ("goldens", suite_goldens),
)


def run_suite(index: int, seed: int) -> SuiteResult:
    name, fn = SUITES[index]
    gen = np.random.default_rng([seed, index])
    t0 = time.perf_counter()
    try:
        out = fn(gen)
        passed = bool(out.pop("passed"))
    except OscintError as exc:
        out, passed = {"error": f"{type(exc).__name__}: {exc}"}, False
    return SuiteResult(name, passed, out, time.perf_counter() - t0)


def run_validation(seed: int | None = None, names=None, jobs: int = 1) -> ValidationReport:
    seed = numeric.default_seed() if seed is None else int(seed)
    idx = [i for i, (n, _) in enumerate(SUITES) if names is None or n in names]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(run_suite, idx, [seed] * len(idx)))
    else:
        results = [run_suite(i, seed) for i in idx]
    return ValidationReport(seed, results)
