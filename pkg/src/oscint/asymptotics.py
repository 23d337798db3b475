"""Power-log asymptotic expansions as y -> +inf, limits and witnesses.

An expansion of h on a cell with unbounded fibers is a lex-decreasing list
of scale pairs (r_n, nu_n) with coefficients in the space of oscillatory
coefficients E(x, y) = sum_j f_j(x) exp(i(sigma_j log y + Q_j(x, y))).
Every partial sum comes with a tail constant C_N(s, x) and a threshold
y0(x) such that for y >= y0

    |h - sum_{n<N} E_n y^{r_n} (log y)^{nu_n}| <= C_N y^{r_N} (log y)^{nu_N}.

The constants are assembled from explicit majorants: each omitted term is
bounded by its modulus, series tails by their shell bounds, and reduced
transcendental elements by the power-log integral of their modulus.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from .generators import (
    Coeff, GeneratorSum, ModulusSquared, MonomialGenerator, OscPolynomial, PreparedGenerator,
    StrongSeries, _canon,
)
from .kernel import (
    ExactComplex, LinExponent, NeedsSplit, NotPrepared, PreconditionViolated, frac, rat_str,
)
from .rewrite import _rest_weight, naive_parts, reduce_t_steps

MAX_REDUCTION_STEPS = 64


# ---------------------------------------------------------------------------
# oscillatory coefficients

@dataclass(frozen=True)
class OscSummand:
    coeff: Coeff
    sigma: Fraction = Fraction(0)
    Q: OscPolynomial = OscPolynomial()

    def key(self) -> str:
        D = self.Q.d
        return _canon([rat_str(self.sigma), {str(k): c.to_json()
                                              for k, c in self.Q.with_denominator(D).items()}, D])

    @property
    def zero_phase(self) -> bool:
        return self.sigma == 0 and self.Q.is_zero()

    def evaluate(self, s, x, y: float) -> complex:
        v = self.coeff.evaluate(s, x)
        if v == 0:
            return 0j
        ph = float(self.sigma) * math.log(y)
        if not self.Q.is_zero():
            ph += self.Q.value(x, y)
        return v * cmath.exp(1j * ph)

    def to_json(self):
        return {"f": self.coeff.to_json(), "sigma": rat_str(self.sigma), "Q": self.Q.to_json()}


@dataclass(frozen=True)
class OscCoefficient:
    """sum_j f_j(x) exp(i(sigma_j log y + Q_j(x, y))) with distinct phases."""

    summands: tuple = ()

    @classmethod
    def make(cls, summands: Sequence[OscSummand]) -> "OscCoefficient":
        groups: dict = {}
        order = []
        for sm in summands:
            k = sm.key()
            if k in groups:
                g = groups[k]
                groups[k] = OscSummand(g.coeff + sm.coeff, g.sigma, g.Q)
            else:
                groups[k] = sm
                order.append(k)
        return cls(tuple(groups[k] for k in order if not groups[k].coeff.is_zero()))

    @classmethod
    def simple(cls, f, sigma=0, Q: OscPolynomial | None = None) -> "OscCoefficient":
        return cls.make([OscSummand(Coeff.of(f), frac(sigma), Q or OscPolynomial())])

    def is_zero(self) -> bool:
        return not self.summands

    def evaluate(self, s, x, y: float) -> complex:
        return sum((sm.evaluate(s, x, y) for sm in self.summands), 0j)

    def abs_sum(self, s, x) -> float:
        return sum(abs(sm.coeff.evaluate(s, x)) for sm in self.summands)

    def to_json(self):
        return [sm.to_json() for sm in self.summands]


# ---------------------------------------------------------------------------
# contributions and tail constants

@dataclass
class _Known:
    r: Fraction
    nu: int
    summand: OscSummand


@dataclass
class _Bound:
    """c(s, x, y0) y^r (log y)^m bounds a contribution for y >= y0."""

    r: Fraction
    m: int
    const: Callable
    label: str


def _lex_gt(a, b) -> bool:
    return (a[0], a[1]) > (b[0], b[1])


def _sup_ratio(dr: Fraction, dm: int, y0: float) -> float:
    """sup over y >= y0 > 1 of y^{-dr} (log y)^{dm} for dr >= 0."""
    L0 = math.log(y0)
    if dr < 0 or (dr == 0 and dm > 0):
        return math.inf
    if dm <= 0:
        return math.exp(-float(dr) * L0) * L0 ** dm
    Ls = max(L0, dm / float(dr))
    return math.exp(-float(dr) * Ls) * Ls ** dm


@dataclass
class TailConstant:
    """C_N(s, x): sum of majorant constants times their suprema against the target."""

    target: tuple | None
    parts: list = field(default_factory=list)   # (r, m, const, label)

    def evaluate(self, s, x, y0: float) -> float:
        if self.target is None:
            return 0.0
        rt, nt = self.target
        tot = 0.0
        for r, m, const, _ in self.parts:
            c = const(s, x, y0)
            if c == 0:
                continue
            tot += c * _sup_ratio(rt - r, m - nt, y0)
        return tot

    def to_json(self):
        return {"target": None if self.target is None else [rat_str(self.target[0]), self.target[1]],
                "parts": [{"r": rat_str(r), "m": m, "source": lab} for r, m, _, lab in self.parts]}


@dataclass
class Expansion:
    scale: list                  # [(r, nu)]
    coefficients: list           # [OscCoefficient]
    tail_constants: list         # C_0 .. C_N
    convergent: bool
    s: object = 0
    thresholds: list = field(default_factory=list)   # callables x -> y0 lower bounds
    diagnostics: list = field(default_factory=list)
    reduction_steps: int = 0

    def y0(self, x) -> float:
        return max([math.e] + [f(x) for f in self.thresholds])

    def partial(self, N: int, x, y: float) -> complex:
        s = complex(self.s)
        tot = 0j
        for (r, nu), E in list(zip(self.scale, self.coefficients))[:N]:
            v = E.evaluate(s, x, y) * y ** float(r)
            if nu:
                v *= math.log(y) ** nu
            tot += v
        return tot

    def tail_bound(self, N: int, x, y: float) -> float:
        tc = self.tail_constants[N]
        if tc.target is None:
            return 0.0
        y0 = self.y0(x)
        if y < y0:
            return math.inf
        C = tc.evaluate(complex(self.s), x, y0)
        r, nu = tc.target
        return C * y ** float(r) * math.log(y) ** nu

    def to_json(self):
        return {"kind": "expansion", "s": str(self.s), "convergent": self.convergent,
                "scale": [[rat_str(r), nu] for r, nu in self.scale],
                "coefficients": [E.to_json() for E in self.coefficients],
                "tail_constants": [t.to_json() for t in self.tail_constants],
                "reduction_steps": self.reduction_steps, "diagnostics": self.diagnostics}

    def table(self, x=()) -> str:
        s = complex(self.s)
        rows = [f"{'n':>3}  {'r_n':>8}  {'nu_n':>4}  coefficient"]
        for n, ((r, nu), E) in enumerate(zip(self.scale, self.coefficients)):
            parts = []
            for sm in E.summands:
                c = sm.coeff.evaluate(s, x)
                ph = []
                if sm.sigma:
                    ph.append(f"{rat_str(sm.sigma)} log y")
                for k, b in sm.Q.coeffs:
                    ph.append(f"{b.real(x):.6g} y^{rat_str(Fraction(k, sm.Q.d))}")
                pt = f"({c.real:.10g}{c.imag:+.10g}i)"
                if ph:
                    pt += " e^{i(" + " + ".join(ph) + ")}"
                parts.append(pt)
            rows.append(f"{n:>3}  {rat_str(r):>8}  {nu:>4}  " + " + ".join(parts))
        y0 = self.y0(x)
        for N, tc in enumerate(self.tail_constants):
            if tc.target is None:
                rows.append(f"C_{N} = 0 (exact)")
            else:
                rows.append(f"C_{N} = {tc.evaluate(s, x, y0):.6g} at y >= {y0:.6g}, "
                            f"scale y^{rat_str(tc.target[0])} (log y)^{tc.target[1]}")
        rows += [f"note: {d}" for d in self.diagnostics]
        return "\n".join(rows)


# ---------------------------------------------------------------------------
# contributions of terms

def _exponent_at(lam: LinExponent, s) -> ExactComplex:
    if lam.ell == 0:
        return lam.offset
    if s is None:
        raise PreconditionViolated("s-dependent exponents need a fixed exact s")
    return lam.at_exact(s)


def _series_tail_bound(S: StrongSeries, T, lam_re: Fraction, mu: int, g: Coeff,
                       label: str) -> _Bound:
    deg = S.tail.degree()
    used = [v for i, v in enumerate(S.vars) if any(I[i] for I, _ in S.terms)] or list(S.vars)
    if not used or any(v.kind != "y_lower" for v in used):
        raise NotPrepared("series tails need y-decaying variables for a tail constant")
    D = max(v.d for v in used)

    def const(s, x, y0, S=S, used=used, deg=deg, g=g):
        r0 = max(abs(v.expr.evaluate(x)) ** (1.0 / v.d) * y0 ** (-1.0 / v.d) for v in used)
        rho0 = max(abs(v.expr.evaluate(x)) ** (1.0 / v.d) for v in used)
        tb = S.tail.bound(s, x, r0)
        if not math.isfinite(tb):
            return math.inf
        return abs(g.evaluate(s, x)) * tb / r0 ** deg * rho0 ** deg

    return _Bound(lam_re - Fraction(deg, D), mu, const, label)


def _naive_contributions(T: PreparedGenerator, s, K: int, label: str):
    parts = naive_parts(T, K)
    lam = _exponent_at(T.lam, s)
    lr, li = lam.re, lam.im
    known, bounds = [], []
    g = parts.g * parts.cis0
    for I, c in parts.series.active():
        w, xc = _rest_weight(parts.series, I)
        known.append(_Known(lr - w, T.mu, OscSummand(g * c * Coeff.of(xc), li, parts.Q)))
    if not parts.series.tail.is_zero():
        bounds.append(_series_tail_bound(parts.series, T, lr, T.mu, g, label + " series tail"))
    return known, bounds


def _reduced_bound(R: PreparedGenerator, s, label: str) -> list:
    """Majorants for g y^lam (log y)^mu Psi * int_A^B t^rho (log t)^nu Phi e^{it} dt."""
    te = R.gamma
    tc = te.tcell
    if R.phases and any(not p.trivial_unit for p in R.phases):
        raise NotPrepared("reduced terms need trivial phase units")
    lam = _exponent_at(R.lam, s)
    rho = _exponent_at(te.rho, s)
    r = rho.re
    if r >= -1:
        raise PreconditionViolated("reduced exponent must lie below -1")
    a_ = Fraction(tc.alpha, tc.d)
    nu = te.nu
    Phi = te.Phi
    Psi = R.series if R.series is not None else StrongSeries.one()
    if not Psi.is_exact():
        raise NotPrepared("reduced terms need an exact y-series")
    skip = tuple(i for i, v in enumerate(Phi.vars) if v.uses_t)
    out = []
    # int_A^inf t^r (log t)^nu = A^{r+1} sum_k nu!/(nu-k)! (log A)^{nu-k} / (-r-1)^{k+1}
    for I, c in Phi.active():
        wP, xP = _rest_weight(Phi, I, skip)
        for J, cJ in Psi.active():
            wS, xS = _rest_weight(Psi, J)
            for k in range(nu + 1):
                j = nu - k
                fk = math.factorial(nu) / math.factorial(j) / (-float(r) - 1) ** (k + 1)
                for i in range(j + 1):
                    # (log A)^j <= sum_i C(j,i) |log a0|^{j-i} (alpha/d)^i (log y)^i
                    def const(s_, x, y0, c=c, cJ=cJ, xP=xP, xS=xS, fk=fk, j=j, i=i):
                        a0 = tc.a0.real(x)
                        base = abs(R.coeff.evaluate(s_, x) * c.evaluate(s_, x) * cJ.evaluate(s_, x)
                                   * xP.evaluate(x) * xS.evaluate(x))
                        return (base * a0 ** (float(r) + 1) * fk * math.comb(j, i)
                                * abs(math.log(a0)) ** (j - i) * float(a_) ** i)
                    out.append(_Bound(lam.re - wP - wS + a_ * (r + 1), R.mu + i, const,
                                      label + " reduced element"))
    return out


def _collect(h: GeneratorSum, s, K: int, steps: int):
    known, bounds, thresholds = [], [], []
    naive = True
    for idx, T in enumerate(h.terms):
        if isinstance(T, MonomialGenerator):
            T = T.to_prepared()
        if not isinstance(T, PreparedGenerator) or T.cell is None:
            raise PreconditionViolated(f"term {idx}: expansions take generators on a cell")
        if T.cell.upper is not None or T.cell.lower is None:
            raise PreconditionViolated(f"term {idx}: expansions need fibers (a(x), inf)")
        lower = T.cell.lower
        thresholds.append(lambda x, lower=lower: lower.real(x))
        label = f"term {idx}"
        if T.gamma is None or T.gamma.y_free():
            k, b = _naive_contributions(T, s, K, label)
            known += k
            bounds += b
            continue
        naive = False
        tc = T.gamma.tcell
        if tc.alpha == 0 or not tc.trivial_units:
            raise NeedsSplit(f"{label}: transcendental element with y-free lower t-bound; "
                             "split the generator first")
        a0, al, dd = tc.a0, tc.alpha, tc.d
        thresholds.append(lambda x, a0=a0, al=al, dd=dd: a0.real(x) ** (-dd / al))
        bterms, red = reduce_t_steps(T, steps)
        for B in bterms:
            k, b = _naive_contributions(B, s, K, label + " boundary")
            known += k
            bounds += b
        for R in red:
            bounds += _reduced_bound(R, s, label)
    return known, bounds, thresholds, naive


def _assemble(known, bounds):
    horizon = None
    for b in bounds:
        if horizon is None or _lex_gt((b.r, b.m), horizon):
            horizon = (b.r, b.m)
    groups: dict = {}
    for kn in known:
        groups.setdefault((kn.r, kn.nu), []).append(kn.summand)
    entries = []
    for key in sorted(groups, reverse=True):
        E = OscCoefficient.make(groups[key])
        if not E.is_zero():
            entries.append((key, E))
    return entries, horizon


def expand(h: GeneratorSum, N: int, s=None, series_order: int | None = None) -> Expansion:
    """The first N terms of the power-log expansion of h with tail constants."""
    N = int(N)
    if N < 0:
        raise PreconditionViolated("expansion order must be >= 0")
    if s is not None:
        s = ExactComplex.coerce(s)
    K = series_order if series_order is not None else 2 * N + 4
    steps = max(1, N)
    while True:
        known, bounds, thresholds, naive = _collect(h, s, K, steps)
        entries, horizon = _assemble(known, bounds)
        above = [e for e in entries if horizon is None or _lex_gt(e[0], horizon)]
        if naive or len(above) > N or steps >= MAX_REDUCTION_STEPS:
            break
        steps += 1
    diagnostics = []
    if not naive and len(above) <= N and horizon is not None:
        diagnostics.append(f"only {len(above)} terms are resolved above the reduction horizon")
    scale = [e[0] for e in above[:N]]
    coeffs = [e[1] for e in above[:N]]
    tails = []
    for k in range(N + 1):
        target = above[k][0] if k < len(above) else horizon
        tc = TailConstant(target)
        if target is not None:
            rest = [e for e in entries if not _lex_gt(e[0], target)]
            for (r, nu), E in rest:
                tc.parts.append((r, nu, lambda s_, x, y0, E=E: E.abs_sum(s_, x),
                                 f"omitted term y^{rat_str(r)} (log y)^{nu}"))
            for b in bounds:
                tc.parts.append((b.r, b.m, b.const, b.label))
        tails.append(tc)
    if not entries and not bounds:
        diagnostics.append("the expansion is identically zero")
    return Expansion(scale, coeffs, tails, naive, s if s is not None else 0, thresholds,
                     diagnostics, 0 if naive else steps)


def flat_function_report(f: Callable[[float], complex], ys: Sequence[float] = (10.0, 20.0, 40.0),
                         powers: Sequence[int] = (1, 2, 5, 10)) -> Expansion:
    """Zero expansion for a function decaying faster than every power of y."""
    vals = [abs(f(y)) for y in ys]
    flat = all(vals[-1] * ys[-1] ** p < vals[0] * ys[0] ** p for p in powers)
    diag = []
    if flat and any(v > 0 for v in vals):
        diag.append("flat function: nonzero but every power-log coefficient vanishes; "
                    "the expansion does not determine it")
    return Expansion([], [], [TailConstant(None)], True, 0, [], diag)


# ---------------------------------------------------------------------------
# limits at infinity

@dataclass
class LimitResult:
    f: GeneratorSum
    g: GeneratorSum
    obstructions: list = field(default_factory=list)

    def exists_at(self, x, tol: float = 1e-12) -> bool:
        return abs(self.f.evaluate(0, x)) <= tol

    def value_at(self, x) -> complex:
        return self.g.evaluate(0, x)

    def to_json(self):
        return {"kind": "limit", "f": self.f.to_json(), "g": self.g.to_json(),
                "obstructions": self.obstructions}


def limit_at_infinity(h: GeneratorSum, s=None) -> LimitResult:
    """f, g with lim h(x, y) existing iff f(x) = 0, and equal to g(x) there."""
    if s is not None:
        s = ExactComplex.coerce(s)
    steps = 1
    while True:
        known, bounds, _, naive = _collect(h, s, 8, steps)
        entries, horizon = _assemble(known, bounds)
        if horizon is None or horizon < (Fraction(0), 0) or naive or steps >= MAX_REDUCTION_STEPS:
            break
        steps += 1
    if horizon is not None and not horizon < (Fraction(0), 0):
        raise NeedsSplit("the remainder is not known to decay; split or reduce further")
    fs, obstructions = [], []
    g = None
    for (r, nu), E in entries:
        if (r, nu) < (Fraction(0), 0):
            continue
        for sm in E.summands:
            if (r, nu) == (Fraction(0), 0) and sm.zero_phase:
                g = sm.coeff
                continue
            fs.append(PreparedGenerator(Coeff.of(ModulusSquared(sm.coeff)), h.strip))
            obstructions.append({"r": rat_str(r), "nu": nu, "summand": sm.to_json()})
    gsum = [] if g is None else [PreparedGenerator(g, h.strip)]
    return LimitResult(GeneratorSum.make(fs, h.strip, h.poles, h.param_dim),
                       GeneratorSum.make(gsum, h.strip, h.poles, h.param_dim), obstructions)


# ---------------------------------------------------------------------------
# non-compensation witnesses

@dataclass
class Witness:
    found: bool
    y: float | None
    value: float
    probes: int

    def to_json(self):
        return {"found": self.found, "y": self.y, "value": self.value, "probes": self.probes}


def noncompensation_witness(E: OscCoefficient, x=(), eps: float = 0.5, horizon: float = 1e6,
                            probes: int = 10_000, s=0, y_min: float = 1.0) -> Witness:
    """Search for y with |E(x, y)| > eps; failure only reports an unsuccessful search."""
    s = complex(s)
    ys = np.logspace(math.log10(y_min), math.log10(horizon), probes)
    best_y, best = None, -1.0
    for y in ys:
        v = abs(E.evaluate(s, x, float(y)))
        if v > eps:
            return Witness(True, float(y), v, probes)
        if v > best:
            best_y, best = float(y), v
    if best_y is None or best <= 0:
        return Witness(False, None, max(best, 0.0), probes)
    step = best_y * (ys[1] / ys[0] - 1)
    res = optimize.minimize_scalar(lambda y: -abs(E.evaluate(s, x, y)),
                                   bracket=(best_y - step, best_y, best_y + step),
                                   method="golden", options={"xtol": 1e-10})
    y = float(res.x)
    v = abs(E.evaluate(s, x, y))
    return Witness(v > eps, y if v > eps else None, v, probes)


# ---------------------------------------------------------------------------
# uniqueness

@dataclass
class UniquenessReport:
    passed: bool
    merged_scale: list
    first_discrepancy: dict | None

    def to_json(self):
        return {"passed": self.passed,
                "merged_scale": [[rat_str(r), nu] for r, nu in self.merged_scale],
                "first_discrepancy": self.first_discrepancy}


def expansion_uniqueness_check(e1: Expansion, e2: Expansion, xs: Sequence = ((),),
                               ys: Sequence[float] = (3.0, 7.5, 19.0, 101.0),
                               tol: float = 1e-9) -> UniquenessReport:
    """Compare coefficients over the union of the two scales."""
    d1 = dict(zip(e1.scale, e1.coefficients))
    d2 = dict(zip(e2.scale, e2.coefficients))
    merged = sorted(set(d1) | set(d2), reverse=True)
    zero = OscCoefficient()
    for n, key in enumerate(merged):
        A, B = d1.get(key, zero), d2.get(key, zero)
        for x in xs:
            for y in ys:
                a = A.evaluate(complex(e1.s), x, y)
                b = B.evaluate(complex(e2.s), x, y)
                if abs(a - b) > tol * max(1.0, abs(a), abs(b)):
                    return UniquenessReport(False, merged, {
                        "index": n, "r": rat_str(key[0]), "nu": key[1], "x": list(x), "y": y,
                        "difference": abs(a - b)})
    return UniquenessReport(True, merged, None)
