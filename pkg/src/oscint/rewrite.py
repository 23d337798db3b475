"""Rewriting calculus: power-log integrals, Mellin and Fourier transforms,
integration by parts, splitting and integration of monomial generators.

All routines are pure term-to-term functions.  Where no closed form is
available a deferred numeric node (``OscAmpIntegral``/``TermIntegral``) is
emitted instead of failing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

from .generators import (
    Amp, Cell1D, Coeff, GammaFactor, GeneratorSum, MonomialGenerator, OscAmpIntegral,
    OscPolynomial, ParamPower, PowerLogIntegral, PreparedGenerator, PreparedPhase,
    SeriesVar, StrongSeries, TCellData, Tail, TermIntegral, TranscendentalElement,
    always_below, exp_series, phases_from_polynomial, powerlog_value,
)
from .kernel import (
    EMPTY_POLES, CoeffExpr, Divergent, ExactComplex, LinExponent, MeroCoeff, NotIntegrable,
    NotMonotone, NotPrepared, Poly, PoleSet, PreconditionViolated, Strip, TruncationOverflow,
    ZeroLeadingCoefficient, ceil_frac, floor_frac, frac, rat_str,
)

MAX_EXTRA_STEPS = 64


# ---------------------------------------------------------------------------
# small coefficient helpers

def _c(v) -> Coeff:
    return Coeff.of(MeroCoeff.const(v))


def _si(sigma: int) -> Coeff:
    return _c(ExactComplex(0, sigma))


def _is_nat(lam: LinExponent) -> int | None:
    """The value of lam when it is a constant natural number."""
    if lam.ell:
        return None
    v = lam.offset
    if v.im or v.re.denominator != 1 or v.re < 0:
        return None
    return int(v.re)


def ppow(base: CoeffExpr, lam: LinExponent) -> Coeff:
    """base(x)^{lam(s)} as a coefficient (integer powers allow any sign)."""
    if base.is_const(1):
        return Coeff.one()
    if lam.ell == 0:
        e = lam.offset
        if e.is_zero():
            return Coeff.one()
        k = _is_nat(lam)
        if k is not None:
            out = CoeffExpr.const(1)
            for _ in range(k):
                out = out * base
            return Coeff.of(out)
        return Coeff.of(base.pow(e))
    return Coeff.of(ParamPower(base, lam))


def _xpow(base: CoeffExpr, k) -> CoeffExpr:
    """base^k for a rational k; repeated products for naturals."""
    k = frac(k)
    if k == 0:
        return CoeffExpr.const(1)
    if k.denominator == 1 and k > 0:
        out = CoeffExpr.const(1)
        for _ in range(int(k)):
            out = out * base
        return out
    return base.pow(k)


def _logpow(base: CoeffExpr, k: int) -> CoeffExpr:
    return _xpow(base.log(), k) if k else CoeffExpr.const(1)


def _cis(arg: CoeffExpr) -> CoeffExpr:
    return arg.cis()


def _lam_poly(lam: LinExponent) -> Coeff:
    return Coeff.of(MeroCoeff.poly(Poly.from_exponent(lam)))


def _min_steps(lam: LinExponent, strip: Strip, c=-1) -> int:
    """Smallest N >= 0 with Re(lam(s)) - N < c on the open strip."""
    n = 0
    while not always_below(lam.shift(-n), strip, c):
        n += 1
    return n


# ---------------------------------------------------------------------------
# power-log antiderivatives

@dataclass(frozen=True)
class PowerLogAntiderivative:
    """y^w sum_j c_j (log y)^j, an antiderivative of y^{w-1} (log y)^mu."""

    w: complex
    mu: int

    def coefficients(self) -> list[complex]:
        """c_0..c_mu, with c_{mu-k} = (-1)^k mu!/(mu-k)! w^{-(k+1)}."""
        w, mu = complex(self.w), self.mu
        if w == 0:
            return [0j] * (mu + 1) + [1 / (mu + 1)]
        out = [0j] * (mu + 1)
        for k in range(mu + 1):
            out[mu - k] = (-1) ** k * math.factorial(mu) / math.factorial(mu - k) / w ** (k + 1)
        return out

    def __call__(self, y: float) -> complex:
        ly = math.log(y)
        cs = self.coefficients()
        if complex(self.w) == 0:
            return ly ** (self.mu + 1) / (self.mu + 1)
        return complex(y) ** complex(self.w) * sum(c * ly ** j for j, c in enumerate(cs))


def powerlog_integral(w, mu: int, a: float, b: float | None = None, s=None):
    """int_a^b y^{w-1} (log y)^mu dy.

    With a numeric ``w`` the value is returned.  With a LinExponent ``w`` and
    no ``s`` the symbolic coefficient is returned; with ``s`` it is evaluated.
    """
    if isinstance(w, LinExponent):
        if s is None:
            lo = CoeffExpr.wrap(a)
            hi = None if b is None else CoeffExpr.wrap(b)
            return powerlog_coeff(w, mu, lo, hi)
        w = w(s)
    if a < 1:
        raise PreconditionViolated("power-log integrals take a >= 1")
    return powerlog_value(complex(w), mu, a, b)


def powerlog_coeff(w: LinExponent, mu: int, a: CoeffExpr, b: CoeffExpr | None) -> Coeff:
    """Symbolic int_a^b y^{w(s)-1} (log y)^mu dy.

    Bounded ranges give an entire factor (removable point w = 0); the
    unbounded range gives the meromorphic closed form
    -a^w sum_k (-1)^k mu!/(mu-k)! (log a)^{mu-k} / w^{k+1}.
    """
    if b is not None:
        return Coeff.of(PowerLogIntegral(w, mu, a, b))
    wp = Poly.from_exponent(w)
    out = Coeff.zero()
    for k in range(mu + 1):
        den = Poly.const(1)
        for _ in range(k + 1):
            den = den * wp
        c = ExactComplex(-((-1) ** k) * math.factorial(mu) // math.factorial(mu - k))
        term = Coeff.of(MeroCoeff(Poly.const(c), den, _logpow(a, mu - k)))
        out = out + term * ppow(a, w)
    return out


# ---------------------------------------------------------------------------
# traces

@dataclass
class IBPTrace:
    """Boundary terms plus reduced terms whose sum re-sums the input."""

    boundary_terms: list
    reduced_terms: list
    steps: int
    strip: Strip
    provenance: list = field(default_factory=list)
    poles: PoleSet = EMPTY_POLES

    @property
    def reduced_term(self):
        return self.reduced_terms[0] if len(self.reduced_terms) == 1 else None

    def terms(self) -> list:
        return list(self.boundary_terms) + list(self.reduced_terms)

    def as_sum(self, param_dim: int = 0) -> GeneratorSum:
        return GeneratorSum.make(self.terms(), self.strip, self.poles, param_dim)

    def evaluate(self, s, x=(), y=None) -> complex:
        tot = 0j
        for T in self.terms():
            if T.cell is None or T.cell.contains(x, y):
                tot += T.evaluate(s, x, None if T.cell is None else y)
        return tot

    def to_json(self):
        return {"kind": "ibp_trace", "steps": self.steps, "strip": self.strip.to_json(),
                "poles": self.poles.to_json(),
                "boundary_terms": [T.to_json() for T in self.boundary_terms],
                "reduced_terms": [T.to_json() for T in self.reduced_terms],
                "provenance": self.provenance}


def merge_traces(traces: Sequence[IBPTrace], strip: Strip) -> IBPTrace:
    out = IBPTrace([], [], 0, strip)
    for tr in traces:
        out.boundary_terms += tr.boundary_terms
        out.reduced_terms += tr.reduced_terms
        out.steps = max(out.steps, tr.steps)
        out.provenance += tr.provenance
        out.poles = out.poles | tr.poles
    return out


# ---------------------------------------------------------------------------
# integration by parts on a basic integral int_A^B t^lam (log t)^nu e^{sigma i t} dt

def _ibp_basic(A: CoeffExpr, B: CoeffExpr | None, lam: LinExponent, nu: int, sigma: int,
               nsteps: int, coeff: Coeff | None = None):
    """Integrate the exponential and derive the power-log factor ``nsteps`` times.

    Returns (boundary coefficient, leftover {nu': coeff}, exponent, provenance);
    the input equals boundary + sum_nu' leftover[nu'] * I(exponent, nu').
    """
    si = _si(sigma)
    sg = CoeffExpr.const(sigma)
    state = {nu: coeff if coeff is not None else Coeff.one()}
    boundary = Coeff.zero()
    prov = []
    cur = lam
    for j in range(nsteps):
        if not state:
            break
        new: dict = {}
        for v, C in sorted(state.items()):
            bA = si * C * ppow(A, cur) * Coeff.of(_logpow(A, v) * _cis(sg * A))
            boundary = boundary + bA
            if B is not None:
                boundary = boundary - si * C * ppow(B, cur) * Coeff.of(_logpow(B, v) * _cis(sg * B))
            lp = _lam_poly(cur)
            if not lp.is_zero():
                new[v] = new.get(v, Coeff.zero()) + si * C * lp
            if v > 0:
                new[v - 1] = new.get(v - 1, Coeff.zero()) + si * C * _c(v)
        prov.append({"step": j, "exponent": cur.to_json(), "log_powers": sorted(state),
                     "rule": "integrate e^{sigma i t}, derive t^lam (log t)^nu"})
        state = {v: c for v, c in new.items() if not c.is_zero()}
        cur = cur.shift(-1)
    return boundary, state, cur, prov


def _extend_basic(A: CoeffExpr, lam: LinExponent, nu: int, sigma: int, strip: Strip,
                  coeff: Coeff, poles: PoleSet) -> IBPTrace:
    """coeff * int_A^inf t^lam (log t)^nu e^{sigma i t} dt continued to the strip."""
    n = _min_steps(lam, strip)
    boundary, state, cur, prov = _ibp_basic(A, None, lam, nu, sigma, n, coeff)
    bterms = []
    if not boundary.is_zero():
        bterms.append(PreparedGenerator(boundary, strip, poles=poles))
    red = []
    for v, C in sorted(state.items()):
        te = TranscendentalElement(TCellData(A), cur, v, StrongSeries.one(), sigma)
        red.append(PreparedGenerator(C, strip, gamma=te, poles=poles))
    return IBPTrace(bterms, red, n, strip, prov, poles)


def _t_lower_only(Phi: StrongSeries):
    """Check Phi only uses one y-free t_lower variable and constants."""
    idx = None
    for i, v in enumerate(Phi.vars):
        used = any(I[i] for I, _ in Phi.active())
        if not used:
            continue
        if v.kind == "c":
            continue
        if v.kind == "t_lower" and v.power == 0 and idx is None:
            idx = i
            continue
        raise PreconditionViolated(f"strip extension cannot expand series variable {v.kind}")
    return idx


def _cvals(Phi: StrongSeries, I, skip=()) -> CoeffExpr:
    out = CoeffExpr.const(1)
    for i, (v, k) in enumerate(zip(Phi.vars, I)):
        if k and v.kind == "c" and i not in skip:
            out = out * _xpow(v.expr, k)
    return out


def ibp_strip_extend(te: TranscendentalElement, strip: Strip, coeff: Coeff | None = None,
                     poles: PoleSet = EMPTY_POLES) -> IBPTrace:
    """Continue a y-free transcendental element with unbounded t-fibers to a
    wider strip by integrating by parts a minimal number of times."""
    if te.tcell.bounded:
        raise PreconditionViolated("strip extension needs unbounded t-fibers")
    if not te.y_free():
        raise PreconditionViolated("strip extension takes y-free transcendental elements")
    coeff = Coeff.one() if coeff is None else coeff
    poles = poles | te.poles()
    A, Phi = te.tcell.a0, te.Phi
    if always_below(te.rho, strip, -1):
        g = PreparedGenerator(coeff, strip, gamma=te, poles=poles)
        return IBPTrace([], [g], 0, strip, [{"step": 0, "rule": "identity"}], poles)
    if not te.tcell.trivial_units:
        raise NotPrepared("strip extension needs trivial t-cell units")
    if Phi.is_one():
        return _extend_basic(A, te.rho, te.nu, te.sigma, strip, coeff, poles)
    ti = _t_lower_only(Phi)
    dv = Phi.vars[ti].d if ti is not None else 1
    ev = Phi.vars[ti].expr if ti is not None else CoeffExpr.const(1)
    # group the truncation by the power of (e/t)^{1/d}
    groups: dict = {}
    for I, c in Phi.active():
        m = I[ti] if ti is not None else 0
        groups.setdefault(m, Coeff.zero())
        groups[m] = groups[m] + c * Coeff.of(_cvals(Phi, I) * _xpow(ev, Fraction(m, dv)))
    crit = [m for m in sorted(groups)
            if not always_below(te.rho.shift(-Fraction(m, dv)), strip, -1)]
    mc = max(crit) if crit else -1
    traces = []
    for m in crit:
        if groups[m].is_zero():
            continue
        traces.append(_extend_basic(A, te.rho.shift(-Fraction(m, dv)), te.nu, te.sigma, strip,
                                    coeff * groups[m], poles))
    # the remaining terms are integrable already; shift them by (e/t)^{(mc+1)/d}
    rest = {}
    for I, c in Phi.active():
        m = I[ti] if ti is not None else 0
        if m > mc:
            J = list(I)
            J[ti] = m - mc - 1
            rest[tuple(J)] = rest.get(tuple(J), Coeff.zero()) + c
    tail = Phi.tail
    if not tail.is_zero():
        if tail.op != "shell" or ti is None or len([v for v in Phi.vars if v.kind != "c"]) != 1:
            raise PreconditionViolated("strip extension needs an exact series or a shell tail")
        B, K, j, R = tail.args
        if K < mc + 1:
            raise TruncationOverflow("series truncated below the critical order")
        tail = Tail.shell(B * CoeffExpr.const(1 / (R ** (mc + 1))), K - mc - 1, j, R)
    if rest or not tail.is_zero():
        rho2 = te.rho.shift(-Fraction(mc + 1, dv))
        Phi2 = StrongSeries.build(Phi.vars, rest, max(0, Phi.order - mc - 1), tail)
        extra = coeff * Coeff.of(_xpow(ev, Fraction(mc + 1, dv)))
        te2 = TranscendentalElement(te.tcell, rho2, te.nu, Phi2, te.sigma)
        traces.append(IBPTrace([], [PreparedGenerator(extra, strip, gamma=te2, poles=poles)],
                               0, strip, [{"rule": "integrable remainder"}], poles))
    return merge_traces(traces, strip)


def extend_sum(h: GeneratorSum, strip: Strip) -> tuple[GeneratorSum, list]:
    """Strip extension applied termwise to a y-free sum."""
    if not (strip.p <= h.strip.p and h.strip.q <= strip.q):
        raise PreconditionViolated("the new strip must contain the old one")
    terms, traces = [], []
    for T in h.terms:
        if not isinstance(T, PreparedGenerator) or T.cell is not None:
            raise PreconditionViolated("strip extension takes y-free prepared generators")
        if T.gamma is None or T.gamma.tcell.bounded:
            terms.append(replace(T, strip=strip))
            continue
        tr = ibp_strip_extend(T.gamma, strip, T.coeff, T.poles)
        traces.append(tr)
        terms += tr.terms()
    out = GeneratorSum.make(terms, strip, h.poles, h.param_dim)
    return out, traces


# ---------------------------------------------------------------------------
# Mellin transform

@dataclass
class MellinResult:
    h: GeneratorSum
    strip: Strip
    removable: list

    def to_json(self):
        return {"kind": "mellin", "strip": self.strip.to_json(), "result": self.h.to_json(),
                "removable": [z.to_json() for z in self.removable]}


def _y_series_terms(T, Sser: StrongSeries | None):
    """Expand an exact series in y_lower/c variables into (weight, coeff) pairs."""
    if Sser is None or Sser.is_one():
        return [(Fraction(0), Coeff.one())]
    if not Sser.is_exact():
        raise PreconditionViolated("closed forms need an exact series")
    out = []
    for I, c in Sser.active():
        w = Fraction(0)
        xc = CoeffExpr.const(1)
        for v, k in zip(Sser.vars, I):
            if not k:
                continue
            if v.kind == "y_lower":
                w += Fraction(k, v.d)
                xc = xc * _xpow(v.expr, Fraction(k, v.d))
            elif v.kind == "c":
                xc = xc * _xpow(v.expr, k)
            else:
                raise PreconditionViolated(f"closed forms cannot expand {v.kind} variables")
        out.append((w, c * Coeff.of(xc)))
    return out


def mellin_transform(h: GeneratorSum) -> MellinResult:
    """int_0^inf y^{s-1} h(s,x,y) dy for gamma-free, phase-free sums."""
    strip = h.strip
    p, q = strip.p, strip.q
    terms, removable = [], []
    shift = LinExponent.s()
    for idx, T in enumerate(h.terms):
        if isinstance(T, MonomialGenerator):
            if not T.Q.is_zero():
                raise PreconditionViolated(f"term {idx}: Mellin transforms take phase-free terms")
            T = T.to_prepared()
        if not isinstance(T, PreparedGenerator) or T.gamma is not None or T.phases:
            raise PreconditionViolated(f"term {idx}: Mellin transforms take gamma-free terms")
        if T.cell is None or T.cell.lower is None:
            raise PreconditionViolated(f"term {idx}: needs a cell with a finite lower bound")
        a, b = T.cell.lower, T.cell.upper
        for w_I, cI in _y_series_terms(T, T.series):
            w = (T.lam + shift).shift(-w_I)
            if b is None:
                # convergence needs Re w < 0
                if w.ell == 0:
                    if w.real_part(0) >= 0:
                        raise Divergent(f"term {idx}: Mellin integral diverges for every s")
                else:
                    root = (-w.eta.re) / w.ell  # Re w = 0 at Re s = root
                    if w.ell > 0:
                        q = min(q, root)
                    else:
                        p = max(p, root)
            else:
                z = w.solve(0)
                if z is not None:
                    removable.append(z)
            terms.append((T, cI * powerlog_coeff(w, T.mu, a, b)))
    if p >= q:
        raise Divergent("the Mellin transform has an empty convergence strip")
    out_strip = Strip(p, q)
    gens = [PreparedGenerator(T.coeff * c, out_strip, poles=T.poles) for T, c in terms]
    res = GeneratorSum.make(gens, out_strip, h.poles, h.param_dim)
    return MellinResult(res, out_strip, removable)


# ---------------------------------------------------------------------------
# Fourier transforms

def _to_t_series(S: StrongSeries | None) -> StrongSeries:
    if S is None:
        return StrongSeries.one()
    kinds = {"y_lower": "t_lower", "y_upper": "t_upper", "c": "c"}
    vars = []
    for v in S.vars:
        if v.kind not in kinds:
            raise PreconditionViolated("series already depends on t")
        vars.append(SeriesVar(kinds[v.kind], v.expr, v.d, 0))
    return StrongSeries(tuple(vars), S.terms, S.order, S.tail)


def _check_fourier_term(idx: int, T, strip: Strip) -> PreparedGenerator:
    if isinstance(T, MonomialGenerator):
        T = T.to_prepared()
    if not isinstance(T, PreparedGenerator) or T.cell is None:
        raise PreconditionViolated(f"term {idx}: Fourier transforms take prepared terms on a cell")
    if T.gamma is not None and not T.gamma.y_free():
        raise PreconditionViolated(f"term {idx}: y-dependent transcendental elements are not supported")
    if T.cell.upper is None and not always_below(T.lam, strip, -1):
        d = T.lam.d
        raise NotIntegrable(
            f"term {idx}: y^({T.lam.ell}s+{T.lam.eta})/{d} is not integrable at infinity on "
            f"the strip; grid inequality {T.lam.ell}*Re(s) + {rat_str(T.lam.eta.re)} + {d} < 0 "
            f"fails at Re(s) = {rat_str(strip.q if T.lam.ell > 0 else strip.p)}")
    return T


def _basic_fourier(A: CoeffExpr, B: CoeffExpr | None, lam: LinExponent, nu: int,
                   Phi: StrongSeries, sigma: int, coeff: Coeff, strip: Strip,
                   poles: PoleSet) -> list:
    """coeff * int_A^B t^lam (log t)^nu Phi e^{sigma i t} dt as generators."""
    k = _is_nat(lam)
    if B is not None and k is not None and nu == 0 and Phi.is_one():
        bd, state, _, _ = _ibp_basic(A, B, lam, 0, sigma, k + 1, coeff)
        if not state:
            return [PreparedGenerator(bd, strip, poles=poles)] if not bd.is_zero() else []
    te = TranscendentalElement(TCellData(A, B), lam, nu, Phi, sigma)
    return [PreparedGenerator(coeff, strip, gamma=te, poles=poles)]


def fourier_fixed_freq(h: GeneratorSum) -> GeneratorSum:
    """f[h](s,x) = int h(s,x,y) e^{iy} dy as a sum of transcendental elements."""
    out = []
    for idx, T in enumerate(h.terms):
        T = _check_fourier_term(idx, T, h.strip)
        coeff = T.coeff
        if T.gamma is not None:
            coeff = coeff * GammaFactor(T.gamma)
        if T.phases:
            phase = PreparedPhase(CoeffExpr.const(1), 1, None, 1)
            node = TermIntegral((replace(T, coeff=Coeff.one(), phases=T.phases + (phase,)),),
                                T.cell.lower, T.cell.upper, "fourier of a phased term")
            out.append(PreparedGenerator(T.coeff * Coeff.of(node), h.strip, poles=T.poles))
            continue
        out += _basic_fourier(T.cell.lower, T.cell.upper, T.lam, T.mu, _to_t_series(T.series),
                              1, coeff, h.strip, T.all_poles())
    return GeneratorSum.make(out, h.strip, h.poles, h.param_dim)


def full_fourier(h: GeneratorSum, t) -> GeneratorSum:
    """int h(s,x,y) e^{-2 pi i t y} dy at a fixed exact frequency t."""
    t = frac(t)
    out = []
    for idx, T in enumerate(h.terms):
        if isinstance(T, MonomialGenerator):
            T = T.to_prepared()
        if not isinstance(T, PreparedGenerator) or T.cell is None or T.phases \
                or T.gamma is not None or (T.series is not None and not T.series.is_one()):
            raise PreconditionViolated(f"term {idx}: full Fourier transforms take power-log terms")
        a, b = T.cell.lower, T.cell.upper
        if a is None:
            raise PreconditionViolated(f"term {idx}: needs a finite lower bound")
        if b is None and not always_below(T.lam, h.strip, -1):
            raise NotIntegrable(f"term {idx}: not integrable at infinity on the strip")
        k = _is_nat(T.lam)
        if t == 0:
            if k is not None and T.mu == 0 and b is not None:
                val = (_xpow(b, k + 1) - _xpow(a, k + 1)) / CoeffExpr.const(k + 1)
                out.append(PreparedGenerator(T.coeff * Coeff.of(val), h.strip, poles=T.poles))
            else:
                out.append(PreparedGenerator(T.coeff * powerlog_coeff(T.lam.shift(1), T.mu, a, b),
                                             h.strip, poles=T.all_poles()))
            continue
        sigma = -1 if t > 0 else 1
        c = CoeffExpr.const(2 * abs(t)) * CoeffExpr.sym("pi")
        A, B = c * a, (None if b is None else c * b)
        scale = ppow(c, -T.lam.shift(1))
        for i in range(T.mu + 1):
            binom = math.comb(T.mu, i)
            lc = _xpow(CoeffExpr.const(-1) * c.log(), T.mu - i)
            coeff = T.coeff * scale * Coeff.of(CoeffExpr.const(binom) * lc)
            if coeff.is_zero():
                continue
            out += _basic_fourier(A, B, T.lam, i, StrongSeries.one(), sigma, coeff, h.strip,
                                  T.all_poles())
    return GeneratorSum.make(out, h.strip, h.poles, h.param_dim)


# ---------------------------------------------------------------------------
# series bookkeeping shared by reduction and splitting

def _rest_weight(S: StrongSeries, I, skip=()) -> tuple[Fraction, CoeffExpr]:
    """y-weight and x-factor of the monomial Z^I over y_lower and c variables."""
    w = Fraction(0)
    xc = CoeffExpr.const(1)
    for i, (v, k) in enumerate(zip(S.vars, I)):
        if not k or i in skip:
            continue
        if v.kind == "y_lower":
            w += Fraction(k, v.d)
            xc = xc * _xpow(v.expr, Fraction(k, v.d))
        elif v.kind == "c":
            xc = xc * _xpow(v.expr, k)
        elif v.kind == "y_upper":
            raise NotPrepared("(y/b)^{1/d} variables need bounded y-fibers")
        else:
            raise NotPrepared(f"unexpected {v.kind} variable")
    return w, xc


def _tail_weight(S: StrongSeries) -> Fraction:
    """A lower bound on the y-weight of every omitted term."""
    if S.is_exact():
        return Fraction(10 ** 9)
    used = [v for i, v in enumerate(S.vars) if any(I[i] for I, _ in S.terms)] or list(S.vars)
    if not used or any(v.kind != "y_lower" for v in used):
        return Fraction(0)
    return Fraction(S.tail.degree(), max(v.d for v in used))


def _min_weight(S: StrongSeries | None) -> Fraction:
    if S is None or S.is_one():
        return Fraction(0)
    ws = [_rest_weight(S, I)[0] for I, _ in S.active()]
    return min(ws + [_tail_weight(S)])


def _canonical_tvars(T: PreparedGenerator) -> tuple:
    te = T.gamma
    tc, Phi = te.tcell, te.Phi
    lo = up = None
    for i, v in enumerate(Phi.vars):
        if not any(I[i] for I, _ in Phi.terms):
            continue
        if v.kind == "t_lower":
            if lo is not None or v.expr != tc.a0 or v.power != tc.alpha or v.d != tc.d:
                raise NotPrepared("t-variables must read (a0 y^{alpha/d}/t)^{1/d}")
            lo = i
        elif v.kind == "t_upper":
            if up is not None or tc.b0 is None or v.expr != tc.b0 or v.power != tc.beta \
                    or v.d != tc.d:
                raise NotPrepared("t-variables must read (t/(b0 y^{beta/d}))^{1/d}")
            up = i
    return lo, up


def si_certificate(T) -> tuple[bool, str]:
    """Sufficient condition for strong integrability, checked on the truncation."""
    if isinstance(T, MonomialGenerator):
        T = T.to_prepared()
    if T.cell is None:
        return False, "generator does not depend on y"
    if T.cell.upper is not None:
        return True, "bounded y-fibers"
    lam, strip = T.lam, T.strip
    wmin = _min_weight(T.series)
    if T.gamma is None or T.gamma.y_free():
        ok = always_below(lam.shift(-wmin), strip, -1)
        return ok, "Re(lam) - weight < -1" if ok else "a power-log term is not integrable"
    te = T.gamma
    tc = te.tcell
    d = tc.d
    lo, up = _canonical_tvars(T)
    for I, _ in te.Phi.active():
        m = I[lo] if lo is not None else 0
        n = I[up] if up is not None else 0
        w, _ = _rest_weight(te.Phi, I, (lo, up))
        Y = lam.shift(-w - wmin + Fraction(m * tc.alpha, d * d) - Fraction(n * tc.beta, d * d))
        r = te.rho.shift(Fraction(n - m, d))
        if not always_below(Y + r.shift(1).scale(Fraction(tc.alpha, d)), strip, -1):
            return False, f"term {list(I)} fails at the lower t-bound"
        if tc.bounded:
            if not always_below(Y + r.shift(1).scale(Fraction(tc.beta, d)), strip, -1):
                return False, f"term {list(I)} fails at the upper t-bound"
        elif not always_below(r, strip, -1):
            return False, f"term {list(I)} is not integrable in t"
    return True, "joint power bound"


def _merge_generators(gens: list) -> list:
    """Add coefficients of generators that agree up to the coefficient."""
    from .generators import _canon
    groups: dict = {}
    order = []
    for G in gens:
        k = _canon(replace(G, coeff=Coeff.one(), poles=EMPTY_POLES).to_json())
        if k in groups:
            H = groups[k]
            groups[k] = replace(H, coeff=H.coeff + G.coeff, poles=H.poles | G.poles)
        else:
            groups[k] = G
            order.append(k)
    return [groups[k] for k in order if not groups[k].coeff.is_zero()]


# ---------------------------------------------------------------------------
# t-exponent reduction

@dataclass
class ReduceResult:
    h: GeneratorSum
    trace: IBPTrace

    def to_json(self):
        return {"kind": "reduce_t", "result": self.h.to_json(), "trace": self.trace.to_json()}


def _boundary_generators(T: PreparedGenerator, Phi: StrongSeries, rho: LinExponent, nu: int,
                         lower: bool, lo, up) -> list:
    te = T.gamma
    tc, sigma, d = te.tcell, te.sigma, te.tcell.d
    if lower:
        E, pw, sign, other = tc.a0, tc.alpha, 1, up
    else:
        E, pw, sign, other = tc.b0, tc.beta, -1, lo
    base = T.coeff * _si(sigma) * _c(sign) * ppow(E, rho)
    lam = T.lam + rho.scale(Fraction(pw, d)) if pw else T.lam
    phases = T.phases
    if pw:
        phases = phases + (PreparedPhase(CoeffExpr.const(sigma) * E, pw, None, d),)
    else:
        base = base * Coeff.of(_cis(CoeffExpr.const(sigma) * E))
    logs = [(0, _logpow(E, nu))]
    if pw:
        logs = [(i, CoeffExpr.const(math.comb(nu, i) * Fraction(pw, d) ** i) * _logpow(E, nu - i))
                for i in range(nu + 1)]
    ratio = tc.a0 / tc.b0 if tc.b0 is not None else None
    gens = []
    for I, c in Phi.active():
        k = I[other] if other is not None else 0
        w, xc = _rest_weight(Phi, I, (lo, up))
        if k:
            xc = xc * _xpow(ratio, Fraction(k, d))
            w += Fraction(k * (tc.beta - tc.alpha), d * d)
        for i, lc in logs:
            coef = base * c * Coeff.of(xc * lc)
            if coef.is_zero():
                continue
            gens.append(PreparedGenerator(coef, T.strip, lam.shift(-w), T.mu + i, phases, None,
                                          T.cell, T.poles, T.series))
    return gens


def _reduce(T: PreparedGenerator, n: int) -> tuple[list, list, list]:
    te = T.gamma
    tc = te.tcell
    lo, up = _canonical_tvars(T)
    si = _si(te.sigma)
    state = {te.nu: te.Phi}
    cur = te.rho
    bterms, prov = [], []
    for j in range(n):
        new: dict = {}
        for v, Phi in sorted(state.items()):
            bterms += _boundary_generators(T, Phi, cur, v, True, lo, up)
            if tc.bounded:
                bterms += _boundary_generators(T, Phi, cur, v, False, lo, up)
            parts = [(v, Phi.scale(_lam_poly(cur)).add(Phi.t_derivative()))]
            if v > 0:
                parts.append((v - 1, Phi.scale(_c(v))))
            for k, S in parts:
                new[k] = S if k not in new else new[k].add(S)
        prov.append({"step": j, "exponent": cur.to_json(), "log_powers": sorted(state),
                     "rule": "integrate e^{sigma i t}, derive t^rho (log t)^nu Phi"})
        state = {v: S.scale(si) for v, S in new.items() if S.active()}
        cur = cur.shift(-1)
    red = []
    for v, S in sorted(state.items()):
        te2 = TranscendentalElement(tc, cur, v, S, te.sigma)
        red.append(replace(T, gamma=te2))
    return _merge_generators(bterms), red, prov


def _check_reducible(T) -> None:
    if not isinstance(T, PreparedGenerator) or T.gamma is None:
        raise PreconditionViolated("t-reduction needs a generator with a transcendental element")
    if T.cell is None or T.cell.upper is not None:
        raise PreconditionViolated("t-reduction needs unbounded y-fibers")
    if not T.gamma.tcell.trivial_units:
        raise NotPrepared("t-reduction needs trivial t-cell units")
    if not T.gamma.Phi.is_exact():
        raise PreconditionViolated("boundary terms need an exact series Phi")


def ibp_reduce_t(T: PreparedGenerator, k0: int) -> ReduceResult:
    """Integrate by parts in t until Re(rho) drops below -k0."""
    _check_reducible(T)
    M = floor_frac(T.gamma.rho.sup_re(T.strip))
    n = max(0, M + int(k0) + 1)
    bterms, red, prov = _reduce(T, n)
    tr = IBPTrace(bterms, red, n, T.strip, prov, T.all_poles())
    tr.provenance.append({"rule": "upper boundary", "value": "0" if not T.gamma.tcell.bounded
                          else "sigma i terms at b~"})
    h = GeneratorSum.make(tr.terms(), T.strip, T.all_poles(), T.cell.param_dim)
    return ReduceResult(h, tr)


# ---------------------------------------------------------------------------
# splitting

@dataclass
class SplitResult:
    strongly_integrable: list
    monomial: list
    poles_out: PoleSet
    grid_d: int = 1
    grid_data: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def terms(self) -> list:
        return list(self.monomial) + list(self.strongly_integrable)

    def evaluate(self, s, x=(), y=None) -> complex:
        return sum((T.evaluate(s, x, y) for T in self.terms()), 0j)

    def error_bound(self, s, x=(), y=None) -> float:
        return sum(T.error_bound(s, x, y) for T in self.terms())

    def to_json(self):
        return {"kind": "split", "poles_out": self.poles_out.to_json(),
                "monomial": [T.to_json() for T in self.monomial],
                "strongly_integrable": [T.to_json() for T in self.strongly_integrable],
                "grid": {"d": self.grid_d,
                         "data": [[rat_str(l), rat_str(r)] for l, r in self.grid_data]},
                "notes": self.notes}


class _SplitAcc:
    def __init__(self):
        self.si: list = []
        self.mono: list = []
        self.notes: list = []

    def add_si(self, T: PreparedGenerator) -> None:
        ok, why = si_certificate(T)
        if not ok:
            raise NotPrepared(f"remainder is not strongly integrable: {why}")
        self.si.append(T)

    def result(self, T) -> SplitResult:
        from .generators import _canon
        groups: dict = {}
        order = []
        for M in self.mono:
            D = math.lcm(M.lam.d, M.Q.d)
            k = (M.lam.key(), M.mu, _canon({str(a): b.to_json()
                                           for a, b in M.Q.with_denominator(D).items()}),
                 _canon(M.cell.to_json()))
            if k in groups:
                G = groups[k]
                groups[k] = replace(G, coeff=G.coeff + M.coeff, poles=G.poles | M.poles)
            else:
                groups[k] = M
                order.append(k)
        mono = [groups[k] for k in order if not groups[k].coeff.is_zero()]
        poles = T.all_poles() if hasattr(T, "all_poles") else EMPTY_POLES
        for G in mono + self.si:
            poles = poles | G.all_poles()
        D = 1
        for M in mono:
            D = math.lcm(D, M.lam.d)
        data = []
        for M in mono:
            L = M.lam.with_denominator(D)
            data.append((Fraction(L.ell), L.eta.re))
        return SplitResult(self.si, mono, poles, D, data, self.notes)


def split_prepared(T) -> SplitResult:
    """Write T as monomial generators plus strongly integrable generators."""
    acc = _SplitAcc()
    _split_into(T, acc)
    return acc.result(T)


def split_sum(h: GeneratorSum) -> SplitResult:
    """Split every term of a sum; equal monomial data are merged."""
    acc = _SplitAcc()
    for T in h.terms:
        if getattr(T, "cell", None) is None:
            raise PreconditionViolated("splitting in y needs terms on a cell")
        _split_into(T, acc)
    return acc.result(None)


def _split_into(T, acc: _SplitAcc) -> None:
    if isinstance(T, MonomialGenerator):
        if T.cell.upper is not None or always_below(T.lam, T.strip, -1):
            acc.add_si(T.to_prepared())
        else:
            acc.mono.append(T)
        return
    if not isinstance(T, PreparedGenerator):
        raise PreconditionViolated("splitting takes prepared or monomial generators")
    if T.cell is None:
        raise PreconditionViolated("a y-free generator has nothing to split")
    if T.cell.upper is not None:
        acc.add_si(T)
        return
    if T.gamma is None or T.gamma.y_free():
        _naive_split(T, acc)
        return
    tc = T.gamma.tcell
    if not tc.trivial_units:
        raise NotPrepared("splitting needs trivial t-cell units")
    if tc.alpha == 0 and tc.beta == 0:
        _split_case1(T, acc)
    elif tc.alpha > 0:
        _split_case2(T, acc)
    else:
        _split_case3(T, acc)


@dataclass
class NaiveParts:
    """A naive generator as g * cis(c0) * y^lam (log y)^mu e^{iQ} * series."""

    g: Coeff
    c0: CoeffExpr
    Q: OscPolynomial
    series: StrongSeries
    tail_weight: Fraction

    @property
    def cis0(self) -> Coeff:
        return Coeff.one() if self.c0.is_const(0) else Coeff.of(_cis(self.c0))


def naive_parts(T: PreparedGenerator, K: int | None = None) -> NaiveParts:
    """Sort the phases of a naive generator into a polynomial part, a
    constant and a decaying part; the decaying part joins the series
    through a truncated exponential of order K."""
    strip, lam, a = T.strip, T.lam, T.cell.lower
    g = T.coeff if T.gamma is None else T.coeff * GammaFactor(T.gamma)
    Q = OscPolynomial()
    c0 = CoeffExpr.const(0)
    neg = []
    for p in T.phases:
        e0 = Fraction(p.omega, p.d)
        parts = [(e0, p.phi0)]
        if not p.trivial_unit:
            U = p.unit
            if not U.is_exact() or not U.s_free():
                raise NotPrepared("phase units must be exact and s-free")
            parts = []
            for I, c in U.active():
                w, xc = _rest_weight(U, I)
                parts.append((e0 - w, p.phi0 * c.to_expr() * xc))
        for e, cf in parts:
            if e > 0:
                Q = Q + OscPolynomial.build(e.denominator, {e.numerator: cf})
            elif e == 0:
                c0 = c0 + cf
            else:
                neg.append((e, cf))
    series = T.series if T.series is not None else StrongSeries.one()
    tw = _tail_weight(series)
    if neg:
        D = 1
        for e, _ in neg:
            D = math.lcm(D, e.denominator)
        Z = SeriesVar("y_lower", a, D)
        psi: dict = {}
        for e, cf in neg:
            k = (int(-e * D),)
            psi[k] = psi.get(k, Coeff.zero()) + Coeff.of(cf * _xpow(a, e))
        if K is None:
            C = lam.sup_re(strip) if lam.ell else lam.real_part(0)
            K = max(0, ceil_frac(D * (C + 1)) + 1)
        series = series.multiply(exp_series(StrongSeries.build((Z,), psi, None), K))
        tw = min(tw, Fraction(K + 1, D))
    return NaiveParts(g, c0, Q, series, tw)


def _naive_split(T: PreparedGenerator, acc: _SplitAcc) -> None:
    strip, lam = T.strip, T.lam
    np_ = naive_parts(T)
    g, Q, series = np_.g, np_.Q, np_.series
    if not always_below(lam.shift(-np_.tail_weight), strip, -1):
        raise TruncationOverflow("series truncated below the critical order")
    mon: dict = {}
    rest = {}
    for I, c in series.active():
        w, xc = _rest_weight(series, I)
        li = lam.shift(-w)
        if always_below(li, strip, -1):
            rest[I] = c
        else:
            mon[li] = mon.get(li, Coeff.zero()) + c * Coeff.of(xc)
    cis0 = np_.cis0
    for li, coef in mon.items():
        acc.mono.append(MonomialGenerator(g * cis0 * coef, strip, li, T.mu, Q, T.cell, T.poles))
    if rest or not series.tail.is_zero():
        S = StrongSeries.build(series.vars, rest, series.order, series.tail)
        acc.add_si(PreparedGenerator(g * cis0, strip, lam, T.mu, phases_from_polynomial(Q), None,
                                     T.cell, T.poles, None if S.is_one() else S))


def _split_case1(T: PreparedGenerator, acc: _SplitAcc) -> None:
    """Bounds free of y: expand Phi in its y-variables."""
    te = T.gamma
    Phi = te.Phi
    ypos = set()
    for i, v in enumerate(Phi.vars):
        if v.uses_t and v.power:
            raise NotPrepared("t-variables with y-powers need alpha or beta > 0")
        if v.kind in ("y_lower", "y_upper"):
            ypos.add(i)
    groups: dict = {}
    for I, c in Phi.active():
        J = tuple(I[i] if i in ypos else 0 for i in range(len(I)))
        K = tuple(0 if i in ypos else I[i] for i in range(len(I)))
        groups.setdefault(J, {})[K] = c
    rest = {}
    for J, sub in groups.items():
        w, xc = _rest_weight(Phi, J)
        li = T.lam.shift(-w)
        if always_below(li.shift(-_min_weight(T.series)), T.strip, -1):
            for K, c in sub.items():
                rest[tuple(a + b for a, b in zip(J, K))] = c
            continue
        PhiJ = StrongSeries.build(Phi.vars, sub, Phi.order)
        G = PreparedGenerator(T.coeff * Coeff.of(xc), T.strip, li, T.mu, T.phases,
                              replace(te, Phi=PhiJ), T.cell, T.poles, T.series)
        _split_into(G, acc)
    if rest or not Phi.tail.is_zero():
        S = StrongSeries.build(Phi.vars, rest, Phi.order, Phi.tail)
        acc.add_si(replace(T, gamma=replace(te, Phi=S)))
    acc.notes.append("case alpha = beta = 0: y-variables of Phi expanded")


def _case_steps(T: PreparedGenerator, pw: int) -> int:
    tc = T.gamma.tcell
    C = T.lam.sup_re(T.strip) if T.lam.ell else T.lam.real_part(0)
    N0 = ceil_frac(Fraction(tc.d * C + tc.Delta + tc.d, pw)) + 1
    M = floor_frac(T.gamma.rho.sup_re(T.strip))
    return max(0, M + max(0, N0) + 1)


def _split_case2(T: PreparedGenerator, acc: _SplitAcc) -> None:
    _check_reducible(T)
    n = _case_steps(T, T.gamma.tcell.alpha)
    for extra in range(MAX_EXTRA_STEPS):
        bterms, red, _ = _reduce(T, n + extra)
        if all(si_certificate(R)[0] for R in red):
            break
    else:
        raise TruncationOverflow("no certified t-reduction within the step budget")
    for B in bterms:
        _split_into(B, acc)
    for R in red:
        acc.add_si(R)
    acc.notes.append(f"case alpha > 0: {n + extra} integrations by parts in t")


def _case3_plan(R: PreparedGenerator):
    te = R.gamma
    tc, d = te.tcell, te.tcell.d
    lo, up = _canonical_tvars(R)
    wmin = _min_weight(R.series)
    high, lows = {}, []
    for I, c in te.Phi.active():
        m = I[lo] if lo is not None else 0
        n = I[up] if up is not None else 0
        w, xc = _rest_weight(te.Phi, I, (lo, up))
        Y = R.lam.shift(-w - Fraction(n * tc.beta, d * d))
        r = te.rho.shift(Fraction(n - m, d))
        if always_below(Y.shift(-wmin), R.strip, -1) and \
                always_below((Y + r.shift(1).scale(Fraction(tc.beta, d))).shift(-wmin), R.strip, -1):
            high[I] = c
            continue
        if not always_below(r, R.strip, -1):
            return None
        xc = xc * _xpow(tc.a0, Fraction(m, d)) * _xpow(tc.b0, Fraction(-n, d))
        lows.append((Y, r, c * Coeff.of(xc)))
    return high, lows


def _split_case3(T: PreparedGenerator, acc: _SplitAcc) -> None:
    _check_reducible(T)
    n = _case_steps(T, T.gamma.tcell.beta)
    for extra in range(MAX_EXTRA_STEPS):
        bterms, red, _ = _reduce(T, n + extra)
        plans = [_case3_plan(R) for R in red]
        if all(p is not None for p in plans):
            break
    else:
        raise TruncationOverflow("no t-reduction separates the Y2-degrees within the budget")
    for B in bterms:
        _split_into(B, acc)
    for R, (high, lows) in zip(red, plans):
        te = R.gamma
        tc = te.tcell
        if high:
            S = StrongSeries.build(te.Phi.vars, high, te.Phi.order)
            acc.add_si(replace(R, gamma=replace(te, Phi=S)))
        for Y, r, coef in lows:
            g1 = TranscendentalElement(TCellData(tc.a0), r, te.nu, StrongSeries.one(), te.sigma)
            g2 = TranscendentalElement(TCellData(tc.b0, None, alpha=tc.beta, d=tc.d), r, te.nu,
                                       StrongSeries.one(), te.sigma)
            base = dict(strip=R.strip, lam=Y, mu=R.mu, phases=R.phases, cell=R.cell,
                        poles=R.poles, series=R.series)
            _split_into(PreparedGenerator(R.coeff * coef, gamma=g1, **base), acc)
            _split_into(PreparedGenerator(-(R.coeff * coef), gamma=g2, **base), acc)
    acc.notes.append(f"case alpha = 0 < beta: {n + extra} integrations by parts in t")


# ---------------------------------------------------------------------------
# truncated series in one variable with Coeff entries

def _ts_mul(a: list, b: list, K: int) -> list:
    out = [Coeff.zero() for _ in range(K + 1)]
    for i, ai in enumerate(a[:K + 1]):
        if ai.is_zero():
            continue
        for j, bj in enumerate(b[:K + 1 - i]):
            if not bj.is_zero():
                out[i + j] = out[i + j] + ai * bj
    return out


def _binoms(alpha, K: int) -> list:
    """binom(alpha, j) for j <= K; alpha is a Fraction or a LinExponent."""
    out = [Coeff.one()]
    for j in range(1, K + 1):
        if isinstance(alpha, LinExponent):
            f = _lam_poly(alpha.shift(-(j - 1)))
        else:
            f = _c(alpha - j + 1)
        out.append(out[-1] * f * _c(Fraction(1, j)))
    return out


def _ts_pow1(a: list, alpha, K: int) -> list:
    """(1 + a)^alpha for a series a without constant term."""
    out = [Coeff.one()] + [Coeff.zero() for _ in range(K)]
    power = list(out)
    for j, bj in enumerate(_binoms(alpha, K)[1:], start=1):
        power = _ts_mul(power, a, K)
        if all(p.is_zero() for p in power):
            break
        out = [o + bj * p for o, p in zip(out, power)]
    return out


def _ts_log1(a: list, K: int) -> list:
    out = [Coeff.zero() for _ in range(K + 1)]
    power = [Coeff.one()] + [Coeff.zero() for _ in range(K)]
    for j in range(1, K + 1):
        power = _ts_mul(power, a, K)
        if all(p.is_zero() for p in power):
            break
        out = [o + _c(Fraction((-1) ** (j + 1), j)) * p for o, p in zip(out, power)]
    return out


# ---------------------------------------------------------------------------
# inverse of a phase polynomial

@dataclass(frozen=True)
class PhaseInverse:
    """phi(z) = c z^{d/n} (1 + eps2(z)) inverts z = sign*Q(y) near infinity.

    eps2[k] multiplies z^{-k/n}; ``deriv[k]`` are the coefficients of
    1 + eps3 with phi'(z) = c (d/n) z^{d/n - 1} (1 + eps3).
    """

    n: int
    d: int
    sign: int
    c: CoeffExpr
    eps2: tuple
    deriv: tuple
    order: int
    Qhat: OscPolynomial

    @property
    def exact(self) -> bool:
        return all(e.is_zero() for e in self.eps2[1:])

    def phi(self, x, z: float) -> float:
        r = sum(complex(e.evaluate(0, x)) * z ** (-k / self.n) for k, e in enumerate(self.eps2))
        return (self.c.real(x) * z ** (self.d / self.n) * r).real

    def dphi(self, x, z: float) -> float:
        r = sum(complex(e.evaluate(0, x)) * z ** (-k / self.n) for k, e in enumerate(self.deriv))
        return (self.c.real(x) * self.d / self.n * z ** (self.d / self.n - 1) * r).real

    def residual(self, x, z: float) -> float:
        return abs(self.Qhat.value(x, self.phi(x, z)) - z)

    def to_json(self):
        return {"n": self.n, "d": self.d, "sign": self.sign, "c": self.c.to_json(),
                "eps2": [e.to_json() for e in self.eps2],
                "deriv": [e.to_json() for e in self.deriv], "order": self.order}


def _default_xs(pd: int) -> list:
    return [tuple([1.0] * pd)]


def _phase_sign(Q: OscPolynomial, xs) -> int:
    vals = [Q.leading.real(x) for x in xs]
    if any(abs(v) < 1e-300 for v in vals):
        raise ZeroLeadingCoefficient("leading phase coefficient vanishes at a sample")
    if all(v > 0 for v in vals):
        return 1
    if all(v < 0 for v in vals):
        return -1
    raise ZeroLeadingCoefficient("leading phase coefficient changes sign; split the x-domain")


def check_monotone(Qhat: OscPolynomial, a: CoeffExpr, xs, samples: int = 64) -> None:
    """Q' > 0 and Q(a) > 0 on sampled fibers [a, a*10^6]."""
    for x in xs:
        a0 = a.real(x)
        if Qhat.value(x, a0) <= 0:
            raise NotPrepared(f"phase must be positive at the lower bound, x={list(x)}")
        for y in a0 * np.logspace(0, 6, samples):
            if Qhat.derivative(x, float(y)) <= 0:
                raise NotMonotone(f"phase is not increasing at y={float(y):.6g}, x={list(x)}")


def invert_phase_series(Q: OscPolynomial, K: int, xs=None) -> PhaseInverse:
    """Series inverse of y -> sign*Q(y) to K terms beyond the leading one."""
    if Q.is_zero():
        raise PreconditionViolated("cannot invert a zero phase")
    xs = xs if xs is not None else [()]
    sign = _phase_sign(Q, xs)
    Qhat = Q if sign > 0 else -Q
    n, d = Qhat.degree, Qhat.d
    bn = Qhat.leading
    cs = dict(Qhat.coeffs)
    K = max(0, int(K))
    # U = (1 + sum_j beta_j q^j U^{-j})^{-1/n}, u = v U(q), q = 1/v
    beta = [Coeff.zero() for _ in range(K + 1)]
    for j in range(1, min(n - 1, K) + 1):
        if n - j in cs:
            beta[j] = Coeff.of(cs[n - j] / bn)
    U = [Coeff.one()] + [Coeff.zero() for _ in range(K)]
    if any(not b.is_zero() for b in beta):
        for _ in range(K + 1):
            Um1 = [Coeff.zero()] + U[1:]
            W = [Coeff.zero() for _ in range(K + 1)]
            for j in range(1, K + 1):
                if beta[j].is_zero():
                    continue
                Uj = _ts_pow1(Um1, Fraction(-j), K - j)
                for k, u in enumerate(Uj):
                    W[j + k] = W[j + k] + beta[j] * u
            U = _ts_pow1(W, Fraction(-1, n), K)
    Ud = _ts_pow1([Coeff.zero()] + U[1:], Fraction(d), K)
    eps2, deriv = [], []
    for k, e in enumerate(Ud):
        ez = e if k == 0 else e * Coeff.of(_xpow(bn, Fraction(k, n)))
        eps2.append(ez)
        deriv.append(ez * _c(1 - Fraction(k, d)))
    c = _xpow(bn, Fraction(-d, n))
    return PhaseInverse(n, d, sign, c, tuple(eps2), tuple(deriv), K, Qhat)


# ---------------------------------------------------------------------------
# integration of monomial and strongly integrable generators

@dataclass
class MonomialIntegral:
    locus: object
    H: GeneratorSum
    trace: IBPTrace
    poles: PoleSet
    inverse: PhaseInverse | None = None

    def to_json(self):
        return {"kind": "monomial_integral", "locus": self.locus.to_json(),
                "H": self.H.to_json(), "trace": self.trace.to_json(),
                "poles": self.poles.to_json(),
                "inverse": None if self.inverse is None else self.inverse.to_json()}


def _critical_count(lt: LinExponent, n: int, strip: Strip) -> int:
    m = 0
    while not always_below(lt.shift(-Fraction(m, n)), strip, -1):
        m += 1
    return m


def integrate_monomial(T: MonomialGenerator, xs=None) -> MonomialIntegral:
    """H(s,x) with H = int_a^inf T dy wherever the integral exists."""
    from .grid import monomial_locus
    if T.cell.upper is not None or T.cell.lower is None:
        raise PreconditionViolated("monomial integration needs fibers (a, inf)")
    locus, PA = monomial_locus([T], T.strip, T.poles)
    strip, a, f = T.strip, T.cell.lower, T.coeff
    xs = xs if xs is not None else _default_xs(T.cell.param_dim)
    if T.Q.is_zero():
        G = PreparedGenerator(f * powerlog_coeff(T.lam.shift(1), T.mu, a, None), strip, poles=PA)
        tr = IBPTrace([], [G], 0, strip, [{"rule": "power-log closed form"}], PA | G.all_poles())
        return MonomialIntegral(locus, GeneratorSum.make([G], strip, tr.poles), tr, tr.poles)
    n0 = T.Q.degree
    dQ = T.Q.d
    lt = T.lam.scale(Fraction(dQ, n0)).shift(Fraction(dQ, n0) - 1)
    m_c = _critical_count(lt, n0, strip)
    inv = invert_phase_series(T.Q, max(m_c - 1, 0), xs)
    n, d, sigma = inv.n, inv.d, inv.sign
    check_monotone(inv.Qhat, a, xs)
    zlo = CoeffExpr.const(0)
    for k, ck in inv.Qhat.coeffs:
        zlo = zlo + ck * _xpow(a, Fraction(k, d))
    K = inv.order
    P1 = _ts_pow1([Coeff.zero()] + list(inv.eps2[1:]), T.lam, K)
    P12 = _ts_mul(P1, list(inv.deriv), K)
    G = _ts_log1([Coeff.zero()] + list(inv.eps2[1:]), K)
    G[0] = G[0] + Coeff.of(inv.c.log())
    base = f * _c(Fraction(d, n)) * ppow(inv.c, T.lam.shift(1))
    A: dict = {}
    Gp = [Coeff.one()] + [Coeff.zero() for _ in range(K)]
    Gpows = [Gp]
    for _ in range(T.mu):
        Gp = _ts_mul(Gp, G, K)
        Gpows.append(Gp)
    for i in range(T.mu + 1):
        ser = _ts_mul(P12, Gpows[T.mu - i], K)
        bc = base * _c(math.comb(T.mu, i) * Fraction(d, n) ** i)
        for m, cm in enumerate(ser):
            if not cm.is_zero():
                A[(m, i)] = bc * cm
    traces, gens, subtract = [], [], []
    for (m, i), cf in sorted(A.items()):
        lm = lt.shift(-Fraction(m, n))
        if not always_below(lm, strip, -1):
            tr = _extend_basic(zlo, lm, i, sigma, strip, cf, PA)
            traces.append(tr)
            gens += tr.terms()
            subtract.append(Amp(-cf, lm, i, inv.Qhat, True))
        elif inv.exact:
            te = TranscendentalElement(TCellData(zlo), lm, i, StrongSeries.one(), sigma)
            gens.append(PreparedGenerator(cf, strip, gamma=te, poles=PA))
    if not inv.exact:
        node = OscAmpIntegral((Amp(f, T.lam, T.mu),) + tuple(subtract), T.Q, a, None,
                              "remainder after the critical terms of the inverted phase")
        gens.append(PreparedGenerator(Coeff.of(node), strip, poles=PA))
    tr = merge_traces(traces, strip) if traces else IBPTrace([], [], 0, strip)
    tr.provenance.insert(0, {"rule": "substitute z = Q(y)", "exponent": lt.to_json(),
                             "critical_terms": m_c, "exact_inverse": inv.exact})
    H = GeneratorSum.make(gens, strip, PA)
    tr.poles = H.poles
    return MonomialIntegral(locus, H, tr, H.poles, inv)


def integrate_strongly_integrable(T) -> GeneratorSum:
    """int T dy over its fiber, by Fubini where a closed form exists."""
    if isinstance(T, MonomialGenerator):
        T = T.to_prepared()
    ok, why = si_certificate(T)
    if not ok:
        raise PreconditionViolated(f"term is not certified strongly integrable: {why}")
    strip, a, b = T.strip, T.cell.lower, T.cell.upper
    P = T.all_poles()
    exact = T.series is None or T.series.is_exact()
    gens = []
    if not T.phases and exact and (T.gamma is None or T.gamma.y_free()):
        g = T.coeff if T.gamma is None else T.coeff * GammaFactor(T.gamma)
        for w, cI in _y_series_terms(T, T.series):
            gens.append(PreparedGenerator(
                g * cI * powerlog_coeff(T.lam.shift(1 - w), T.mu, a, b), strip, poles=P))
    elif not T.phases and exact and T.gamma.tcell.y_free and T.gamma.Phi.is_exact():
        te = T.gamma
        Phi = te.Phi
        ypos = {i for i, v in enumerate(Phi.vars) if v.kind.startswith("y_")}
        groups: dict = {}
        for I, c in Phi.active():
            J = tuple(I[i] if i in ypos else 0 for i in range(len(I)))
            K = tuple(0 if i in ypos else I[i] for i in range(len(I)))
            groups.setdefault(J, {})[K] = c
        for J, sub in groups.items():
            wJ, xJ = _rest_weight(Phi, J)
            gJ = GammaFactor(replace(te, Phi=StrongSeries.build(Phi.vars, sub, Phi.order)))
            for w, cI in _y_series_terms(T, T.series):
                gens.append(PreparedGenerator(
                    T.coeff * cI * Coeff.of(xJ) * gJ
                    * powerlog_coeff(T.lam.shift(1 - w - wJ), T.mu, a, b), strip, poles=P))
    else:
        node = TermIntegral((replace(T, coeff=Coeff.one()),), a, b, "strongly integrable term")
        gens.append(PreparedGenerator(T.coeff * Coeff.of(node), strip, poles=P))
    return GeneratorSum.make(gens, strip, P, T.cell.param_dim)


@dataclass
class IntegrationResult:
    locus: object
    H: GeneratorSum
    poles: PoleSet
    split: SplitResult
    monomials: list

    def to_json(self):
        return {"kind": "integration", "locus": self.locus.to_json(), "H": self.H.to_json(),
                "poles": self.poles.to_json(), "split": self.split.to_json(),
                "monomials": [m.to_json() for m in self.monomials]}


def integrate_sum(h: GeneratorSum, xs=None) -> IntegrationResult:
    """Split every term, integrate the parts, and build the integration locus."""
    from .grid import GCell, Locus, LocusCell, monomial_locus
    sp = split_sum(h)
    strip = h.strip
    P = h.poles | sp.poles_out
    xs = xs if xs is not None else _default_xs(h.param_dim)
    if sp.monomial:
        locus, PA = monomial_locus(sp.monomial, strip, P)
    else:
        locus = Locus(strip, [LocusCell(GCell(strip.p, strip.q), ())], (), P)
        PA = P
    gens, mons = [], []
    for M in sp.monomial:
        mi = integrate_monomial(replace(M, poles=M.poles | PA), xs)
        mons.append(mi)
        gens += list(mi.H.terms)
        PA = PA | mi.poles
    for T in sp.strongly_integrable:
        gens += list(integrate_strongly_integrable(T).terms)
    gens = [replace(G, poles=G.poles | PA) for G in gens]
    H = GeneratorSum.make(gens, strip, PA, h.param_dim)
    locus.excluded = H.poles
    return IntegrationResult(locus, H, H.poles, sp, mons)


def reduce_t_steps(T: PreparedGenerator, n: int) -> tuple[list, list]:
    """Boundary generators and reduced generators after n integrations by parts in t."""
    _check_reducible(T)
    bterms, red, _ = _reduce(T, n)
    return bterms, red
