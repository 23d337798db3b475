"""The term model.

Cells and charts, truncated strong series with tail bounds, prepared
phases, transcendental elements, prepared and monomial generators, and
finite sums of them.  Every term evaluates numerically; anything that is
an integral (a transcendental element, a deferred node) is delegated to
the quadrature oracle in :mod:`oscint.numeric`.

Coefficients are :class:`Coeff` objects: finite sums of products of a
rational-in-s coefficient with a few closed-form factor kinds
(parametric powers a(x)^{lambda(s)}, power-log integrals, y-free
transcendental elements, deferred numeric integrals).
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Iterable, Sequence

import numpy as np

from . import numeric
from .kernel import (
    CoeffExpr, DomainError, Divergent, ExactComplex, LinExponent, MeroCoeff,
    NotPrepared, OutOfCell, ParseError, PoleHit, PoleSet, Poly, PreconditionViolated,
    SCHEMA, Strip, TruncationOverflow, EMPTY_POLES, ONE, ZERO, eval_mero, frac,
    rat_str,
)

SERIES_BUDGET = 512
ZERO_EXP = LinExponent(0, ZERO, 1)


def _cpow(z: complex, w: complex) -> complex:
    """Principal power z^w."""
    if w == 0:
        return 1.0 + 0j
    if isinstance(z, (int, float)) and z > 0:
        return cmath.exp(w * math.log(z))
    z = complex(z)
    if z == 0:
        raise DomainError("zero base in complex power")
    return cmath.exp(w * cmath.log(z))


def _clog(z: complex) -> complex:
    if isinstance(z, (int, float)) and z > 0:
        return complex(math.log(z))
    return cmath.log(complex(z))


def _canon(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _expr_json(e: CoeffExpr | None):
    return None if e is None else e.to_json()


def _expr_from(obj, pointer: str) -> CoeffExpr | None:
    return None if obj is None else CoeffExpr.from_json(obj, pointer)


# ---------------------------------------------------------------------------
# power-log integrals, the closed form behind Mellin transforms

def powerlog_value(w: complex, mu: int, a: float, b: float | None) -> complex:
    """int_a^b y^{w-1} (log y)^mu dy; b=None means +infinity."""
    if a <= 0:
        raise DomainError("power-log integral needs a positive lower bound")
    la = math.log(a)
    if b is None:
        if w.real >= 0 if isinstance(w, complex) else w >= 0:
            raise Divergent(f"int^inf y^(w-1) (log y)^{mu} diverges for Re w = {complex(w).real}")
        return -_powerlog_antider(complex(w), mu, la)
    lb = math.log(b)
    w = complex(w)
    if abs(w) < 1e-6:
        # Taylor series in w, avoids cancellation near the removable point
        out = 0j
        for n in range(12):
            p = mu + n + 1
            out += w ** n / math.factorial(n) * (lb ** p - la ** p) / p
        return out
    return _powerlog_antider(w, mu, lb) - _powerlog_antider(w, mu, la)


def _powerlog_antider(w: complex, mu: int, u: float) -> complex:
    # e^{wu} sum_k (-1)^k mu!/(mu-k)! u^{mu-k} w^{-(k+1)}
    acc = 0j
    for k in range(mu + 1):
        acc += (-1) ** k * math.factorial(mu) / math.factorial(mu - k) * u ** (mu - k) / w ** (k + 1)
    return cmath.exp(w * u) * acc


# ---------------------------------------------------------------------------
# coefficient factors

@dataclass(frozen=True)
class ParamPower:
    """base(x)^{exp(s)} with a positive base."""

    base: CoeffExpr
    exp: LinExponent

    def evaluate(self, s, x) -> complex:
        b = self.base.evaluate(x)
        if abs(b.imag) > 1e-12 * max(1.0, abs(b.real)) or b.real <= 0:
            raise DomainError(f"parametric power needs a positive base, got {b}")
        return cmath.exp(self.exp(s) * math.log(b.real))

    def poles(self) -> PoleSet:
        return EMPTY_POLES

    def s_free(self) -> bool:
        return self.exp.ell == 0

    def to_json(self):
        return {"kind": "ppow", "base": self.base.to_json(), "exp": self.exp.to_json()}


@dataclass(frozen=True)
class PowerLogIntegral:
    """int_lower^upper y^{w(s)-1} (log y)^mu dy (upper None = infinity)."""

    w: LinExponent
    mu: int
    lower: CoeffExpr
    upper: CoeffExpr | None = None

    def evaluate(self, s, x) -> complex:
        a = self.lower.real(x)
        b = None if self.upper is None else self.upper.real(x)
        w = self.w(s)
        if b is None and abs(w) < 1e-9:
            raise PoleHit(f"power-log integral has a pole at s={s}")
        return powerlog_value(w, self.mu, a, b)

    def poles(self) -> PoleSet:
        if self.upper is not None:
            return EMPTY_POLES  # entire in s: w = 0 is removable
        z = self.w.solve(0)
        return EMPTY_POLES if z is None else PoleSet.of([z])

    def s_free(self) -> bool:
        return self.w.ell == 0

    def to_json(self):
        return {"kind": "powerlog", "w": self.w.to_json(), "mu": self.mu,
                "lower": self.lower.to_json(), "upper": _expr_json(self.upper)}


@dataclass(frozen=True)
class GammaFactor:
    """A transcendental element that does not depend on y."""

    te: "TranscendentalElement"

    def evaluate(self, s, x) -> complex:
        return self.te.evaluate(s, x, None)

    def poles(self) -> PoleSet:
        return self.te.poles()

    def s_free(self) -> bool:
        return self.te.s_free()

    def to_json(self):
        return {"kind": "gamma", "te": self.te.to_json()}


@dataclass(frozen=True)
class Amp:
    """coeff(s,x) * B^{lam(s)} (log B)^mu [* B'] with B = y or a polynomial Q(x,y)."""

    coeff: "Coeff"
    lam: LinExponent
    mu: int = 0
    base: "OscPolynomial | None" = None
    dbase: bool = False

    def evaluate(self, s, x, y: float, cval: complex | None = None) -> complex:
        if self.base is None:
            B, dB = y, 1.0
        else:
            B, dB = self.base.value(x, y), self.base.derivative(x, y)
        if cval is None:
            cval = self.coeff.evaluate(s, x)
        v = cval * _cpow(B, self.lam(s))
        if self.mu:
            v *= _clog(B) ** self.mu
        if self.dbase:
            v *= dB
        return v

    def to_json(self):
        return {"coeff": self.coeff.to_json(), "lam": self.lam.to_json(), "mu": self.mu,
                "base": None if self.base is None else self.base.to_json(),
                "dbase": self.dbase}

    @classmethod
    def from_json(cls, obj, pointer=""):
        return cls(Coeff.from_json(obj["coeff"], pointer + "/coeff"),
                   LinExponent.from_json(obj["lam"]), int(obj.get("mu", 0)),
                   None if obj.get("base") is None else OscPolynomial.from_json(obj["base"]),
                   bool(obj.get("dbase", False)))


@dataclass(frozen=True)
class OscAmpIntegral:
    """Deferred node: int_lower^upper (sum of amps)(y) e^{iQ(x,y)} dy.

    Used where no closed form exists; the value is an oracle evaluation.
    The label says where the node came from.
    """

    amps: tuple
    Q: "OscPolynomial | None"
    lower: CoeffExpr
    upper: CoeffExpr | None = None
    label: str = ""

    def evaluate(self, s, x) -> complex:
        a = self.lower.real(x)
        b = math.inf if self.upper is None else self.upper.real(x)
        Q = self.Q

        cvals = [am.coeff.evaluate(s, x) for am in self.amps]

        def G(y):
            return sum(am.evaluate(s, x, y, c) for am, c in zip(self.amps, cvals))

        if Q is None or Q.is_zero():
            res = numeric.quad(numeric.QuadratureRequest(G, a, b, None))
            return res.value
        if math.isinf(b):
            return numeric.quad_nonlinear_phase(G, lambda y: Q.value(x, y), a).value
        res = numeric.quad(numeric.QuadratureRequest(
            lambda y: G(y) * cmath.exp(1j * Q.value(x, y)), a, b, None))
        return res.value

    def poles(self) -> PoleSet:
        out = EMPTY_POLES
        for am in self.amps:
            out = out | am.coeff.poles()
        return out

    def s_free(self) -> bool:
        return all(am.lam.ell == 0 and am.coeff.is_s_free() for am in self.amps)

    def to_json(self):
        return {"kind": "oscamp", "amps": [a.to_json() for a in self.amps],
                "Q": None if self.Q is None else self.Q.to_json(),
                "lower": self.lower.to_json(), "upper": _expr_json(self.upper),
                "label": self.label}


@dataclass(frozen=True)
class TermIntegral:
    """Deferred node: int_lower^upper sum(terms)(s,x,y) dy for absolutely
    integrable terms (a Fubini swap that has no closed form)."""

    terms: tuple
    lower: CoeffExpr
    upper: CoeffExpr | None = None
    label: str = ""

    def evaluate(self, s, x) -> complex:
        a = self.lower.real(x)
        b = math.inf if self.upper is None else self.upper.real(x)

        plain, total = [], 0j
        for T in self.terms:
            T = T.to_prepared() if isinstance(T, MonomialGenerator) else T
            if math.isinf(b) and isinstance(T, PreparedGenerator) and T.phases:
                # oscillatory tail: integrate along the phase levels
                amp = replace(T, phases=())
                total += numeric.quad_nonlinear_phase(
                    lambda y, amp=amp: amp.evaluate(s, x, y),
                    lambda y, ph=T.phases: sum(p.value(x, y) for p in ph), a).value
            else:
                plain.append(T)
        if plain:
            def G(y):
                return sum(_eval_in_cell(T, s, x, y) for T in plain)
            total += numeric.quad(numeric.QuadratureRequest(G, a, b, None, tol=1e-10)).value
        return total

    def poles(self) -> PoleSet:
        out = EMPTY_POLES
        for T in self.terms:
            out = out | term_poles(T)
        return out

    def s_free(self) -> bool:
        return all(not term_s_dependent(T) for T in self.terms)

    def to_json(self):
        return {"kind": "terms", "terms": [term_to_json(T) for T in self.terms],
                "lower": self.lower.to_json(), "upper": _expr_json(self.upper),
                "label": self.label}


@dataclass(frozen=True)
class ModulusSquared:
    coeff: "Coeff"

    def evaluate(self, s, x) -> complex:
        return complex(abs(self.coeff.evaluate(s, x)) ** 2)

    def poles(self) -> PoleSet:
        return self.coeff.poles()

    def s_free(self) -> bool:
        return self.coeff.is_s_free()

    def to_json(self):
        return {"kind": "modsq", "coeff": self.coeff.to_json()}


def _factor_from_json(obj, pointer):
    k = obj.get("kind") if isinstance(obj, dict) else None
    try:
        if k == "ppow":
            return ParamPower(CoeffExpr.from_json(obj["base"], pointer + "/base"),
                              LinExponent.from_json(obj["exp"]))
        if k == "powerlog":
            return PowerLogIntegral(LinExponent.from_json(obj["w"]), int(obj["mu"]),
                                    CoeffExpr.from_json(obj["lower"], pointer + "/lower"),
                                    _expr_from(obj.get("upper"), pointer + "/upper"))
        if k == "gamma":
            return GammaFactor(TranscendentalElement.from_json(obj["te"], pointer + "/te"))
        if k == "oscamp":
            return OscAmpIntegral(
                tuple(Amp.from_json(a, f"{pointer}/amps/{i}") for i, a in enumerate(obj["amps"])),
                None if obj.get("Q") is None else OscPolynomial.from_json(obj["Q"]),
                CoeffExpr.from_json(obj["lower"], pointer + "/lower"),
                _expr_from(obj.get("upper"), pointer + "/upper"), obj.get("label", ""))
        if k == "terms":
            return TermIntegral(
                tuple(term_from_json(t, f"{pointer}/terms/{i}") for i, t in enumerate(obj["terms"])),
                CoeffExpr.from_json(obj["lower"], pointer + "/lower"),
                _expr_from(obj.get("upper"), pointer + "/upper"), obj.get("label", ""))
        if k == "modsq":
            return ModulusSquared(Coeff.from_json(obj["coeff"], pointer + "/coeff"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed factor {k!r}", pointer) from exc
    raise ParseError(f"unknown factor kind {k!r}", pointer)


# ---------------------------------------------------------------------------
# coefficients

@dataclass(frozen=True)
class CTerm:
    mero: MeroCoeff
    factors: tuple = ()

    def evaluate(self, s, x) -> complex:
        v = eval_mero(self.mero, s, x)
        for f in self.factors:
            if v == 0:
                return 0j
            v *= f.evaluate(s, x)
        return v

    def key(self) -> str:
        return _canon([f.to_json() for f in self.factors])

    def to_json(self):
        return {"mero": self.mero.to_json(), "factors": [f.to_json() for f in self.factors]}


def _merge_factors(fs: Iterable) -> tuple[tuple, CoeffExpr]:
    """Combine parametric powers with equal bases; fold s-free rational powers
    into an x-expression.  Returns (factors, extra x-factor)."""
    powers: dict = {}
    rest = []
    extra = CoeffExpr.const(1)
    for f in fs:
        if isinstance(f, ParamPower):
            powers[f.base] = powers.get(f.base, ZERO_EXP) + f.exp
        else:
            rest.append(f)
    for base, e in powers.items():
        if e.ell == 0:
            if e.eta.is_zero():
                continue
            extra = extra * base.pow(e.eta / e.d)
        else:
            rest.append(ParamPower(base, e))
    rest.sort(key=lambda f: _canon(f.to_json()))
    return tuple(rest), extra


@dataclass(frozen=True)
class Coeff:
    """sum over terms of mero(s,x) * prod(factors)(s,x)."""

    terms: tuple = ()

    @classmethod
    def of(cls, v) -> "Coeff":
        if isinstance(v, Coeff):
            return v
        if isinstance(v, MeroCoeff):
            return cls((CTerm(v),))._normal()
        if isinstance(v, CoeffExpr):
            return cls((CTerm(MeroCoeff.x(v)),))._normal()
        if isinstance(v, (ParamPower, PowerLogIntegral, GammaFactor, OscAmpIntegral,
                          TermIntegral, ModulusSquared)):
            return cls((CTerm(MeroCoeff.const(1), (v,)),))
        return cls((CTerm(MeroCoeff.const(v)),))._normal()

    @classmethod
    def one(cls) -> "Coeff":
        return cls.of(1)

    @classmethod
    def zero(cls) -> "Coeff":
        return cls(())

    def _normal(self) -> "Coeff":
        groups: dict = {}
        order = []
        for t in self.terms:
            if t.mero.is_zero():
                continue
            cv = t.mero.xfactor.const_value()
            if cv is not None and cv != ONE:
                t = CTerm(MeroCoeff(t.mero.num * cv, t.mero.den, CoeffExpr.const(1)), t.factors)
            k = (t.key(), _canon(t.mero.xfactor.to_json()))
            if k in groups:
                groups[k] = CTerm(groups[k].mero.add_same_x(t.mero), t.factors)
            else:
                groups[k] = t
                order.append(k)
        out = [groups[k] for k in order if not groups[k].mero.is_zero()]
        out.sort(key=lambda t: _canon(t.to_json()))
        return Coeff(tuple(out))

    def __add__(self, o) -> "Coeff":
        return Coeff(self.terms + Coeff.of(o).terms)._normal()

    __radd__ = __add__

    def __neg__(self) -> "Coeff":
        return Coeff(tuple(CTerm(-t.mero, t.factors) for t in self.terms))

    def __sub__(self, o) -> "Coeff":
        return self + (-Coeff.of(o))

    def __mul__(self, o) -> "Coeff":
        o = Coeff.of(o)
        out = []
        for a in self.terms:
            for b in o.terms:
                fs, extra = _merge_factors(a.factors + b.factors)
                out.append(CTerm((a.mero * b.mero) * extra, fs))
        return Coeff(tuple(out))._normal()

    __rmul__ = __mul__

    def evaluate(self, s, x=()) -> complex:
        return sum((t.evaluate(s, x) for t in self.terms), 0j)

    def poles(self) -> PoleSet:
        out = EMPTY_POLES
        for t in self.terms:
            out = out | t.mero.poles()
            for f in t.factors:
                out = out | f.poles()
        return out

    def is_zero(self) -> bool:
        return not self.terms

    def is_one(self) -> bool:
        return self == Coeff.one()

    def is_s_free(self) -> bool:
        return all(t.mero.is_s_free() and all(f.s_free() for f in t.factors)
                   for t in self.terms)

    def has_transcendental(self) -> bool:
        return any(isinstance(f, (GammaFactor, OscAmpIntegral, TermIntegral))
                   for t in self.terms for f in t.factors)

    def has_deferred(self) -> bool:
        return any(isinstance(f, (OscAmpIntegral, TermIntegral))
                   for t in self.terms for f in t.factors)

    def to_expr(self) -> CoeffExpr:
        """The coefficient as an x-expression; only for s-free factor-free sums."""
        out = CoeffExpr.const(0)
        for t in self.terms:
            if t.factors or not t.mero.is_s_free():
                raise PreconditionViolated("coefficient is not a plain x-expression")
            c = t.mero.num.at_exact(0) / t.mero.den.at_exact(0)
            out = out + CoeffExpr.const(c) * t.mero.xfactor
        return out

    @property
    def inexact(self) -> bool:
        return any(t.mero.inexact for t in self.terms)

    def to_json(self):
        return [t.to_json() for t in self.terms]

    @classmethod
    def from_json(cls, obj, pointer: str = "") -> "Coeff":
        if isinstance(obj, dict):  # a bare MeroCoeff
            return cls((CTerm(MeroCoeff.from_json(obj, pointer)),))
        if isinstance(obj, list) and obj and all(isinstance(t, dict) and "mero" in t for t in obj):
            terms = []
            for i, t in enumerate(obj):
                p = f"{pointer}/{i}"
                fs = tuple(_factor_from_json(f, f"{p}/factors/{j}")
                           for j, f in enumerate(t.get("factors", [])))
                terms.append(CTerm(MeroCoeff.from_json(t["mero"], p + "/mero"), fs))
            return cls(tuple(terms))
        if isinstance(obj, list) and not obj:
            return cls(())
        return cls((CTerm(MeroCoeff.from_json(obj, pointer)),))

    def __repr__(self):
        return f"Coeff({len(self.terms)} terms)"


# ---------------------------------------------------------------------------
# strong series

_VAR_KINDS = ("y_lower", "y_upper", "t_lower", "t_upper", "c")


@dataclass(frozen=True)
class SeriesVar:
    """One bounded monomial Z of a strong series.

    y_lower: (expr/y)^{1/d}          y_upper: (y/expr)^{1/d}
    t_lower: (expr*y^{p/d}/t)^{1/d}  t_upper: (t/(expr*y^{p/d}))^{1/d}
    c: expr(x) itself (a bounded subanalytic component)
    """

    kind: str
    expr: CoeffExpr
    d: int = 1
    power: int = 0

    def __post_init__(self):
        if self.kind not in _VAR_KINDS:
            raise ParseError(f"unknown series variable kind {self.kind!r}")
        if self.d < 1:
            raise ParseError("series variable needs d >= 1")

    @property
    def uses_t(self) -> bool:
        return self.kind.startswith("t_")

    @property
    def uses_y(self) -> bool:
        return self.kind.startswith("y_") or (self.uses_t and self.power != 0)

    def value(self, x, y=None, t=None) -> complex:
        e = self.expr.evaluate(x)
        if self.kind == "c":
            return e
        if self.kind.startswith("y_"):
            if y is None:
                raise PreconditionViolated("series variable needs y")
            r = e / y if self.kind == "y_lower" else y / e
            return _cpow(r, 1.0 / self.d)
        if t is None:
            raise PreconditionViolated("series variable needs t")
        if self.power:
            if y is None:
                raise PreconditionViolated("series variable needs y")
            e = e * _cpow(y, self.power / self.d)
        r = e / t if self.kind == "t_lower" else t / e
        return _cpow(r, 1.0 / self.d)

    def to_json(self):
        return {"kind": self.kind, "expr": self.expr.to_json(), "d": self.d, "power": self.power}

    @classmethod
    def from_json(cls, obj, pointer=""):
        try:
            return cls(obj["kind"], CoeffExpr.from_json(obj["expr"], pointer + "/expr"),
                       int(obj.get("d", 1)), int(obj.get("power", 0)))
        except (KeyError, TypeError) as exc:
            raise ParseError("bad series variable", pointer) from exc


@dataclass(frozen=True)
class Tail:
    """Bound on the truncated part of a series as a function of (s, x, r),
    r the largest modulus among the series variables at the point.

    shell(B, K, j, R): |sum_{|I|=k} xi_I Z^I| <= B(x) k^j (r/R)^k for k > K.
    sum(t1, t2), product(A, B) for series A, B (bounded from their own tails
    and majorants), floor(t, r0) evaluates t at max(r, r0).
    """

    op: str
    args: tuple = ()

    @classmethod
    def zero(cls) -> "Tail":
        return cls("zero")

    @classmethod
    def shell(cls, B, K: int, j: int = 0, R=1) -> "Tail":
        B = CoeffExpr.wrap(B)
        if B.is_const(0):
            return cls.zero()
        return cls("shell", (B, int(K), int(j), frac(R)))

    def is_zero(self) -> bool:
        return self.op == "zero"

    def bound(self, s, x, r: float) -> float:
        op, a = self.op, self.args
        if op == "zero":
            return 0.0
        if op == "shell":
            B, K, j, R = a
            q = r / float(R)
            if q >= 1:
                return math.inf
            b = abs(B.evaluate(x))
            if j == 0:
                return b * q ** (K + 1) / (1 - q)
            tot, k = 0.0, K + 1
            while True:
                term = k ** j * q ** k
                tot += term
                if term < 1e-18 * tot or k > K + 100000:
                    break
                k += 1
            return b * tot
        if op == "sum":
            return a[0].bound(s, x, r) + a[1].bound(s, x, r)
        if op == "product":
            A, Bs = a
            ta, tb = A.tail.bound(s, x, r), Bs.tail.bound(s, x, r)
            return A.majorant(s, x, r) * tb + ta * Bs.majorant(s, x, r) + ta * tb
        if op == "floor":
            return a[0].bound(s, x, max(r, float(a[1])))
        if op == "scaled":
            return abs(a[0].evaluate(s, x)) * a[1].bound(s, x, r)
        raise ParseError(f"unknown tail op {op!r}")

    def degree(self) -> int | None:
        """Smallest shell index the bound can contain (None for the zero tail)."""
        op, a = self.op, self.args
        if op == "zero":
            return None
        if op == "shell":
            return a[1] + 1
        if op == "sum":
            ds = [d for d in (a[0].degree(), a[1].degree()) if d is not None]
            return min(ds) if ds else None
        if op == "product":
            ds = [d for d in (a[0].tail.degree(), a[1].tail.degree()) if d is not None]
            return min(ds) if ds else None
        if op == "scaled":
            return a[1].degree()
        return 0

    def derivative(self, m: Fraction) -> "Tail":
        """Tail after multiplying shell k by at most m*k."""
        if self.op == "zero":
            return self
        if self.op == "shell":
            B, K, j, R = self.args
            return Tail("shell", (B * CoeffExpr.const(m), K, j + 1, R))
        raise TruncationOverflow("tail bound of a derived series cannot be differentiated")

    def __add__(self, o: "Tail") -> "Tail":
        if self.is_zero():
            return o
        if o.is_zero():
            return self
        return Tail("sum", (self, o))

    def to_json(self):
        op, a = self.op, self.args
        if op == "zero":
            return ["zero"]
        if op == "shell":
            return ["shell", a[0].to_json(), a[1], a[2], rat_str(a[3])]
        if op == "sum":
            return ["sum", a[0].to_json(), a[1].to_json()]
        if op == "product":
            return ["product", a[0].to_json(), a[1].to_json()]
        if op == "floor":
            return ["floor", a[0].to_json(), rat_str(a[1])]
        if op == "scaled":
            return ["scaled", a[0].to_json(), a[1].to_json()]
        raise ParseError(f"unknown tail op {op!r}")

    @classmethod
    def from_json(cls, obj, pointer=""):
        if not isinstance(obj, list) or not obj:
            raise ParseError("bad tail", pointer)
        op = obj[0]
        try:
            if op == "zero":
                return cls.zero()
            if op == "shell":
                return cls("shell", (CoeffExpr.from_json(obj[1], pointer + "/1"), int(obj[2]),
                                     int(obj[3]), frac(obj[4])))
            if op == "sum":
                return cls("sum", (cls.from_json(obj[1], pointer + "/1"),
                                   cls.from_json(obj[2], pointer + "/2")))
            if op == "product":
                return cls("product", (StrongSeries.from_json(obj[1], pointer + "/1"),
                                       StrongSeries.from_json(obj[2], pointer + "/2")))
            if op == "floor":
                return cls("floor", (cls.from_json(obj[1], pointer + "/1"), frac(obj[2])))
            if op == "scaled":
                return cls("scaled", (Coeff.from_json(obj[1], pointer + "/1"),
                                      cls.from_json(obj[2], pointer + "/2")))
        except (IndexError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed tail {op!r}", pointer) from exc
        raise ParseError(f"unknown tail op {op!r}", pointer)


@dataclass(frozen=True)
class StrongSeries:
    """Truncation sum_{|I| <= K} xi_I Z^I of a strongly convergent series.

    Terms with |I| > K may be stored (they are known tail terms used by
    validation) but do not enter evaluation.
    """

    vars: tuple = ()
    terms: tuple = ()        # ((I, Coeff), ...) sorted by I
    order: int = 0
    tail: Tail = Tail.zero()

    def __post_init__(self):
        n = len(self.vars)
        for I, _ in self.terms:
            if len(I) != n or any(i < 0 for i in I):
                raise ParseError(f"multi-index {I} does not match {n} variables")

    @classmethod
    def one(cls) -> "StrongSeries":
        return cls((), (((), Coeff.one()),), 0)

    @classmethod
    def build(cls, vars, mapping: dict, order: int | None = None,
              tail: Tail | None = None) -> "StrongSeries":
        items = []
        for I, c in mapping.items():
            c = Coeff.of(c)
            if not c.is_zero():
                items.append((tuple(I), c))
        items.sort(key=lambda it: (sum(it[0]), it[0]))
        if len(items) > SERIES_BUDGET:
            raise TruncationOverflow(f"series has {len(items)} terms, budget {SERIES_BUDGET}")
        if order is None:
            order = max((sum(I) for I, _ in items), default=0)
        return cls(tuple(vars), tuple(items), order, tail or Tail.zero())

    def as_dict(self) -> dict:
        return {I: c for I, c in self.terms}

    def is_one(self) -> bool:
        return (self.tail.is_zero() and len(self.terms) == 1
                and not any(self.terms[0][0]) and self.terms[0][1].is_one())

    def is_exact(self) -> bool:
        return self.tail.is_zero()

    def active(self):
        return [(I, c) for I, c in self.terms if sum(I) <= self.order]

    def var_index(self, kind: str) -> list[int]:
        return [i for i, v in enumerate(self.vars) if v.kind == kind]

    @property
    def uses_t(self) -> bool:
        return any(v.uses_t and any(I[i] for I, _ in self.terms)
                   for i, v in enumerate(self.vars))

    @property
    def uses_y(self) -> bool:
        return any(v.uses_y and any(I[i] for I, _ in self.terms)
                   for i, v in enumerate(self.vars))

    def s_free(self) -> bool:
        return all(c.is_s_free() for _, c in self.terms)

    def poles(self) -> PoleSet:
        out = EMPTY_POLES
        for _, c in self.terms:
            out = out | c.poles()
        return out

    # -- evaluation ---------------------------------------------------------
    def zvalues(self, x, y=None, t=None) -> list[complex]:
        out = []
        for i, v in enumerate(self.vars):
            idle = (v.kind.startswith("y_") and y is None) or (v.uses_t and t is None)
            if idle and not any(I[i] for I, _ in self.terms):
                out.append(0j)  # a variable no term uses may lack its argument
            else:
                out.append(v.value(x, y, t))
        return out

    def evaluate_z(self, s, x, Z: Sequence[complex], include_tail_terms: bool = False) -> complex:
        acc = 0j
        for I, c in self.terms:
            if not include_tail_terms and sum(I) > self.order:
                continue
            m = 1.0 + 0j
            for zi, k in zip(Z, I):
                if k:
                    m *= zi ** k
            acc += c.evaluate(s, x) * m
        return acc

    def evaluate(self, s, x, y=None, t=None) -> complex:
        if self.is_one():
            return 1.0 + 0j
        return self.evaluate_z(s, x, self.zvalues(x, y, t))

    def radius_at(self, x, y=None, t=None) -> float:
        used = [i for i, v in enumerate(self.vars) if any(I[i] for I, _ in self.terms)]
        if not used:
            return 0.0
        Z = self.zvalues(x, y, t)
        return max(abs(Z[i]) for i in used)

    def error_bound(self, s, x, y=None, t=None) -> float:
        if self.tail.is_zero():
            return 0.0
        r = self.radius_at(x, y, t) if self.vars else 1.0
        return self.tail.bound(s, x, r)

    def majorant(self, s, x, r: float) -> float:
        return sum(abs(c.evaluate(s, x)) * r ** sum(I) for I, c in self.active())

    # -- algebra ---------------------------------------------------------------
    def _aligned(self, other: "StrongSeries"):
        vars = list(self.vars)
        for v in other.vars:
            if v not in vars:
                vars.append(v)
        def lift(S):
            pos = [vars.index(v) for v in S.vars]
            out = {}
            for I, c in S.active():
                J = [0] * len(vars)
                for p, k in zip(pos, I):
                    J[p] = k
                out[tuple(J)] = c
            return out
        return vars, lift(self), lift(other)

    def multiply(self, other: "StrongSeries") -> "StrongSeries":
        if self.is_one():
            return other
        if other.is_one():
            return self
        vars, a, b = self._aligned(other)
        out: dict = {}
        for I, c in a.items():
            for J, e in b.items():
                K = tuple(i + j for i, j in zip(I, J))
                out[K] = out.get(K, Coeff.zero()) + c * e
        if self.tail.is_zero() and other.tail.is_zero():
            tail = Tail.zero()
        else:
            tail = Tail("product", (self, other))
        return StrongSeries.build(vars, out, self.order + other.order, tail)

    def add(self, other: "StrongSeries") -> "StrongSeries":
        vars, a, b = self._aligned(other)
        out = dict(a)
        for J, e in b.items():
            out[J] = out.get(J, Coeff.zero()) + e
        return StrongSeries.build(vars, out, max(self.order, other.order),
                                  self.tail + other.tail)

    def scale(self, c) -> "StrongSeries":
        c = Coeff.of(c)
        tail = self.tail if self.tail.is_zero() else Tail("scaled", (c, self.tail))
        return StrongSeries.build(self.vars, {I: e * c for I, e in self.active()},
                                  self.order, tail)

    def split(self, pred, tail_to_high: bool = True):
        """(low, high) by a predicate on multi-indices; the tail goes to high."""
        lo = {I: c for I, c in self.active() if not pred(I)}
        hi = {I: c for I, c in self.active() if pred(I)}
        z = Tail.zero()
        return (StrongSeries.build(self.vars, lo, self.order, z if tail_to_high else self.tail),
                StrongSeries.build(self.vars, hi, self.order, self.tail if tail_to_high else z))

    def t_derivative(self) -> "StrongSeries":
        """The series of t d/dt applied to the series (t-variables only)."""
        weights = []
        for v in self.vars:
            if v.kind == "t_lower":
                weights.append(Fraction(-1, v.d))
            elif v.kind == "t_upper":
                weights.append(Fraction(1, v.d))
            else:
                weights.append(Fraction(0))
        out = {}
        for I, c in self.active():
            w = sum(k * wt for k, wt in zip(I, weights))
            if w:
                out[I] = c * MeroCoeff.const(w)
        m = max((abs(w) for w in weights), default=Fraction(0))
        return StrongSeries.build(self.vars, out, self.order, self.tail.derivative(m))

    def drop_var(self, i: int) -> "StrongSeries":
        vars = self.vars[:i] + self.vars[i + 1:]
        out = {}
        for I, c in self.active():
            if I[i]:
                raise PreconditionViolated("dropping a variable that still occurs")
            out[I[:i] + I[i + 1:]] = c
        return StrongSeries.build(vars, out, self.order, self.tail)

    def to_json(self):
        return {"vars": [v.to_json() for v in self.vars],
                "terms": [{"I": list(I), "xi": c.to_json()} for I, c in self.terms],
                "order": self.order, "tail": self.tail.to_json()}

    @classmethod
    def from_json(cls, obj, pointer=""):
        if obj is None:
            return None
        try:
            vars = tuple(SeriesVar.from_json(v, f"{pointer}/vars/{i}")
                         for i, v in enumerate(obj.get("vars", [])))
            terms = []
            for i, t in enumerate(obj.get("terms", [])):
                terms.append((tuple(int(k) for k in t["I"]),
                              Coeff.from_json(t["xi"], f"{pointer}/terms/{i}/xi")))
            tail = obj.get("tail")
            if tail is None and "tail_bound" in obj:
                tail_t = Tail.shell(CoeffExpr.from_json(obj["tail_bound"], pointer + "/tail_bound"),
                                    int(obj.get("order", 0)), 0, frac(obj.get("radius", 1)))
            else:
                tail_t = Tail.zero() if tail is None else Tail.from_json(tail, pointer + "/tail")
            order = int(obj.get("order", max((sum(I) for I, _ in terms), default=0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError("bad strong series", pointer) from exc
        return cls(vars, tuple(terms), order, tail_t)


def geometric_series(var: SeriesVar, ratio, order: int, tail_bound=None) -> StrongSeries:
    """sum_k ratio^k Z^k truncated at ``order`` (a common fixture shape)."""
    q = ExactComplex.coerce(ratio)
    terms = {(k,): MeroCoeff.const(q ** k) for k in range(order + 1)}
    tail = Tail.zero() if tail_bound is None else Tail.shell(tail_bound, order)
    return StrongSeries.build((var,), terms, order, tail)


def exp_series(psi: StrongSeries, order: int, scale=1) -> StrongSeries:
    """Truncated e^{i*scale*psi} for an exact s-free series psi with no
    constant term.  Tail: shell bound exp(sum |psi_I| 2^{|I|}) at radius 2."""
    if not psi.is_exact() or not psi.s_free():
        raise PreconditionViolated("exponential series needs an exact s-free argument")
    if any(not any(I) for I, _ in psi.active()):
        raise PreconditionViolated("exponential series argument must vanish at Z = 0")
    ipsi = psi.scale(MeroCoeff.const(ExactComplex(0, 1) * ExactComplex.coerce(scale)))
    acc = StrongSeries.one()
    power = StrongSeries.one()
    n = 1
    fact = Fraction(1)
    while True:
        power = _trunc(power.multiply(ipsi), order)
        if not power.terms:
            break
        fact *= n
        acc = acc.add(power.scale(MeroCoeff.const(Fraction(1) / fact)))
        n += 1
        if n > order + 1:
            break
    maj = CoeffExpr.const(0)
    for I, c in psi.active():
        maj = maj + c.to_expr().abs() * CoeffExpr.const(2 ** sum(I)) * CoeffExpr.const(
            abs(ExactComplex.coerce(scale).re) + abs(ExactComplex.coerce(scale).im))
    out = _trunc(acc, order)
    return replace(out, order=order, tail=Tail.shell(maj.exp(), order, 0, 2))


def _trunc(S: StrongSeries, order: int) -> StrongSeries:
    return StrongSeries.build(S.vars, {I: c for I, c in S.active() if sum(I) <= order},
                              order, S.tail)


# ---------------------------------------------------------------------------
# cells and charts

@dataclass(frozen=True)
class Cell1D:
    """a(x) < y < b(x); lower None is -inf, upper None is +inf."""

    lower: CoeffExpr | None
    upper: CoeffExpr | None = None
    param_dim: int = 0

    @property
    def bounded(self) -> bool:
        return self.upper is not None and self.lower is not None

    def bounds(self, x) -> tuple[float, float]:
        a = -math.inf if self.lower is None else self.lower.real(x)
        b = math.inf if self.upper is None else self.upper.real(x)
        return a, b

    def contains(self, x, y: float) -> bool:
        a, b = self.bounds(x)
        return a < y < b

    def check_standard(self, xs: Iterable) -> None:
        """1 <= a(x) < b(x) at the given samples."""
        if self.lower is None:
            raise NotPrepared("cell needs a finite lower bound")
        for x in xs:
            a, b = self.bounds(x)
            if not (1 <= a < b):
                raise NotPrepared(f"cell bounds violate 1 <= a < b at x={list(x)}")

    def to_json(self):
        return {"lower": _expr_json(self.lower), "upper": _expr_json(self.upper),
                "param_dim": self.param_dim}

    @classmethod
    def from_json(cls, obj, pointer=""):
        if obj is None:
            return None
        try:
            return cls(_expr_from(obj.get("lower"), pointer + "/lower"),
                       _expr_from(obj.get("upper"), pointer + "/upper"),
                       int(obj.get("param_dim", 0)))
        except (TypeError, ValueError) as exc:
            raise ParseError("bad cell", pointer) from exc


@dataclass(frozen=True)
class CellChart:
    """Pi(x, y) = (x, sign*y^power + center(x)) from base_cell onto the cell A."""

    center: CoeffExpr
    sign: int
    power: int
    base_cell: Cell1D

    def __post_init__(self):
        if self.sign not in (1, -1) or self.power not in (1, -1):
            raise PreconditionViolated("chart sign and power must be +-1")

    def forward(self, x, y: float) -> float:
        return self.sign * y ** self.power + self.center.real(x)

    def inverse(self, x, ya: float) -> float:
        return (self.sign * (ya - self.center.real(x))) ** self.power

    def jacobian(self, x, y: float) -> float:
        return self.sign * self.power * y ** (self.power - 1)

    @property
    def orientation(self) -> int:
        return self.sign * self.power

    def is_identity(self) -> bool:
        return self.center.is_const(0) and self.sign == 1 and self.power == 1

    def to_json(self):
        return {"center": self.center.to_json(), "sign": self.sign, "power": self.power,
                "base_cell": self.base_cell.to_json()}

    @classmethod
    def from_json(cls, obj, pointer=""):
        try:
            return cls(CoeffExpr.from_json(obj["center"], pointer + "/center"), int(obj["sign"]),
                       int(obj["power"]), Cell1D.from_json(obj["base_cell"], pointer + "/base_cell"))
        except (KeyError, TypeError) as exc:
            raise ParseError("bad chart", pointer) from exc


@dataclass(frozen=True)
class TCellData:
    """t-bounds a0(x) y^{alpha/d} u_a < t < b0(x) y^{beta/d} u_b.

    b0 None means unbounded t-fibers.  Units default to 1; ``d0``/``Delta``
    describe b~ - a~ = d0 y^{Delta/d} u_d and are derived for unit-free data.
    """

    a0: CoeffExpr
    b0: CoeffExpr | None = None
    d0: CoeffExpr | None = None
    alpha: int = 0
    beta: int = 0
    Delta: int = 0
    ua: StrongSeries | None = None
    ub: StrongSeries | None = None
    ud: StrongSeries | None = None
    d: int = 1

    def __post_init__(self):
        if not 0 <= self.alpha <= self.beta and self.b0 is not None:
            raise NotPrepared("t-cell needs 0 <= alpha <= beta")
        if self.alpha < 0:
            raise NotPrepared("t-cell needs alpha >= 0")
        if self.b0 is None:
            if self.beta or self.Delta or self.ub is not None or self.ud is not None:
                raise NotPrepared("unbounded t-fibers need beta = Delta = 0 and trivial units")
        elif self.d0 is None and self.trivial_units:
            if self.beta > self.alpha:
                object.__setattr__(self, "d0", self.b0)
                object.__setattr__(self, "Delta", self.beta)
            else:
                object.__setattr__(self, "d0", self.b0 - self.a0)
                object.__setattr__(self, "Delta", self.alpha)
        for u in (self.ua, self.ub, self.ud):
            if u is not None and (u.uses_t or not u.s_free()):
                raise NotPrepared("t-cell units must be s-free and t-free")

    @property
    def bounded(self) -> bool:
        return self.b0 is not None

    @property
    def trivial_units(self) -> bool:
        return all(u is None or u.is_one() for u in (self.ua, self.ub, self.ud))

    @property
    def y_free(self) -> bool:
        return (self.alpha == 0 and self.beta == 0
                and all(u is None or not u.uses_y for u in (self.ua, self.ub)))

    def lower(self, x, y=None) -> float:
        v = self.a0.real(x)
        if self.alpha:
            v *= y ** (self.alpha / self.d)
        if self.ua is not None:
            v *= self.ua.evaluate(0, x, y).real
        return v

    def upper(self, x, y=None) -> float:
        if self.b0 is None:
            return math.inf
        v = self.b0.real(x)
        if self.beta:
            v *= y ** (self.beta / self.d)
        if self.ub is not None:
            v *= self.ub.evaluate(0, x, y).real
        return v

    def to_json(self):
        def sj(u):
            return None if u is None else u.to_json()
        return {"a0": self.a0.to_json(), "b0": _expr_json(self.b0), "d0": _expr_json(self.d0),
                "alpha": self.alpha, "beta": self.beta, "Delta": self.Delta,
                "ua": sj(self.ua), "ub": sj(self.ub), "ud": sj(self.ud), "d": self.d}

    @classmethod
    def from_json(cls, obj, pointer=""):
        try:
            return cls(CoeffExpr.from_json(obj["a0"], pointer + "/a0"),
                       _expr_from(obj.get("b0"), pointer + "/b0"),
                       _expr_from(obj.get("d0"), pointer + "/d0"),
                       int(obj.get("alpha", 0)), int(obj.get("beta", 0)), int(obj.get("Delta", 0)),
                       StrongSeries.from_json(obj.get("ua"), pointer + "/ua"),
                       StrongSeries.from_json(obj.get("ub"), pointer + "/ub"),
                       StrongSeries.from_json(obj.get("ud"), pointer + "/ud"),
                       int(obj.get("d", 1)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError("bad t-cell", pointer) from exc


# ---------------------------------------------------------------------------
# phases

@dataclass(frozen=True)
class OscPolynomial:
    """Q(x, y) = sum_{k >= 1} b_k(x) y^{k/d}; a constant term is kept apart."""

    d: int = 1
    coeffs: tuple = ()   # ((k, CoeffExpr), ...) with k >= 1, sorted

    @classmethod
    def build(cls, d: int, mapping: dict) -> "OscPolynomial":
        items = []
        for k, c in mapping.items():
            c = CoeffExpr.wrap(c)
            if k < 0:
                raise PreconditionViolated("phase polynomial has a negative power")
            if k == 0:
                if not c.is_const(0):
                    raise PreconditionViolated("normalize Q(x,0) = 0 before building")
                continue
            if not c.is_const(0):
                items.append((int(k), c))
        items.sort(key=lambda kc: kc[0])
        return cls(d, tuple(items))._reduced()

    def _reduced(self) -> "OscPolynomial":
        if not self.coeffs:
            return OscPolynomial(1, ())
        g = self.d
        for k, _ in self.coeffs:
            g = math.gcd(g, k)
        if g == 1:
            return self
        return OscPolynomial(self.d // g, tuple((k // g, c) for k, c in self.coeffs))

    @classmethod
    def linear(cls, c=1) -> "OscPolynomial":
        return cls.build(1, {1: c})

    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def degree(self) -> int:
        return self.coeffs[-1][0] if self.coeffs else 0

    @property
    def leading(self) -> CoeffExpr:
        return self.coeffs[-1][1] if self.coeffs else CoeffExpr.const(0)

    def with_denominator(self, D: int) -> dict:
        if D % self.d:
            raise PreconditionViolated("bad common denominator")
        m = D // self.d
        return {k * m: c for k, c in self.coeffs}

    def __add__(self, o: "OscPolynomial") -> "OscPolynomial":
        D = math.lcm(self.d, o.d)
        a, b = self.with_denominator(D), o.with_denominator(D)
        out = dict(a)
        for k, c in b.items():
            out[k] = out[k] + c if k in out else c
        return OscPolynomial.build(D, out)

    def __neg__(self):
        return OscPolynomial(self.d, tuple((k, -c) for k, c in self.coeffs))

    def value(self, x, y: float) -> float:
        acc = 0.0
        for k, c in self.coeffs:
            acc += c.real(x) * y ** (k / self.d)
        return acc

    def derivative(self, x, y: float) -> float:
        acc = 0.0
        for k, c in self.coeffs:
            acc += c.real(x) * (k / self.d) * y ** (k / self.d - 1)
        return acc

    def same_as(self, o: "OscPolynomial") -> bool:
        """Syntactic equality after a common denominator."""
        D = math.lcm(self.d, o.d)
        return self.with_denominator(D) == o.with_denominator(D)

    def to_json(self):
        return {"d": self.d, "coeffs": [[k, c.to_json()] for k, c in self.coeffs]}

    @classmethod
    def from_json(cls, obj, pointer=""):
        if obj is None:
            return cls()
        try:
            d = int(obj.get("d", 1))
            items = tuple((int(k), CoeffExpr.from_json(c, f"{pointer}/coeffs/{i}"))
                          for i, (k, c) in enumerate(obj.get("coeffs", [])))
        except (TypeError, ValueError) as exc:
            raise ParseError("bad phase polynomial", pointer) from exc
        if any(k < 1 for k, _ in items):
            raise ParseError("phase polynomial powers must be >= 1 (Q(x,0) = 0)", pointer)
        return cls(d, tuple(sorted(items, key=lambda kc: kc[0])))


@dataclass(frozen=True)
class PreparedPhase:
    """phi(x, y) = phi0(x) y^{omega/d} U(x, y)."""

    phi0: CoeffExpr
    omega: int
    unit: StrongSeries | None = None
    d: int = 1

    def value(self, x, y: float) -> float:
        v = self.phi0.real(x) * y ** (self.omega / self.d)
        if self.unit is not None and not self.unit.is_one():
            v *= self.unit.evaluate(0, x, y).real
        return v

    @property
    def trivial_unit(self) -> bool:
        return self.unit is None or self.unit.is_one()

    def to_json(self):
        return {"phi0": self.phi0.to_json(), "omega": self.omega,
                "unit": None if self.unit is None else self.unit.to_json(), "d": self.d}

    @classmethod
    def from_json(cls, obj, pointer=""):
        try:
            return cls(CoeffExpr.from_json(obj["phi0"], pointer + "/phi0"), int(obj["omega"]),
                       StrongSeries.from_json(obj.get("unit"), pointer + "/unit"),
                       int(obj.get("d", 1)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError("bad phase", pointer) from exc


def phases_from_polynomial(Q: OscPolynomial) -> tuple:
    return tuple(PreparedPhase(c, k, None, Q.d) for k, c in Q.coeffs)


# ---------------------------------------------------------------------------
# transcendental elements

@dataclass(frozen=True)
class TranscendentalElement:
    """gamma(s,x,y) = int_{a~}^{b~} t^{rho(s)} (log t)^nu Phi(s,x,y,t) e^{sigma i t} dt."""

    tcell: TCellData
    rho: LinExponent
    nu: int = 0
    Phi: StrongSeries = field(default_factory=StrongSeries.one)
    sigma: int = 1

    def __post_init__(self):
        if self.sigma not in (1, -1):
            raise PreconditionViolated("sigma must be +-1")
        if self.nu < 0:
            raise PreconditionViolated("nu must be a natural number")

    def y_free(self) -> bool:
        return self.tcell.y_free and not self.Phi.uses_y

    def s_free(self) -> bool:
        return self.rho.ell == 0 and self.Phi.s_free()

    def poles(self) -> PoleSet:
        return self.Phi.poles()

    def check_strip(self, strip: Strip) -> None:
        if not self.tcell.bounded and not always_below(self.rho, strip, -1):
            raise NotPrepared(f"unbounded t-fibers need Re(rho) < -1 on the strip, "
                              f"sup is {self.rho.sup_re(strip)}")

    def integrand(self, s, x, y):
        rho = self.rho(s)
        nu = self.nu
        Phi = self.Phi
        one = Phi.is_one()
        coeffs = None if one else [(I, c.evaluate(s, x)) for I, c in Phi.active()]

        def g(t):
            v = _cpow(t, rho)
            if nu:
                v *= _clog(t) ** nu
            if not one:
                Z = Phi.zvalues(x, y, t)
                acc = 0j
                for I, c in coeffs:
                    m = c
                    for zi, k in zip(Z, I):
                        if k:
                            m *= zi ** k
                    acc += m
                v *= acc
            return v
        return g

    def evaluate(self, s, x, y=None, tol: float = 1e-11) -> complex:
        lo = self.tcell.lower(x, y)
        hi = self.tcell.upper(x, y)
        rho = self.rho(s)
        if math.isinf(hi) and rho.real >= -1:
            raise Divergent(f"transcendental element diverges at Re(rho) = {rho.real}")
        if lo <= 0 and (rho != 0 or self.nu or self.Phi.uses_t):
            raise DomainError("t-fiber must stay in t > 0")
        g = self.integrand(s, x, y)
        if hi == lo:
            return 0j
        if hi < lo:  # edge pieces may come with reversed orientation
            return -numeric.quad(numeric.QuadratureRequest(g, hi, lo, self.sigma, 1.0, tol)).value
        return numeric.quad(numeric.QuadratureRequest(g, lo, hi, self.sigma, 1.0, tol)).value

    def error_bound(self, s, x, y=None) -> float:
        """Bound on |gamma_true - gamma_model| from the tail of Phi."""
        if self.Phi.tail.is_zero():
            return 0.0
        lo, hi = self.tcell.lower(x, y), self.tcell.upper(x, y)
        rho = self.rho(s)

        def h(t):
            return (t ** rho.real * abs(math.log(t)) ** self.nu
                    * self.Phi.error_bound(s, x, y, t))
        return numeric.quad(numeric.QuadratureRequest(lambda t: complex(h(t)), lo, hi, None,
                                                      tol=1e-8)).value.real

    def to_json(self):
        return {"tcell": self.tcell.to_json(), "rho": self.rho.to_json(), "nu": self.nu,
                "Phi": self.Phi.to_json(), "sigma": self.sigma}

    @classmethod
    def from_json(cls, obj, pointer=""):
        if obj is None:
            return None
        try:
            phi = StrongSeries.from_json(obj.get("Phi"), pointer + "/Phi") or StrongSeries.one()
            return cls(TCellData.from_json(obj["tcell"], pointer + "/tcell"),
                       LinExponent.from_json(obj["rho"]), int(obj.get("nu", 0)), phi,
                       int(obj.get("sigma", 1)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError("bad transcendental element", pointer) from exc


# ---------------------------------------------------------------------------
# generators

def always_below(lam: LinExponent, strip: Strip, c) -> bool:
    """Re(lam(s)) < c for every s in the open strip."""
    c = frac(c)
    if lam.ell == 0:
        return lam.real_part(0) < c
    return lam.sup_re(strip) <= c


def _ypow(y: float, lam: LinExponent, s) -> complex:
    return _cpow(y, lam(s))


def _check_point(strip: Strip, poles: PoleSet, s) -> None:
    s = complex(s)
    if not strip.contains(s.real):
        raise PreconditionViolated(f"Re(s) = {s.real} outside the strip ({strip.p}, {strip.q})")
    if poles.near(s):
        raise PoleHit(f"s = {s} is a declared pole")


@dataclass(frozen=True)
class PreparedGenerator:
    """g(s,x) y^{lam(s)} (log y)^mu e^{i sum phi_k} Phi(s,x,y) gamma(s,x,y) on a cell.

    ``series`` is an optional y-dependent strong function (naive in y
    factor).  A generator with ``cell=None`` does not depend on y.
    """

    coeff: Coeff
    strip: Strip
    lam: LinExponent = ZERO_EXP
    mu: int = 0
    phases: tuple = ()
    gamma: TranscendentalElement | None = None
    cell: Cell1D | None = None
    poles: PoleSet = EMPTY_POLES
    series: StrongSeries | None = None

    def __post_init__(self):
        object.__setattr__(self, "coeff", Coeff.of(self.coeff))
        if self.mu < 0:
            raise PreconditionViolated("mu must be a natural number")
        if self.gamma is not None:
            self.gamma.check_strip(self.strip)
        if self.cell is None and (self.lam != ZERO_EXP or self.mu or self.phases
                                  or (self.gamma is not None and not self.gamma.y_free())
                                  or (self.series is not None and self.series.uses_y)):
            raise PreconditionViolated("a y-free generator cannot depend on y")

    @property
    def naive(self) -> bool:
        return self.gamma is None or self.gamma.y_free()

    @property
    def y_free(self) -> bool:
        return self.cell is None

    def all_poles(self) -> PoleSet:
        out = self.poles | self.coeff.poles()
        if self.series is not None:
            out = out | self.series.poles()
        if self.gamma is not None:
            out = out | self.gamma.poles()
        return out

    def y_part(self, s, x, y: float) -> complex:
        v = _ypow(y, self.lam, s)
        if self.mu:
            v *= _clog(y) ** self.mu
        if self.phases:
            v *= cmath.exp(1j * sum(p.value(x, y) for p in self.phases))
        if self.series is not None:
            v *= self.series.evaluate(s, x, y)
        return v

    def evaluate(self, s, x=(), y=None) -> complex:
        _check_point(self.strip, self.poles, s)
        if self.cell is not None:
            if y is None or not self.cell.contains(x, y):
                raise OutOfCell(f"y={y} outside the cell at x={list(x)}")
        c = self.coeff.evaluate(s, x)
        if c == 0:
            return 0j
        v = c if self.cell is None else c * self.y_part(s, x, y)
        if self.gamma is not None:
            v *= self.gamma.evaluate(s, x, y)
        return v

    def error_bound(self, s, x=(), y=None) -> float:
        """Truncation error of the model at a point (series tails only)."""
        eb = 0.0
        if self.series is not None and not self.series.tail.is_zero():
            scale = abs(self.coeff.evaluate(s, x)) * abs(_ypow(y, self.lam, s))
            if self.mu:
                scale *= abs(math.log(y)) ** self.mu
            g = 1.0 if self.gamma is None else abs(self.gamma.evaluate(s, x, y))
            eb += scale * g * self.series.error_bound(s, x, y)
        if self.gamma is not None and not self.gamma.Phi.tail.is_zero():
            scale = abs(self.coeff.evaluate(s, x))
            if self.cell is not None:
                scale *= abs(_ypow(y, self.lam, s)) * (abs(math.log(y)) ** self.mu if self.mu else 1)
                if self.series is not None:
                    scale *= abs(self.series.evaluate(s, x, y)) + self.series.error_bound(s, x, y)
            eb += scale * self.gamma.error_bound(s, x, y)
        return eb

    def to_json(self):
        return {"type": "prepared", "coeff": self.coeff.to_json(), "strip": self.strip.to_json(),
                "lam": self.lam.to_json(), "mu": self.mu,
                "phases": [p.to_json() for p in self.phases],
                "gamma": None if self.gamma is None else self.gamma.to_json(),
                "cell": None if self.cell is None else self.cell.to_json(),
                "poles": self.poles.to_json(),
                "series": None if self.series is None else self.series.to_json()}

    @classmethod
    def from_json(cls, obj, pointer=""):
        try:
            return cls(Coeff.from_json(obj.get("coeff", [["const", "1/1", "0/1"]][0]),
                                       pointer + "/coeff"),
                       Strip.from_json(obj["strip"]),
                       LinExponent.from_json(obj.get("lam", {"ell": 0})), int(obj.get("mu", 0)),
                       tuple(PreparedPhase.from_json(p, f"{pointer}/phases/{i}")
                             for i, p in enumerate(obj.get("phases", []))),
                       TranscendentalElement.from_json(obj.get("gamma"), pointer + "/gamma"),
                       Cell1D.from_json(obj.get("cell"), pointer + "/cell"),
                       PoleSet.from_json(obj.get("poles")),
                       StrongSeries.from_json(obj.get("series"), pointer + "/series"))
        except KeyError as exc:
            raise ParseError(f"prepared generator misses {exc}", pointer) from exc


@dataclass(frozen=True)
class MonomialGenerator:
    """f(s,x) y^{lam(s)} (log y)^mu e^{iQ(x,y)}; monomial data (d, ell, eta, mu, Q)."""

    coeff: Coeff
    strip: Strip
    lam: LinExponent = ZERO_EXP
    mu: int = 0
    Q: OscPolynomial = OscPolynomial()
    cell: Cell1D | None = None
    poles: PoleSet = EMPTY_POLES

    def __post_init__(self):
        object.__setattr__(self, "coeff", Coeff.of(self.coeff))
        if self.cell is None:
            raise PreconditionViolated("a monomial generator needs a cell")
        if self.mu < 0:
            raise PreconditionViolated("mu must be a natural number")

    @property
    def data(self) -> tuple:
        D = math.lcm(self.lam.d, self.Q.d)
        lam = self.lam.with_denominator(D)
        return (D, lam.ell, lam.eta, self.mu, self.Q)

    def all_poles(self) -> PoleSet:
        return self.poles | self.coeff.poles()

    def evaluate(self, s, x=(), y=None) -> complex:
        _check_point(self.strip, self.poles, s)
        if y is None or not self.cell.contains(x, y):
            raise OutOfCell(f"y={y} outside the cell at x={list(x)}")
        c = self.coeff.evaluate(s, x)
        if c == 0:
            return 0j
        v = c * _ypow(y, self.lam, s)
        if self.mu:
            v *= _clog(y) ** self.mu
        if not self.Q.is_zero():
            v *= cmath.exp(1j * self.Q.value(x, y))
        return v

    def error_bound(self, s, x=(), y=None) -> float:
        return 0.0

    def to_prepared(self) -> PreparedGenerator:
        return PreparedGenerator(self.coeff, self.strip, self.lam, self.mu,
                                 phases_from_polynomial(self.Q), None, self.cell, self.poles)

    def to_json(self):
        return {"type": "monomial", "coeff": self.coeff.to_json(), "strip": self.strip.to_json(),
                "lam": self.lam.to_json(), "mu": self.mu, "Q": self.Q.to_json(),
                "cell": self.cell.to_json(), "poles": self.poles.to_json()}

    @classmethod
    def from_json(cls, obj, pointer=""):
        try:
            return cls(Coeff.from_json(obj.get("coeff", ["const", "1/1", "0/1"]), pointer + "/coeff"),
                       Strip.from_json(obj["strip"]),
                       LinExponent.from_json(obj.get("lam", {"ell": 0})), int(obj.get("mu", 0)),
                       OscPolynomial.from_json(obj.get("Q"), pointer + "/Q"),
                       Cell1D.from_json(obj["cell"], pointer + "/cell"),
                       PoleSet.from_json(obj.get("poles")))
        except KeyError as exc:
            raise ParseError(f"monomial generator misses {exc}", pointer) from exc


@dataclass(frozen=True)
class ChartedTerm:
    """term o Pi times the signed Jacobian sign*power*y^{power-1}, on the base cell."""

    term: Any
    chart: CellChart

    @property
    def strip(self) -> Strip:
        return self.term.strip

    @property
    def cell(self) -> Cell1D:
        return self.chart.base_cell

    def all_poles(self) -> PoleSet:
        return term_poles(self.term)

    def evaluate(self, s, x=(), y=None) -> complex:
        if y is None or not self.chart.base_cell.contains(x, y):
            raise OutOfCell(f"y={y} outside the chart's base cell")
        return self.term.evaluate(s, x, self.chart.forward(x, y)) * self.chart.jacobian(x, y)

    def error_bound(self, s, x=(), y=None) -> float:
        return abs(self.chart.jacobian(x, y)) * self.term.error_bound(s, x, self.chart.forward(x, y))

    def to_json(self):
        return {"type": "charted", "term": term_to_json(self.term), "chart": self.chart.to_json()}


@dataclass(frozen=True)
class ProductTerm:
    """Deferred product of two terms that both carry y-dependent
    transcendental elements; evaluated as the product of the values."""

    left: Any
    right: Any

    @property
    def strip(self) -> Strip:
        return self.left.strip

    @property
    def cell(self):
        return self.left.cell if self.left.cell is not None else self.right.cell

    def all_poles(self) -> PoleSet:
        return term_poles(self.left) | term_poles(self.right)

    def evaluate(self, s, x=(), y=None) -> complex:
        return self.left.evaluate(s, x, y) * self.right.evaluate(s, x, y)

    def error_bound(self, s, x=(), y=None) -> float:
        a, b = self.left.evaluate(s, x, y), self.right.evaluate(s, x, y)
        ea, eb = self.left.error_bound(s, x, y), self.right.error_bound(s, x, y)
        return abs(a) * eb + ea * abs(b) + ea * eb

    def to_json(self):
        return {"type": "product", "left": term_to_json(self.left),
                "right": term_to_json(self.right)}


TERM_TYPES = (PreparedGenerator, MonomialGenerator, ChartedTerm, ProductTerm)


def term_to_json(T) -> dict:
    return T.to_json()


def term_from_json(obj, pointer="") -> Any:
    if not isinstance(obj, dict):
        raise ParseError("term must be an object", pointer)
    kind = obj.get("type")
    if kind == "prepared":
        return PreparedGenerator.from_json(obj, pointer)
    if kind == "monomial":
        return MonomialGenerator.from_json(obj, pointer)
    if kind == "charted":
        return ChartedTerm(term_from_json(obj.get("term"), pointer + "/term"),
                           CellChart.from_json(obj.get("chart"), pointer + "/chart"))
    if kind == "product":
        return ProductTerm(term_from_json(obj.get("left"), pointer + "/left"),
                           term_from_json(obj.get("right"), pointer + "/right"))
    raise ParseError(f"unknown term type {kind!r}", pointer)


def term_poles(T) -> PoleSet:
    return T.all_poles()


def _eval_in_cell(T, s, x, y) -> complex:
    cell = T.cell
    if cell is not None and not cell.contains(x, y):
        return 0j
    return T.evaluate(s, x, y)


def eval_generator(T, s, x: Sequence[float] = (), y: float | None = None) -> complex:
    """Numeric value of a term at (s, x, y)."""
    return T.evaluate(complex(s), tuple(x), y)


# ---------------------------------------------------------------------------
# classes

CLASS_TAGS = ("C^C", "C^C,iS", "C^C,F-naive", "C^C,F", "C^M", "C^M,F")
_TAG_INFO = {"C^C": (False, 0), "C^C,iS": (False, 1), "C^C,F-naive": (False, 2),
             "C^C,F": (False, 3), "C^M": (True, 0), "C^M,F": (True, 3)}


def _tag_of(param: bool, level: int) -> str:
    if param:
        return "C^M" if level == 0 else "C^M,F"
    return CLASS_TAGS[level]


def tag_join(a: str, b: str) -> str:
    pa, la = _TAG_INFO[a]
    pb, lb = _TAG_INFO[b]
    return _tag_of(pa or pb, max(la, lb))


def tag_leq(a: str, b: str) -> bool:
    return tag_join(a, b) == b


def term_s_dependent(T) -> bool:
    if isinstance(T, ChartedTerm):
        return term_s_dependent(T.term)
    if isinstance(T, ProductTerm):
        return term_s_dependent(T.left) or term_s_dependent(T.right)
    dep = T.lam.ell != 0 or not T.coeff.is_s_free()
    if isinstance(T, PreparedGenerator):
        dep = dep or (T.series is not None and not T.series.s_free())
        dep = dep or (T.gamma is not None and not T.gamma.s_free())
    return dep


def term_class(T) -> str:
    if isinstance(T, ChartedTerm):
        return term_class(T.term)
    if isinstance(T, ProductTerm):
        return tag_join(tag_join(term_class(T.left), term_class(T.right)), "C^C,F")
    level = 0
    if isinstance(T, MonomialGenerator):
        if not T.Q.is_zero():
            level = 1
    else:
        if T.phases:
            level = 1
        if T.gamma is not None:
            level = max(level, 2 if T.gamma.y_free() else 3)
    if T.coeff.has_transcendental():
        level = max(level, 2)
    return _tag_of(term_s_dependent(T), level)


# ---------------------------------------------------------------------------
# sums

def _nf_key(T):
    if isinstance(T, (PreparedGenerator, MonomialGenerator)):
        deg = T.Q.degree if isinstance(T, MonomialGenerator) else 0
        return (0, T.lam.slope, T.lam.offset.re, T.mu, deg, _canon(T.to_json()))
    return (1, Fraction(0), Fraction(0), 0, 0, _canon(T.to_json()))


@dataclass(frozen=True)
class GeneratorSum:
    terms: tuple
    strip: Strip
    poles: PoleSet = EMPTY_POLES
    class_tag: str = "C^C"
    param_dim: int = 0

    @classmethod
    def make(cls, terms: Iterable, strip: Strip, poles: PoleSet = EMPTY_POLES,
             param_dim: int = 0, tag: str | None = None, sort: bool = True) -> "GeneratorSum":
        terms = list(terms)
        P = poles
        t = "C^C"
        for T in terms:
            P = P | term_poles(T)
            t = tag_join(t, term_class(T))
        if tag is not None:
            t = tag_join(t, tag)
        if sort:
            terms.sort(key=_nf_key)
        return cls(tuple(terms), strip, P, t, param_dim)

    def check(self) -> None:
        for T in self.terms:
            if T.strip != self.strip:
                raise PreconditionViolated("terms of a sum must share the strip")
            tp = term_poles(T)
            for p in tp.points:
                if not self.poles.contains(p):
                    raise PreconditionViolated(f"sum poles miss {p!r}")
            if not tag_leq(term_class(T), self.class_tag):
                raise PreconditionViolated(f"class tag {self.class_tag} is below a term's class")

    def evaluate(self, s, x=(), y=None) -> complex:
        _check_point(self.strip, self.poles, s)
        return sum((_eval_in_cell(T, s, x, y) for T in self.terms), 0j)

    def error_bound(self, s, x=(), y=None) -> float:
        tot = 0.0
        for T in self.terms:
            if T.cell is None or y is None or T.cell.contains(x, y):
                tot += T.error_bound(s, x, y)
        return tot

    @property
    def y_free(self) -> bool:
        return all(isinstance(T, PreparedGenerator) and T.cell is None for T in self.terms)

    def to_json(self):
        return {"schema": SCHEMA, "kind": "generator_sum", "strip": self.strip.to_json(),
                "poles": self.poles.to_json(), "class_tag": self.class_tag,
                "param_dim": self.param_dim, "terms": [term_to_json(T) for T in self.terms]}

    @classmethod
    def from_json(cls, obj, pointer=""):
        if not isinstance(obj, dict):
            raise ParseError("generator sum must be an object", pointer)
        if obj.get("schema", SCHEMA) != SCHEMA:
            raise ParseError(f"unsupported schema {obj.get('schema')!r}", pointer + "/schema")
        if "strip" not in obj:
            raise ParseError("missing strip", pointer + "/strip")
        strip = Strip.from_json(obj["strip"])
        terms = []
        for i, t in enumerate(obj.get("terms", [])):
            if isinstance(t, dict) and "strip" not in t:
                t = dict(t, strip=obj["strip"])
            terms.append(term_from_json(t, f"{pointer}/terms/{i}"))
        tag = obj.get("class_tag")
        if tag is not None and tag not in CLASS_TAGS:
            raise ParseError(f"unknown class tag {tag!r}", pointer + "/class_tag")
        poles = PoleSet.from_json(obj.get("poles"))
        if "class_tag" in obj and "poles" in obj:
            return cls(tuple(terms), strip, poles, tag, int(obj.get("param_dim", 0)))
        return cls.make(terms, strip, poles, int(obj.get("param_dim", 0)), tag, sort=False)


# ---------------------------------------------------------------------------
# operations

def chart_pushforward(T, chart: CellChart):
    """T (a term on the cell A) pulled back along the chart to its base cell,
    with the Jacobian attached.  Integrals satisfy
    int_A T dy = chart.orientation * int_{B_A} result dy."""
    if chart.is_identity():
        return T
    inner = T
    if chart.power == -1 and _has_y_gamma(T):
        from .kernel import UnsupportedChart
        raise UnsupportedChart("inversion charts only take terms without y-dependent transcendental elements")
    return ChartedTerm(inner, chart)


def _has_y_gamma(T) -> bool:
    if isinstance(T, PreparedGenerator):
        return T.gamma is not None and not T.gamma.y_free()
    if isinstance(T, ChartedTerm):
        return _has_y_gamma(T.term)
    if isinstance(T, ProductTerm):
        return _has_y_gamma(T.left) or _has_y_gamma(T.right)
    return False


def _as_prepared(T) -> PreparedGenerator:
    return T.to_prepared() if isinstance(T, MonomialGenerator) else T


def _same_cell(a: Cell1D | None, b: Cell1D | None) -> Cell1D | None:
    if a is None:
        return b
    if b is None or a == b:
        return a
    raise PreconditionViolated("products need terms on the same cell")


def product_terms(A, B):
    """Term-by-term product used by the algebra structure."""
    if isinstance(A, PreparedGenerator) and A.y_free:
        A, B = B, A
    if isinstance(B, PreparedGenerator) and B.y_free and B.gamma is None and B.series is None:
        c = B.coeff
        if isinstance(A, (PreparedGenerator, MonomialGenerator)):
            return replace(A, coeff=A.coeff * c, poles=A.poles | B.poles)
        if isinstance(A, ChartedTerm):
            return ChartedTerm(product_terms(A.term, B), A.chart)
    if isinstance(A, MonomialGenerator) and isinstance(B, MonomialGenerator):
        return MonomialGenerator(A.coeff * B.coeff, A.strip, A.lam + B.lam, A.mu + B.mu,
                                 A.Q + B.Q, _same_cell(A.cell, B.cell), A.poles | B.poles)
    if isinstance(A, (PreparedGenerator, MonomialGenerator)) and \
            isinstance(B, (PreparedGenerator, MonomialGenerator)):
        a, b = _as_prepared(A), _as_prepared(B)
        if a.gamma is not None and b.gamma is not None:
            return ProductTerm(A, B)
        if a.series is None:
            series = b.series
        elif b.series is None:
            series = a.series
        else:
            series = a.series.multiply(b.series)
        return PreparedGenerator(a.coeff * b.coeff, a.strip, a.lam + b.lam, a.mu + b.mu,
                                 a.phases + b.phases, a.gamma or b.gamma,
                                 _same_cell(a.cell, b.cell), a.poles | b.poles, series)
    return ProductTerm(A, B)


def sum_algebra_product(h1: GeneratorSum, h2: GeneratorSum) -> GeneratorSum:
    if h1.strip != h2.strip:
        raise PreconditionViolated("product needs a common strip")
    terms = [product_terms(A, B) for A in h1.terms for B in h2.terms]
    return GeneratorSum.make(terms, h1.strip, h1.poles | h2.poles,
                             max(h1.param_dim, h2.param_dim), tag_join(h1.class_tag, h2.class_tag))


def sum_add(h1: GeneratorSum, h2: GeneratorSum) -> GeneratorSum:
    if h1.strip != h2.strip:
        raise PreconditionViolated("sum needs a common strip")
    return GeneratorSum.make(h1.terms + h2.terms, h1.strip, h1.poles | h2.poles,
                             max(h1.param_dim, h2.param_dim), tag_join(h1.class_tag, h2.class_tag))


@dataclass
class SeriesReport:
    max_violation: float
    samples: int
    passed: bool
    worst: dict = field(default_factory=dict)

    def to_json(self):
        return {"max_violation": self.max_violation, "samples": self.samples,
                "passed": self.passed, "worst": self.worst}


def validate_strong_series(Phi: StrongSeries, samples: Sequence = ((0.0, ()),),
                           K: int | None = None, n_z: int = 64,
                           radii: Sequence[float] = (0.1, 0.3, 0.5, 0.7, 0.9),
                           seed: int | None = None) -> SeriesReport:
    """Compare the known tail sum_{|I| > K} xi_I Z^I with the declared
    bound on random points of the unit polydisk.  Report only."""
    K = Phi.order if K is None else K
    gen = numeric.rng(seed)
    n = len(Phi.vars)
    truncated = replace(Phi, order=K)
    high = [(I, c) for I, c in Phi.terms if sum(I) > K]
    worst = {"violation": 0.0}
    count = 0
    for s, x in samples:
        cs = [(I, c.evaluate(s, x)) for I, c in high]
        for r in radii:
            for _ in range(n_z // len(radii) + 1):
                Z = r * np.exp(2j * np.pi * gen.random(n)) * np.sqrt(gen.random(n))
                if n:
                    Z[int(gen.integers(n))] = r * np.exp(2j * np.pi * gen.random())
                zr = float(max(abs(Z))) if n else 0.0
                val = 0j
                for I, c in cs:
                    m = c
                    for zi, k in zip(Z, I):
                        if k:
                            m *= zi ** k
                    val += m
                bound = truncated.tail.bound(s, x, zr)
                viol = abs(val) - bound
                count += 1
                if viol > worst["violation"]:
                    worst = {"violation": viol, "s": complex(s), "x": list(x), "r": zr,
                             "tail": abs(val), "bound": bound}
    mv = worst["violation"]
    ok = mv <= 1e-12
    if isinstance(worst.get("s"), complex):
        worst["s"] = [worst["s"].real, worst["s"].imag]
    return SeriesReport(mv, count, ok, worst)


def dumps(obj) -> str:
    """Canonical JSON text (the round-trip format)."""
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
