"""Exact arithmetic foundation.

Strips, parametric exponents, pole sets, rational-in-s coefficients and
the small expression language used for coefficient functions of the
parameters x = (x_0, ..., x_{m-1}).

Every value here is immutable.  Exact rationals are :class:`fractions.Fraction`
and serialize as ``"num/den"`` strings.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Sequence

POLE_TOL = 1e-9
SCHEMA = "oscint-term-v1"


# ---------------------------------------------------------------------------
# errors

class OscintError(Exception):
    """Base class; ``exit_code`` is what the CLI returns."""

    exit_code = 1


class ParseError(OscintError):
    exit_code = 2

    def __init__(self, msg: str, pointer: str = ""):
        super().__init__(f"{pointer}: {msg}" if pointer else msg)
        self.pointer = pointer


class PreconditionViolated(OscintError):
    exit_code = 3


class PoleHit(PreconditionViolated):
    pass


class DomainError(PreconditionViolated):
    pass


class Divergent(OscintError):
    exit_code = 4


class OracleFailure(OscintError):
    exit_code = 5


class OutOfCell(PreconditionViolated):
    pass


class PoleExcluded(PoleHit):
    pass


class NotPrepared(PreconditionViolated):
    pass


class NeedsSplit(PreconditionViolated):
    pass


class UnsupportedChart(PreconditionViolated):
    pass


class UnsupportedProduct(PreconditionViolated):
    pass


class TruncationOverflow(PreconditionViolated):
    pass


class NotMonotone(PreconditionViolated):
    pass


class ZeroLeadingCoefficient(PreconditionViolated):
    pass


class NotIntegrable(Divergent):
    pass


# ---------------------------------------------------------------------------
# rationals

def frac(v: Any) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings to a Fraction.

    Floats are accepted only when they are exactly representable as short
    decimals; callers that need an honest float escape hatch should use
    :meth:`ExactComplex.from_float`.
    """
    if isinstance(v, Fraction):
        return v
    if isinstance(v, bool):
        raise ParseError(f"not a rational: {v!r}")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, str):
        try:
            return Fraction(v.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"not a rational: {v!r}") from exc
    if isinstance(v, float):
        f = Fraction(v).limit_denominator(10**9)
        if float(f) != v:
            raise ParseError(f"float {v!r} is not a short rational")
        return f
    raise ParseError(f"not a rational: {v!r}")


def rat_str(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def ceil_frac(q: Fraction) -> int:
    return -((-q.numerator) // q.denominator)


def floor_frac(q: Fraction) -> int:
    return q.numerator // q.denominator


# ---------------------------------------------------------------------------
# exact complex numbers

@dataclass(frozen=True)
class ExactComplex:
    """Gaussian rational re + i*im.

    ``inexact`` marks values that came in through the float escape hatch;
    they compute like the others but downstream exact decisions refuse them.
    """

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)
    inexact: bool = field(default=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "re", frac(self.re))
        object.__setattr__(self, "im", frac(self.im))

    @classmethod
    def coerce(cls, v: Any) -> "ExactComplex":
        if isinstance(v, ExactComplex):
            return v
        if isinstance(v, complex):
            return cls.from_float(v)
        if isinstance(v, float):
            try:
                return cls(frac(v))
            except ParseError:
                return cls.from_float(v)
        return cls(frac(v))

    @classmethod
    def from_float(cls, v: complex | float) -> "ExactComplex":
        z = complex(v)
        return cls(Fraction(z.real), Fraction(z.imag), inexact=True)

    def _wrap(self, re, im, other=None) -> "ExactComplex":
        inexact = self.inexact or (other is not None and other.inexact)
        return ExactComplex(re, im, inexact)

    def __add__(self, o):
        o = ExactComplex.coerce(o)
        return self._wrap(self.re + o.re, self.im + o.im, o)

    __radd__ = __add__

    def __sub__(self, o):
        o = ExactComplex.coerce(o)
        return self._wrap(self.re - o.re, self.im - o.im, o)

    def __rsub__(self, o):
        return ExactComplex.coerce(o) - self

    def __mul__(self, o):
        o = ExactComplex.coerce(o)
        return self._wrap(self.re * o.re - self.im * o.im,
                          self.re * o.im + self.im * o.re, o)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = ExactComplex.coerce(o)
        n = o.re * o.re + o.im * o.im
        if n == 0:
            raise ZeroDivisionError("ExactComplex division by zero")
        return self._wrap((self.re * o.re + self.im * o.im) / n,
                          (self.im * o.re - self.re * o.im) / n, o)

    def __rtruediv__(self, o):
        return ExactComplex.coerce(o) / self

    def __neg__(self):
        return self._wrap(-self.re, -self.im)

    def conj(self) -> "ExactComplex":
        return self._wrap(self.re, -self.im)

    def __pow__(self, k: int) -> "ExactComplex":
        if not isinstance(k, int):
            raise TypeError("ExactComplex only has integer powers")
        if k < 0:
            return ExactComplex(1) / (self ** (-k))
        out = ExactComplex(1)
        for _ in range(k):
            out = out * self
        return out

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def is_real(self) -> bool:
        return self.im == 0

    def to_json(self) -> Any:
        out: dict[str, Any] = {"re": rat_str(self.re), "im": rat_str(self.im)}
        if self.inexact:
            out["inexact"] = True
        return out

    @classmethod
    def from_json(cls, obj: Any) -> "ExactComplex":
        if isinstance(obj, dict):
            try:
                return cls(frac(obj.get("re", 0)), frac(obj.get("im", 0)),
                           bool(obj.get("inexact", False)))
            except ParseError:
                if obj.get("inexact"):
                    return cls.from_float(complex(float(obj.get("re", 0)),
                                                  float(obj.get("im", 0))))
                raise
        return cls.coerce(obj)

    def __repr__(self):
        if self.im == 0:
            return f"EC({self.re})"
        return f"EC({self.re}{'+' if self.im >= 0 else '-'}{abs(self.im)}i)"


EC = ExactComplex
ZERO = ExactComplex(0)
ONE = ExactComplex(1)
I_UNIT = ExactComplex(0, 1)


# ---------------------------------------------------------------------------
# strips and exponents

@dataclass(frozen=True)
class Strip:
    """Open vertical strip p < Re(s) < q."""

    p: Fraction
    q: Fraction

    def __post_init__(self):
        object.__setattr__(self, "p", frac(self.p))
        object.__setattr__(self, "q", frac(self.q))
        if not self.p < self.q:
            raise PreconditionViolated(f"strip needs p < q, got {self.p}, {self.q}")

    def contains(self, re_s) -> bool:
        r = re_s if isinstance(re_s, (Fraction, int)) else float(re_s)
        return self.p < r < self.q

    def contains_strip(self, other: "Strip") -> bool:
        return self.p <= other.p and other.q <= self.q

    @property
    def width(self) -> Fraction:
        return self.q - self.p

    def to_json(self):
        return {"p": rat_str(self.p), "q": rat_str(self.q)}

    @classmethod
    def from_json(cls, obj):
        try:
            return cls(frac(obj["p"]), frac(obj["q"]))
        except (KeyError, TypeError) as exc:
            raise ParseError("strip needs p and q") from exc


@dataclass(frozen=True, eq=False)
class LinExponent:
    """lambda(s) = (ell*s + eta)/d.

    Equality and hashing compare the function s -> lambda(s), not the
    stored triple, so (2s+2)/2 == s+1.
    """

    ell: int
    eta: ExactComplex
    d: int = 1

    def __post_init__(self):
        if not isinstance(self.ell, int) or isinstance(self.ell, bool):
            raise PreconditionViolated("ell must be an integer")
        if not isinstance(self.d, int) or self.d < 1:
            raise PreconditionViolated("d must be a positive integer")
        object.__setattr__(self, "eta", ExactComplex.coerce(self.eta))

    @classmethod
    def const(cls, c, d: int = 1) -> "LinExponent":
        c = ExactComplex.coerce(c)
        return cls(0, c * d, d)

    @classmethod
    def s(cls) -> "LinExponent":
        return cls(1, ZERO, 1)

    # semantic identity
    def key(self) -> tuple:
        e = self.eta / self.d
        return (Fraction(self.ell, self.d), e.re, e.im)

    def __eq__(self, other):
        return isinstance(other, LinExponent) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    @property
    def slope(self) -> Fraction:
        return Fraction(self.ell, self.d)

    @property
    def offset(self) -> ExactComplex:
        return self.eta / self.d

    @property
    def inexact(self) -> bool:
        return self.eta.inexact

    def __call__(self, s: complex) -> complex:
        return (self.ell * complex(s) + complex(self.eta)) / self.d

    def at_exact(self, s) -> ExactComplex:
        return (ExactComplex.coerce(s) * self.ell + self.eta) / self.d

    def real_part(self, re_s) -> Fraction:
        return (self.ell * frac(re_s) + self.eta.re) / self.d

    def sup_re(self, strip: Strip) -> Fraction:
        return max(self.real_part(strip.p), self.real_part(strip.q))

    def inf_re(self, strip: Strip) -> Fraction:
        return min(self.real_part(strip.p), self.real_part(strip.q))

    def with_denominator(self, D: int) -> "LinExponent":
        if D % self.d:
            raise PreconditionViolated(f"{D} is not a multiple of {self.d}")
        m = D // self.d
        return LinExponent(self.ell * m, self.eta * m, D)

    def __add__(self, other) -> "LinExponent":
        if not isinstance(other, LinExponent):
            return self.shift(other)
        D = math.lcm(self.d, other.d)
        a, b = self.with_denominator(D), other.with_denominator(D)
        return LinExponent(a.ell + b.ell, a.eta + b.eta, D)

    def __neg__(self):
        return LinExponent(-self.ell, -self.eta, self.d)

    def __sub__(self, other):
        if not isinstance(other, LinExponent):
            return self.shift(-ExactComplex.coerce(other))
        return self + (-other)

    def shift(self, c) -> "LinExponent":
        """lambda + c for an exact constant c."""
        return LinExponent(self.ell, self.eta + ExactComplex.coerce(c) * self.d, self.d)

    def scale(self, r) -> "LinExponent":
        r = frac(r)
        return LinExponent(self.ell * r.numerator, self.eta * r.numerator,
                           self.d * r.denominator)

    def solve(self, value) -> ExactComplex | None:
        """The unique s with lambda(s) = value, or None when ell = 0."""
        if self.ell == 0:
            return None
        v = ExactComplex.coerce(value)
        return (v * self.d - self.eta) / self.ell

    def to_json(self):
        return {"ell": self.ell, "eta": self.eta.to_json(), "d": self.d}

    @classmethod
    def from_json(cls, obj):
        try:
            return cls(int(obj["ell"]), ExactComplex.from_json(obj.get("eta", 0)),
                       int(obj.get("d", 1)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad exponent {obj!r}") from exc

    def __repr__(self):
        return f"LinExponent(({self.ell}s+{self.eta!r})/{self.d})"


def exponent_real_part(lam: LinExponent, re_s) -> Fraction:
    """Exact (ell*re_s + Re(eta))/d."""
    return lam.real_part(re_s)


# ---------------------------------------------------------------------------
# pole sets

@dataclass(frozen=True)
class Ray:
    """{base - k*step : k = 0, 1, 2, ...}"""

    base: ExactComplex
    step: Fraction

    def __post_init__(self):
        object.__setattr__(self, "base", ExactComplex.coerce(self.base))
        object.__setattr__(self, "step", frac(self.step))
        if self.step <= 0:
            raise PreconditionViolated("ray step must be positive")

    def contains(self, z: ExactComplex) -> bool:
        if z.im != self.base.im:
            return False
        k = (self.base.re - z.re) / self.step
        return k >= 0 and k.denominator == 1

    def near(self, z: complex, tol: float) -> bool:
        b = complex(self.base)
        if abs(z.imag - b.imag) > tol:
            return False
        k = (b.real - z.real) / float(self.step)
        if k < -tol:
            return False
        return abs(k - round(k)) * float(self.step) < tol

    def contains_ray(self, other: "Ray") -> bool:
        return self.contains(other.base) and (other.step / self.step).denominator == 1

    def sort_key(self):
        return (self.base.re, self.base.im, self.step)


@dataclass(frozen=True)
class PoleSet:
    points: frozenset = frozenset()
    rays: frozenset = frozenset()

    @classmethod
    def of(cls, points: Iterable = (), rays: Iterable = ()) -> "PoleSet":
        pts = frozenset(ExactComplex.coerce(p) for p in points)
        rs = frozenset(r if isinstance(r, Ray) else Ray(*r) for r in rays)
        return cls(pts, rs)._normalized()

    def _normalized(self) -> "PoleSet":
        rays = [r for r in self.rays
                if not any(o != r and o.contains_ray(r) for o in self.rays)]
        pts = [p for p in self.points if not any(r.contains(p) for r in rays)]
        return PoleSet(frozenset(pts), frozenset(rays))

    def contains(self, z) -> bool:
        z = ExactComplex.coerce(z)
        return z in self.points or any(r.contains(z) for r in self.rays)

    def near(self, s: complex, tol: float = 1e-9) -> bool:
        s = complex(s)
        if any(abs(s - complex(p)) < tol for p in self.points):
            return True
        return any(r.near(s, tol) for r in self.rays)

    def union(self, other: "PoleSet") -> "PoleSet":
        return PoleSet(self.points | other.points, self.rays | other.rays)._normalized()

    __or__ = union

    def is_empty(self) -> bool:
        return not self.points and not self.rays

    def finite_points_in(self, strip: Strip) -> list[ExactComplex]:
        """Points (including ray members) whose real part lies in the strip."""
        out = [p for p in self.points if strip.contains(p.re)]
        for r in self.rays:
            k0 = max(0, ceil_frac((r.base.re - strip.q) / r.step))
            k = k0
            while True:
                z = r.base - ExactComplex(r.step * k)
                if z.re <= strip.p:
                    break
                if strip.contains(z.re):
                    out.append(z)
                k += 1
        return sorted(set(out), key=lambda z: (z.re, z.im))

    def to_json(self):
        pts = sorted(self.points, key=lambda z: (z.re, z.im))
        rays = sorted(self.rays, key=Ray.sort_key)
        return {"points": [p.to_json() for p in pts],
                "rays": [{"base": r.base.to_json(), "step": rat_str(r.step)} for r in rays]}

    @classmethod
    def from_json(cls, obj):
        if obj is None:
            return cls()
        try:
            pts = [ExactComplex.from_json(p) for p in obj.get("points", [])]
            rays = [Ray(ExactComplex.from_json(r["base"]), frac(r["step"]))
                    for r in obj.get("rays", [])]
        except (KeyError, TypeError) as exc:
            raise ParseError("bad pole set") from exc
        return cls.of(pts, rays)


EMPTY_POLES = PoleSet()


def poleset_union(p1: PoleSet, p2: PoleSet) -> PoleSet:
    return p1.union(p2)


# ---------------------------------------------------------------------------
# polynomials in s

@dataclass(frozen=True)
class Poly:
    """Polynomial in s with Gaussian-rational coefficients, lowest degree first."""

    coeffs: tuple = ()

    def __post_init__(self):
        cs = [ExactComplex.coerce(c) for c in self.coeffs]
        while cs and cs[-1].is_zero():
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    @classmethod
    def const(cls, c) -> "Poly":
        return cls((c,))

    @classmethod
    def from_exponent(cls, lam: LinExponent) -> "Poly":
        return cls((lam.eta / lam.d, ExactComplex(Fraction(lam.ell, lam.d))))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_const(self) -> bool:
        return len(self.coeffs) <= 1

    def __add__(self, o: "Poly") -> "Poly":
        n = max(len(self.coeffs), len(o.coeffs))
        a = self.coeffs + (ZERO,) * (n - len(self.coeffs))
        b = o.coeffs + (ZERO,) * (n - len(o.coeffs))
        return Poly(tuple(x + y for x, y in zip(a, b)))

    def __neg__(self):
        return Poly(tuple(-c for c in self.coeffs))

    def __sub__(self, o):
        return self + (-o)

    def __mul__(self, o) -> "Poly":
        if not isinstance(o, Poly):
            c = ExactComplex.coerce(o)
            return Poly(tuple(x * c for x in self.coeffs))
        if self.is_zero() or o.is_zero():
            return Poly(())
        out = [ZERO] * (len(self.coeffs) + len(o.coeffs) - 1)
        for i, x in enumerate(self.coeffs):
            for j, y in enumerate(o.coeffs):
                out[i + j] = out[i + j] + x * y
        return Poly(tuple(out))

    __rmul__ = __mul__

    def __call__(self, s: complex) -> complex:
        acc = 0j
        for c in reversed(self.coeffs):
            acc = acc * s + complex(c)
        return acc

    def at_exact(self, s) -> ExactComplex:
        s = ExactComplex.coerce(s)
        acc = ZERO
        for c in reversed(self.coeffs):
            acc = acc * s + c
        return acc

    def divide_linear(self, r: ExactComplex) -> "Poly":
        """Quotient by (s - r); the caller guarantees r is a root."""
        out = []
        acc = ZERO
        for c in reversed(self.coeffs[1:]):
            acc = acc * r + c
            out.append(acc)
        return Poly(tuple(reversed(out)))

    def exact_roots(self) -> list[ExactComplex]:
        """Gaussian-rational roots found by peeling linear factors."""
        roots: list[ExactComplex] = []
        p = self
        while p.degree >= 1:
            if p.degree == 1:
                roots.append(-p.coeffs[0] / p.coeffs[1])
                break
            found = None
            for z in _candidate_roots(p):
                if p.at_exact(z).is_zero():
                    found = z
                    break
            if found is None:
                break
            roots.append(found)
            p = p.divide_linear(found)
        return roots

    def numeric_roots(self) -> list[complex]:
        import numpy as np
        if self.degree < 1:
            return []
        return [complex(z) for z in np.roots([complex(c) for c in reversed(self.coeffs)])]

    def to_json(self):
        return [c.to_json() for c in self.coeffs]

    @classmethod
    def from_json(cls, obj):
        if not isinstance(obj, list):
            raise ParseError("polynomial must be a list of coefficients")
        return cls(tuple(ExactComplex.from_json(c) for c in obj))


def _candidate_roots(p: Poly) -> list[ExactComplex]:
    # numeric roots snapped to nearby small-denominator rationals
    out = []
    for z in p.numeric_roots():
        re = Fraction(z.real).limit_denominator(720)
        im = Fraction(z.imag).limit_denominator(720)
        out.append(ExactComplex(re, im))
    return out


# ---------------------------------------------------------------------------
# coefficient expressions in x

_SYMS = {"pi": math.pi, "e": math.e}


@dataclass(frozen=True)
class CoeffExpr:
    """Expression tree over the parameters x_0..x_{m-1}.

    ``op`` is one of const, sym, var, add, sub, mul, div, pow, log, abs, cis, exp.
    ``cis(a)`` is e^{i a} for real a; it is how constant phases e^{i b_0(x)}
    are carried.  pow and log assert a positive base at evaluation time.
    """

    op: str
    args: tuple = ()

    # -- constructors with constant folding --------------------------------
    @staticmethod
    def const(v) -> "CoeffExpr":
        return CoeffExpr("const", (ExactComplex.coerce(v),))

    @staticmethod
    def sym(name: str) -> "CoeffExpr":
        if name not in _SYMS:
            raise ParseError(f"unknown symbol {name!r}")
        return CoeffExpr("sym", (name,))

    @staticmethod
    def var(i: int) -> "CoeffExpr":
        return CoeffExpr("var", (int(i),))

    @staticmethod
    def wrap(v) -> "CoeffExpr":
        return v if isinstance(v, CoeffExpr) else CoeffExpr.const(v)

    def const_value(self) -> ExactComplex | None:
        return self.args[0] if self.op == "const" else None

    def is_const(self, v=None) -> bool:
        if self.op != "const":
            return False
        return v is None or self.args[0] == ExactComplex.coerce(v)

    def __add__(self, o):
        o = CoeffExpr.wrap(o)
        a, b = self.const_value(), o.const_value()
        if a is not None and b is not None:
            return CoeffExpr.const(a + b)
        if a is not None and a.is_zero():
            return o
        if b is not None and b.is_zero():
            return self
        return CoeffExpr("add", (self, o))

    def __radd__(self, o):
        return CoeffExpr.wrap(o) + self

    def __sub__(self, o):
        o = CoeffExpr.wrap(o)
        a, b = self.const_value(), o.const_value()
        if a is not None and b is not None:
            return CoeffExpr.const(a - b)
        if b is not None and b.is_zero():
            return self
        if self == o:
            return CoeffExpr.const(0)
        return CoeffExpr("sub", (self, o))

    def __rsub__(self, o):
        return CoeffExpr.wrap(o) - self

    def __neg__(self):
        return CoeffExpr.const(-1) * self

    def __mul__(self, o):
        o = CoeffExpr.wrap(o)
        a, b = self.const_value(), o.const_value()
        if a is not None and b is not None:
            return CoeffExpr.const(a * b)
        if (a is not None and a.is_zero()) or (b is not None and b.is_zero()):
            return CoeffExpr.const(0)
        if a is not None and a == ONE:
            return o
        if b is not None and b == ONE:
            return self
        if b is not None:  # constants to the left keeps trees canonical
            return CoeffExpr("mul", (o, self))
        return CoeffExpr("mul", (self, o))

    def __rmul__(self, o):
        return CoeffExpr.wrap(o) * self

    def __truediv__(self, o):
        o = CoeffExpr.wrap(o)
        a, b = self.const_value(), o.const_value()
        if b is not None:
            if b.is_zero():
                raise ZeroDivisionError("division by constant zero")
            if a is not None:
                return CoeffExpr.const(a / b)
            return CoeffExpr.const(ONE / b) * self
        if a is not None and a.is_zero():
            return self
        return CoeffExpr("div", (self, o))

    def __rtruediv__(self, o):
        return CoeffExpr.wrap(o) / self

    def pow(self, e) -> "CoeffExpr":
        e = ExactComplex.coerce(e)
        if e.is_zero():
            return CoeffExpr.const(1)
        if e == ONE:
            return self
        c = self.const_value()
        if c is not None and c.is_real() and c.re > 0 and e.is_real():
            r = _exact_rational_power(c.re, e.re)
            if r is not None:
                return CoeffExpr.const(r)
        if self.op == "pow":  # (b^p)^q = b^{pq} for positive b
            return CoeffExpr("pow", (self.args[0], self.args[1] * e))
        return CoeffExpr("pow", (self, e))

    def log(self) -> "CoeffExpr":
        if self.is_const(1):
            return CoeffExpr.const(0)
        if self.op == "sym" and self.args[0] == "e":
            return CoeffExpr.const(1)
        return CoeffExpr("log", (self,))

    def abs(self) -> "CoeffExpr":
        c = self.const_value()
        if c is not None and c.is_real():
            return CoeffExpr.const(abs(c.re))
        return CoeffExpr("abs", (self,))

    def exp(self) -> "CoeffExpr":
        """Real exponential; used for derived tail bounds."""
        if self.is_const(0):
            return CoeffExpr.const(1)
        return CoeffExpr("exp", (self,))

    def cis(self) -> "CoeffExpr":
        """e^{i*self}; folded exactly at multiples of pi/2."""
        c = self.const_value()
        if c is not None and c.is_zero():
            return CoeffExpr.const(1)
        k = self._pi_multiple()
        if k is not None and (2 * k).denominator == 1:
            quarter = int(2 * k) % 4
            return CoeffExpr.const([ONE, I_UNIT, -ONE, -I_UNIT][quarter])
        return CoeffExpr("cis", (self,))

    def _pi_multiple(self) -> Fraction | None:
        if self.op == "sym" and self.args[0] == "pi":
            return Fraction(1)
        if self.op == "mul":
            a, b = self.args
            if a.op == "const" and a.args[0].is_real() and b.op == "sym" and b.args[0] == "pi":
                return a.args[0].re
        return None

    # -- evaluation ----------------------------------------------------------
    def __call__(self, x: Sequence[float] = ()) -> complex:
        return self.evaluate(x)

    def evaluate(self, x: Sequence[float] = ()) -> complex:
        op, a = self.op, self.args
        if op == "const":
            return complex(a[0])
        if op == "sym":
            return complex(_SYMS[a[0]])
        if op == "var":
            try:
                return complex(x[a[0]])
            except IndexError as exc:
                raise DomainError(f"x_{a[0]} not supplied") from exc
        if op == "add":
            return a[0].evaluate(x) + a[1].evaluate(x)
        if op == "sub":
            return a[0].evaluate(x) - a[1].evaluate(x)
        if op == "mul":
            return a[0].evaluate(x) * a[1].evaluate(x)
        if op == "div":
            den = a[1].evaluate(x)
            if den == 0:
                raise DomainError("division by zero in coefficient expression")
            return a[0].evaluate(x) / den
        if op == "pow":
            b = _positive(a[0].evaluate(x), "pow")
            return cmath.exp(complex(a[1]) * math.log(b))
        if op == "log":
            return complex(math.log(_positive(a[0].evaluate(x), "log")))
        if op == "abs":
            return complex(abs(a[0].evaluate(x)))
        if op == "exp":
            v = a[0].evaluate(x)
            if abs(v.imag) > 1e-12 * max(1.0, abs(v.real)):
                raise DomainError("exp argument must be real")
            return complex(math.exp(min(v.real, 700.0)))
        if op == "cis":
            v = a[0].evaluate(x)
            if abs(v.imag) > 1e-12 * max(1.0, abs(v.real)):
                raise DomainError("cis argument must be real")
            return cmath.exp(1j * v.real)
        raise ParseError(f"unknown op {op!r}")

    def real(self, x: Sequence[float] = ()) -> float:
        v = self.evaluate(x)
        if abs(v.imag) > 1e-12 * max(1.0, abs(v.real)):
            raise DomainError(f"expected a real value, got {v}")
        return v.real

    def free_vars(self) -> set[int]:
        if self.op == "var":
            return {self.args[0]}
        out: set[int] = set()
        for a in self.args:
            if isinstance(a, CoeffExpr):
                out |= a.free_vars()
        return out

    @property
    def inexact(self) -> bool:
        return any((isinstance(a, ExactComplex) and a.inexact)
                   or (isinstance(a, CoeffExpr) and a.inexact) for a in self.args)

    # -- serialization ---------------------------------------------------------
    def to_json(self):
        op, a = self.op, self.args
        if op == "const":
            c = a[0]
            out = ["const", rat_str(c.re), rat_str(c.im)]
            if c.inexact:
                out.append("inexact")
            return out
        if op == "sym":
            return ["sym", a[0]]
        if op == "var":
            return ["var", a[0]]
        if op == "pow":
            return ["pow", a[0].to_json(), rat_str(a[1].re), rat_str(a[1].im)]
        return [op] + [b.to_json() for b in a]

    @classmethod
    def from_json(cls, obj, pointer: str = "") -> "CoeffExpr":
        if isinstance(obj, (int, str)) and not isinstance(obj, bool):
            return cls.const(frac(obj))
        if not isinstance(obj, list) or not obj:
            raise ParseError("expression must be a non-empty list", pointer)
        op = obj[0]
        try:
            if op == "const":
                c = ExactComplex(frac(obj[1]), frac(obj[2]) if len(obj) > 2 else 0,
                                 len(obj) > 3 and obj[3] == "inexact")
                return cls("const", (c,))
            if op == "sym":
                return cls.sym(obj[1])
            if op == "var":
                return cls.var(int(obj[1]))
            if op == "pow":
                e = ExactComplex(frac(obj[2]), frac(obj[3]) if len(obj) > 3 else 0)
                return cls("pow", (cls.from_json(obj[1], pointer + "/1"), e))
            arity = {"add": 2, "sub": 2, "mul": 2, "div": 2, "log": 1, "abs": 1, "cis": 1,
                     "exp": 1}
            if op not in arity:
                raise ParseError(f"unknown op {op!r}", pointer)
            if len(obj) != arity[op] + 1:
                raise ParseError(f"{op} takes {arity[op]} arguments", pointer)
            kids = tuple(cls.from_json(k, f"{pointer}/{i + 1}") for i, k in enumerate(obj[1:]))
            return cls(op, kids)
        except (IndexError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed {op!r} node", pointer) from exc

    def __repr__(self):
        op, a = self.op, self.args
        if op == "const":
            return repr(a[0])
        if op in ("sym",):
            return a[0]
        if op == "var":
            return f"x{a[0]}"
        sym = {"add": "+", "sub": "-", "mul": "*", "div": "/"}
        if op in sym:
            return f"({a[0]!r} {sym[op]} {a[1]!r})"
        if op == "pow":
            return f"{a[0]!r}^{a[1]!r}"
        return f"{op}({a[0]!r})"


def _positive(v: complex, what: str) -> float:
    if abs(v.imag) > 1e-12 * max(1.0, abs(v.real)) or not v.real > 0:
        raise DomainError(f"{what} base must be positive, got {v}")
    return v.real


def _exact_rational_power(b: Fraction, e: Fraction) -> Fraction | None:
    if e.denominator == 1:
        return b ** int(e)
    q = e.denominator
    num = _int_root(b.numerator, q)
    den = _int_root(b.denominator, q)
    if num is None or den is None:
        return None
    return Fraction(num, den) ** e.numerator


def _int_root(n: int, q: int) -> int | None:
    r = round(n ** (1.0 / q))
    for c in (r - 1, r, r + 1):
        if c >= 0 and c ** q == n:
            return c
    return None


X = CoeffExpr.var
CONST = CoeffExpr.const
PI = CoeffExpr.sym("pi")


# ---------------------------------------------------------------------------
# rational functions of s times an x-expression

@dataclass(frozen=True)
class MeroCoeff:
    """num(s)/den(s) * xfactor(x)."""

    num: Poly
    den: Poly = Poly((ONE,))
    xfactor: CoeffExpr = CoeffExpr.const(1)

    def __post_init__(self):
        if self.den.is_zero():
            raise PreconditionViolated("denominator is identically zero")

    @classmethod
    def const(cls, c, xfactor: CoeffExpr | None = None) -> "MeroCoeff":
        return cls(Poly.const(c), Poly.const(1), xfactor or CoeffExpr.const(1))

    @classmethod
    def x(cls, expr: CoeffExpr) -> "MeroCoeff":
        return cls(Poly.const(1), Poly.const(1), expr)

    @classmethod
    def poly(cls, p: Poly, xfactor: CoeffExpr | None = None) -> "MeroCoeff":
        return cls(p, Poly.const(1), xfactor or CoeffExpr.const(1))

    def is_zero(self) -> bool:
        return self.num.is_zero() or self.xfactor.is_const(0)

    def is_s_free(self) -> bool:
        return self.num.is_const() and self.den.is_const()

    def __mul__(self, o) -> "MeroCoeff":
        if isinstance(o, MeroCoeff):
            return MeroCoeff(self.num * o.num, self.den * o.den,
                             self.xfactor * o.xfactor)._cancel()
        if isinstance(o, Poly):
            return MeroCoeff(self.num * o, self.den, self.xfactor)._cancel()
        if isinstance(o, CoeffExpr):
            return MeroCoeff(self.num, self.den, self.xfactor * o)
        return MeroCoeff(self.num * ExactComplex.coerce(o), self.den, self.xfactor)

    __rmul__ = __mul__

    def __neg__(self):
        return MeroCoeff(-self.num, self.den, self.xfactor)

    def add_same_x(self, o: "MeroCoeff") -> "MeroCoeff":
        if self.xfactor != o.xfactor:
            raise PreconditionViolated("MeroCoeff addition needs equal x-factors")
        if self.den == o.den:
            return MeroCoeff(self.num + o.num, self.den, self.xfactor)._cancel()
        return MeroCoeff(self.num * o.den + o.num * self.den,
                         self.den * o.den, self.xfactor)._cancel()

    def inverse(self) -> "MeroCoeff":
        if self.num.is_zero():
            raise ZeroDivisionError("inverse of zero coefficient")
        return MeroCoeff(self.den, self.num, CoeffExpr.const(1) / self.xfactor)._cancel()

    def _cancel(self) -> "MeroCoeff":
        num, den = self.num, self.den
        if den.degree < 1 or num.is_zero():
            if num.is_zero():
                return MeroCoeff(Poly(()), Poly.const(1), self.xfactor)
            return self
        for r in den.exact_roots():
            if num.degree >= 1 and num.at_exact(r).is_zero():
                num, den = num.divide_linear(r), den.divide_linear(r)
        # normalize the leading denominator coefficient to 1
        lead = den.coeffs[-1]
        if lead != ONE:
            num, den = num * (ONE / lead), den * (ONE / lead)
        return MeroCoeff(num, den, self.xfactor)

    def s_value(self, s: complex) -> complex:
        d = self.den(s)
        n = self.num(s)
        if abs(d) < POLE_TOL * (1 + abs(n)):
            raise PoleHit(f"pole of coefficient at s={s}")
        return n / d

    def poles(self) -> PoleSet:
        exact = self.den.exact_roots()
        pts = list(exact)
        if len(exact) < self.den.degree:
            rest = self.den
            for r in exact:
                rest = rest.divide_linear(r)
            pts += [ExactComplex.from_float(z) for z in rest.numeric_roots()]
        return PoleSet.of(pts)

    @property
    def inexact(self) -> bool:
        return (any(c.inexact for c in self.num.coeffs + self.den.coeffs)
                or self.xfactor.inexact)

    def to_json(self):
        return {"num": self.num.to_json(), "den": self.den.to_json(),
                "x": self.xfactor.to_json()}

    @classmethod
    def from_json(cls, obj, pointer: str = ""):
        if not isinstance(obj, dict):
            # shorthand: a bare expression means an s-free coefficient
            return cls.x(CoeffExpr.from_json(obj, pointer))
        return cls(Poly.from_json(obj.get("num", [ONE.to_json()])),
                   Poly.from_json(obj.get("den", [ONE.to_json()])),
                   CoeffExpr.from_json(obj.get("x", ["const", "1/1", "0/1"]), pointer + "/x"))


def eval_mero(c: MeroCoeff, s: complex, x: Sequence[float] = ()) -> complex:
    """num(s)/den(s) * xfactor(x); PoleHit near zeros of den."""
    return c.s_value(complex(s)) * c.xfactor.evaluate(x)
