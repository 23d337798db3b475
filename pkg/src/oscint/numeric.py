"""The independent oracle.

Oscillatory quadrature used to validate every symbolic result, plus the
numeric side of equidistribution: Weyl sums, discrepancy, a dovetail
witness search, Lp-Cauchy checks and a sampled Parseval check.

Nothing in here knows about the rewriting calculus; integrands are plain
callables.  Default backend is adaptive Gauss-Kronrod (QUADPACK through
scipy).  Infinite oscillatory tails are rotated into the complex plane,
QAWF/QAWO give an independent Filon-type route, and non-linear phases go
through mpmath's zero-subdivision summation.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize

from .kernel import CoeffExpr, OracleFailure, ParseError, PreconditionViolated

DEFAULT_SEED = 20240611


def default_seed() -> int:
    env = os.environ.get("OSCINT_SEED")
    return int(env) if env else DEFAULT_SEED


def rng(seed: int | None = None) -> np.random.Generator:
    return np.random.default_rng(default_seed() if seed is None else seed)


# ---------------------------------------------------------------------------
# quadrature

@dataclass(frozen=True)
class QuadratureRequest:
    """integrand(y) * exp(i*sigma*rate*y) over (a, b); b may be inf.

    With ``sigma=None`` the integrand is taken as is.  ``analytic`` says the
    integrand extends holomorphically to Re(y) > 0, which licenses contour
    rotation.
    """

    integrand: Callable[[complex], complex]
    a: float
    b: float = math.inf
    sigma: int | None = None
    rate: float = 1.0
    tol: float = 1e-11
    max_evals: int = 400_000
    analytic: bool = True

    def __post_init__(self):
        if not self.tol > 0:
            raise PreconditionViolated("tolerance must be positive")


@dataclass(frozen=True)
class QuadResult:
    value: complex
    error: float
    method: str

    def __iter__(self):  # allows ``value, err = quad(...)``
        yield self.value
        yield self.error


def _real_quad(f, a, b, tol, limit, **kw) -> tuple[float, float]:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        out = integrate.quad(f, a, b, epsabs=tol, epsrel=tol, limit=limit,
                             full_output=1, **kw)
    val, err = out[0], out[1]
    if not (math.isfinite(val) and math.isfinite(err)):
        raise OracleFailure(f"quadrature produced non-finite value on [{a}, {b}]")
    return val, err


def _memo(f):
    # real and imaginary passes hit the same nodes; evaluate each once
    cache: dict = {}

    def g(y):
        v = cache.get(y)
        if v is None:
            v = cache[y] = complex(f(y))
        return v
    return g


def _cquad(f, a, b, tol=1e-11, limit=200, **kw) -> tuple[complex, float]:
    f = _memo(f)
    vr, er = _real_quad(lambda y: f(y).real, a, b, tol, limit, **kw)
    vi, ei = _real_quad(lambda y: f(y).imag, a, b, tol, limit, **kw)
    return complex(vr, vi), math.hypot(er, ei)


def _check(res: QuadResult, req_tol: float, what: str) -> QuadResult:
    scale = max(1.0, abs(res.value))
    if res.error > max(1e-5 * scale, 1e4 * req_tol * scale):
        raise OracleFailure(f"{what}: error estimate {res.error:.2e} too large "
                            f"for value {res.value:.6g}")
    return res


def _osc(req: QuadratureRequest) -> Callable[[complex], complex]:
    if req.sigma is None:
        return req.integrand
    w = req.sigma * req.rate
    return lambda y: req.integrand(y) * np.exp(1j * w * y)


def quad_gk(req: QuadratureRequest) -> QuadResult:
    """Plain adaptive Gauss-Kronrod, chunked by oscillation period."""
    f = _osc(req)
    a, b = req.a, req.b
    if math.isinf(b):
        if req.sigma is not None:
            raise PreconditionViolated("use rotation or Filon for oscillatory tails")
        v, e = _cquad(f, a, b, req.tol, 500)
        return QuadResult(v, e, "gk")
    periods = 0.0 if req.sigma is None else req.rate * (b - a) / (2 * math.pi)
    pieces = max(1, int(math.ceil(periods / 8)))
    edges = np.linspace(a, b, pieces + 1)
    total, err = 0j, 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e = _cquad(f, float(lo), float(hi), req.tol, 200)
        total += v
        err += e
    return QuadResult(total, err, "gk")


def quad_rotation(req: QuadratureRequest) -> QuadResult:
    """int_a^inf g(y) e^{i sigma w y} dy along y = a + sigma*i*u."""
    if req.sigma is None or not req.analytic:
        raise PreconditionViolated("contour rotation needs an analytic oscillatory integrand")
    a, s, w, g = req.a, req.sigma, req.rate, req.integrand
    pref = s * 1j * np.exp(1j * s * w * a)

    def h(u):
        return g(complex(a, s * u)) * math.exp(-w * u)

    cut = 40.0 / w
    v1, e1 = _cquad(h, 0.0, cut, req.tol, 200)
    v2, e2 = _cquad(h, cut, math.inf, req.tol, 200)
    return QuadResult(pref * (v1 + v2), abs(pref) * (e1 + e2), "rotation")


def quad_filon(req: QuadratureRequest) -> QuadResult:
    """QUADPACK's Fourier-weighted rules (QAWF on tails, QAWO on intervals)."""
    if req.sigma is None:
        raise PreconditionViolated("Filon route needs a linear oscillation")
    g, s, w = req.integrand, req.sigma, req.rate
    a, b = req.a, req.b

    def part(fn, weight):
        if math.isinf(b):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                out = integrate.quad(fn, a, b, weight=weight, wvar=w,
                                     epsabs=req.tol, limlst=200, full_output=1)
            return out[0], out[1]
        return _real_quad(fn, a, b, req.tol, 400, weight=weight, wvar=w)

    g = _memo(g)
    gr = lambda y: g(y).real
    gi = lambda y: g(y).imag
    cr, e1 = part(gr, "cos")
    sr, e2 = part(gr, "sin")
    ci, e3 = part(gi, "cos")
    si, e4 = part(gi, "sin")
    val = complex(cr - s * si, ci + s * sr)
    return QuadResult(val, e1 + e2 + e3 + e4, "filon")


def quad(req: QuadratureRequest) -> QuadResult:
    """Default oracle route; see module docstring."""
    if req.b <= req.a:
        if req.b == req.a:
            return QuadResult(0j, 0.0, "empty")
        flipped = QuadratureRequest(req.integrand, req.b, req.a, req.sigma, req.rate,
                                    req.tol, req.max_evals, req.analytic)
        r = quad(flipped)
        return QuadResult(-r.value, r.error, r.method)
    if req.sigma is None:
        return _check(quad_gk(req), req.tol, "gk")
    if math.isinf(req.b):
        if req.analytic:
            return _check(quad_rotation(req), req.tol, "rotation")
        return _check(quad_filon(req), req.tol, "filon")
    periods = req.rate * (req.b - req.a) / (2 * math.pi)
    if periods > 64 and req.analytic:
        lo = quad_rotation(req)
        hi = quad_rotation(QuadratureRequest(req.integrand, req.b, math.inf, req.sigma,
                                             req.rate, req.tol, req.max_evals, True))
        return _check(QuadResult(lo.value - hi.value, lo.error + hi.error, "rotation"),
                      req.tol, "rotation")
    return _check(quad_gk(req), req.tol, "gk")


def integrate_oscillatory(g: Callable[[complex], complex], a: float, b: float = math.inf,
                          sigma: int | None = 1, rate: float = 1.0, tol: float = 1e-11,
                          analytic: bool = True) -> QuadResult:
    return quad(QuadratureRequest(g, a, b, sigma, rate, tol, analytic=analytic))


TAIL_PIECES = 96
AVG_DEPTH = 48


def _averaged(sums: list) -> complex:
    """Limit of an alternating series from its partial sums by repeated averaging."""
    A = list(sums)
    while len(A) > 1:
        A = [(u + v) / 2 for u, v in zip(A[:-1], A[1:])]
    return A[0]


def quad_nonlinear_phase(g: Callable[[float], complex], Q: Callable[[float], float],
                         a: float, b: float = math.inf, dQ: Callable[[float], float] | None = None,
                         ) -> QuadResult:
    """int_a^b g(y) e^{i Q(y)} dy for a monotone phase Q with |Q| -> inf.

    Finite intervals use Gauss-Kronrod between consecutive points where Q
    crosses a multiple of pi.  Infinite tails sum the same half-period pieces
    and extrapolate the alternating partial sums by repeated averaging.
    """

    q0 = Q(a)
    sign = 1.0 if Q(a + 1.0) >= q0 else -1.0

    def level(n: float) -> float:
        target = q0 + sign * n * math.pi
        lo, hi = a, a + 1.0
        while sign * (Q(hi) - target) < 0:
            lo, hi = hi, a + 2 * (hi - a)
            if hi > 1e300:
                raise OracleFailure("phase does not reach requested level")
        return optimize.brentq(lambda y: Q(y) - target, lo, hi, xtol=1e-14, rtol=1e-15)

    f = lambda y: g(y) * np.exp(1j * Q(y))
    if not math.isinf(b):
        n_end = int(abs(Q(b) - q0) / math.pi)
        pts = [a] + [level(n) for n in range(1, n_end + 1)] + [b]
        total, err = 0j, 0.0
        for lo, hi in zip(pts[:-1], pts[1:]):
            if hi > lo:
                v, e = _cquad(f, lo, hi, 1e-12, 100)
                total += v
                err += e
        return QuadResult(total, err, "zeros")

    # half-period pieces, then repeated averaging of the partial sums
    pts = [a] + [level(n) for n in range(1, TAIL_PIECES + 1)]
    partial, total, err = [], 0j, 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        v, e = _cquad(f, lo, hi, 1e-13, 100)
        total += v
        err += e
        partial.append(total)
    v1 = _averaged(partial[-AVG_DEPTH:])
    v2 = _averaged(partial[-AVG_DEPTH - 1:-1])
    return QuadResult(v1, abs(v1 - v2) + err, "zeros+averaging")


# ---------------------------------------------------------------------------
# Fourier transforms of fixture functions (kernel e^{-2 pi i t y})

def fourier_numeric(h: Callable[[float], complex], t: float,
                    breakpoints: Sequence[float] = (0.0,), support=(-math.inf, math.inf),
                    tol: float = 1e-12) -> QuadResult:
    """Numeric int h(y) e^{-2 pi i t y} dy for an absolutely integrable h."""
    lo, hi = support
    inner = sorted(p for p in breakpoints if lo < p < hi)
    if math.isinf(lo) and math.isinf(hi) and not inner:
        inner = [0.0]  # weighted QUADPACK needs one finite end
    pts = [lo] + inner + [hi]
    w = 2 * math.pi * abs(t)
    sig = -1 if t > 0 else 1
    total, err = 0j, 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        if t == 0:
            v, e = _cquad(h, a, b, tol, 400)
        elif math.isinf(a) and not math.isinf(b):
            # reflect (-inf, b] onto [-b, inf)
            r = quad_filon(QuadratureRequest(lambda u: h(-u), -b, math.inf, -sig, w, tol))
            v, e = r.value, r.error
        else:
            r = quad_filon(QuadratureRequest(h, a, b, sig, w, tol))
            v, e = r.value, r.error
        total += v
        err += e
    return QuadResult(total, err, "fourier")


def l2_norm_sampled(values: np.ndarray, grid: np.ndarray) -> float:
    return math.sqrt(integrate.simpson(np.abs(values) ** 2, x=grid))


@dataclass
class PlancherelReport:
    pointwise: dict = field(default_factory=dict)
    norm_h: float = 0.0
    norm_fh: float = 0.0
    relative_gap: float = 0.0
    passed: bool = False


def plancherel_check(h: Callable[[float], complex], fh_closed: Callable[[float], complex],
                     t_points: Sequence[float] = (0.0, 1.0), pointwise_tol: float = 1e-6,
                     norm_tol: float = 1e-3, y_half: float = 40.0, t_half: float = 60.0,
                     n_grid: int = 20001, n_tgrid: int = 1201,
                     breakpoints: Sequence[float] = (0.0,)) -> PlancherelReport:
    """Sampled Parseval: compare the numeric transform with a closed form at a
    few points, then ||h||_2 on a y-grid against ||F h||_2 on a t-grid where
    F h is itself computed by the oracle.
    """
    rep = PlancherelReport()
    ok = True
    for t in t_points:
        fwd = fourier_numeric(h, t, breakpoints).value
        # inverse transform of the closed form back at y = t
        inv = fourier_numeric(fh_closed, -t, breakpoints=()).value
        e1, e2 = abs(fwd - fh_closed(t)), abs(inv - h(t))
        rep.pointwise[t] = {"forward": fwd, "inverse": inv, "err_forward": e1, "err_inverse": e2}
        ok &= e1 < pointwise_tol and e2 < pointwise_tol
    ys = np.linspace(-y_half, y_half, n_grid)
    rep.norm_h = l2_norm_sampled(np.array([h(y) for y in ys]), ys)
    # F h is even-symmetric for real even h, but sample the full line anyway
    ts = np.linspace(-t_half, t_half, n_tgrid)
    ts = np.concatenate([ts[ts < -1], np.linspace(-1, 1, 801), ts[ts > 1]])
    fvals = np.array([fourier_numeric(h, t, breakpoints).value for t in ts])
    rep.norm_fh = l2_norm_sampled(fvals, ts)
    rep.relative_gap = abs(rep.norm_h - rep.norm_fh) / rep.norm_h
    rep.passed = bool(ok and rep.relative_gap < norm_tol)
    return rep


# ---------------------------------------------------------------------------
# equidistribution

@dataclass(frozen=True)
class WeylSystem:
    """rho = (g_i(x) e^{(delta_i/d) t})_i followed by (sigma_j t)_j."""

    exp_components: tuple = ()     # tuples (g: CoeffExpr, delta: int)
    lin_components: tuple = ()     # sigma_j, floats or constant CoeffExpr
    d: int = 1

    def to_json(self):
        def enc(v):
            return v.to_json() if isinstance(v, CoeffExpr) else float(v)
        return {"kind": "weyl_system", "d": self.d,
                "exp_components": [[enc(g), int(k)] for g, k in self.exp_components],
                "lin_components": [enc(v) for v in self.lin_components]}

    @classmethod
    def from_json(cls, obj, pointer: str = "") -> "WeylSystem":
        def dec(v, ptr):
            if isinstance(v, float):
                return v
            return CoeffExpr.from_json(v, ptr)
        if not isinstance(obj, dict) or obj.get("kind") != "weyl_system":
            raise ParseError("expected a weyl_system object", pointer)
        try:
            exp = tuple((dec(g, f"{pointer}/exp_components/{i}/0"), int(k))
                        for i, (g, k) in enumerate(obj.get("exp_components", [])))
            lin = tuple(dec(v, f"{pointer}/lin_components/{i}")
                        for i, v in enumerate(obj.get("lin_components", [])))
            d = int(obj.get("d", 1))
        except (TypeError, ValueError) as exc:
            raise ParseError("malformed weyl system", pointer) from exc
        if d < 1 or not (exp or lin):
            raise ParseError("weyl system needs d >= 1 and a component", pointer)
        return cls(exp, lin, d)

    @property
    def dim(self) -> int:
        return len(self.exp_components) + len(self.lin_components)

    def rho(self, x: Sequence[float], t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        rows = []
        for g, delta in self.exp_components:
            rows.append(_real_coeff(g, x) * np.exp(delta / self.d * t))
        for sig in self.lin_components:
            rows.append(_real_coeff(sig, x) * t)
        return np.array(rows)

    def phase(self, h: Sequence[int], x: Sequence[float]):
        """psi(t) = <h, rho(x,t)> and its derivative, as scalar callables."""
        a = [(hk * _real_coeff(g, x), delta / self.d)
             for hk, (g, delta) in zip(h, self.exp_components)]
        lin = sum(hk * _real_coeff(s, x) for hk, s in zip(h[len(self.exp_components):],
                                                 self.lin_components))

        def psi(t):
            return sum(c * math.exp(r * t) for c, r in a) + lin * t

        def dpsi(t):
            return sum(c * r * math.exp(r * t) for c, r in a) + lin

        return psi, dpsi


def _real_coeff(g, x) -> float:
    if isinstance(g, CoeffExpr):
        return g.real(x)
    return float(g)


def _phase_integral(psi, dpsi, u: float, v: float) -> complex:
    """int_u^v e^{2 pi i psi(t)} dt with psi monotone on [u, v]."""
    span = abs(psi(v) - psi(u))
    f = lambda t: complex(math.cos(2 * math.pi * psi(t)), math.sin(2 * math.pi * psi(t)))
    if span <= 4000:
        n = max(1, int(span / 20) + 1)
        edges = np.linspace(u, v, n + 1)
        return sum(_cquad(f, float(p), float(q), 1e-10, 200)[0]
                   for p, q in zip(edges[:-1], edges[1:]))
    # peel off the slow end (small |psi'|), substitute p = psi(t) on the rest
    slow_left = abs(dpsi(u)) < abs(dpsi(v))
    p_u, p_v = psi(u), psi(v)
    inc = p_v > p_u
    if slow_left:
        target = p_u + (1000 if inc else -1000)
        m = optimize.brentq(lambda t: psi(t) - target, u, v, xtol=1e-13)
        head = _phase_integral(psi, dpsi, u, m)
        lo_t, hi_t = m, v
    else:
        target = p_v - (1000 if inc else -1000)
        m = optimize.brentq(lambda t: psi(t) - target, u, v, xtol=1e-13)
        head = _phase_integral(psi, dpsi, m, v)
        lo_t, hi_t = u, m
    p0, p1 = psi(lo_t), psi(hi_t)

    def amp(p):
        fa, fb = psi(lo_t) - p, psi(hi_t) - p
        if fa * fb > 0:  # p sits on an endpoint up to rounding
            t = lo_t if abs(fa) < abs(fb) else hi_t
        else:
            t = optimize.brentq(lambda t: psi(t) - p, lo_t, hi_t, xtol=1e-14, rtol=1e-15)
        return 1.0 / dpsi(t)

    # geometric chunks in |p| keep the amplitude smooth on each piece
    lo, hi = min(p0, p1), max(p0, p1)
    edges = [lo]
    while edges[-1] < hi:
        nxt = edges[-1] + max(2000.0, abs(edges[-1]))
        edges.append(min(nxt, hi))
    tail = 0j
    for a, b in zip(edges[:-1], edges[1:]):
        c, _ = _real_quad(amp, a, b, 1e-11, 200, weight="cos", wvar=2 * math.pi)
        s, _ = _real_quad(amp, a, b, 1e-11, 200, weight="sin", wvar=2 * math.pi)
        tail += complex(c, s)
    if p1 < p0:  # the p-integral runs downwards
        tail = -tail
    return head + tail


def weyl_sum(w: WeylSystem, h: Sequence[int], x: Sequence[float], T: float) -> complex:
    """(1/T) int_1^T e^{2 pi i <h, rho(x,t)>} dt."""
    h = list(h)
    if len(h) != w.dim:
        raise PreconditionViolated(f"h has length {len(h)}, system has {w.dim} components")
    if not any(h):
        raise PreconditionViolated("h must be a nonzero integer vector")
    if T <= 1:
        raise PreconditionViolated("T must exceed 1")
    psi, dpsi = w.phase(h, x)
    grid = np.linspace(1.0, T, 4001)
    vals = np.array([dpsi(t) for t in grid])
    cuts = [1.0]
    for i in range(len(grid) - 1):
        if vals[i] == 0:
            cuts.append(float(grid[i]))
        elif vals[i] * vals[i + 1] < 0:
            cuts.append(optimize.brentq(dpsi, grid[i], grid[i + 1], xtol=1e-14))
    cuts.append(float(T))
    cuts = sorted(set(cuts))
    total = sum(_phase_integral(psi, dpsi, u, v) for u, v in zip(cuts[:-1], cuts[1:]) if v > u)
    return total / T


def discrepancy(w: WeylSystem, box: Sequence[tuple[float, float]],
                xs: Sequence[Sequence[float]], T: float, n: int = 100_000) -> float:
    """sup over the x-sample of |vol(W)/T - vol(box)|, t sampled with step T/n."""
    if len(box) != w.dim:
        raise PreconditionViolated("box dimension does not match the system")
    for lo, hi in box:
        if not (0 <= lo < hi <= 1):
            raise PreconditionViolated("box must lie in [0,1)^N")
    vol = float(np.prod([hi - lo for lo, hi in box]))
    t = (np.arange(n) + 0.5) * (T / n)
    worst = 0.0
    for x in xs:
        r = w.rho(x, t)
        if not np.all(np.isfinite(r)):
            raise OracleFailure("trajectory overflowed; lower T")
        fr = r - np.floor(r)
        inside = np.ones(n, dtype=bool)
        for k, (lo, hi) in enumerate(box):
            inside &= (fr[k] >= lo) & (fr[k] < hi)
        worst = max(worst, abs(inside.mean() - vol))
    return worst


# ---------------------------------------------------------------------------
# dovetail witnesses

@dataclass(frozen=True)
class DovetailInput:
    """f(x, y) = sum_j f_j(x) y^{i sigma_j} e^{i p_j(x, y)} on y > lower."""

    summands: tuple        # (f_j: CoeffExpr, sigma_j: float, p_j: callable(x, y) -> real)
    lower: float
    xs: np.ndarray         # sample of the compact parameter set
    volume: float = 1.0    # vol_m of the sampled set (1 for a point)

    def value(self, x, y: float) -> complex:
        out = 0j
        for f, sig, p in self.summands:
            out += complex(f(x)) * complex(math.cos(sig * math.log(y)), math.sin(sig * math.log(y))) \
                * np.exp(1j * p(x, y))
        return complex(out)


@dataclass
class DovetailReport:
    found: bool
    eps: float = 0.0
    J: int = 0
    ys: list = field(default_factory=list)
    measures: list = field(default_factory=list)

    @property
    def delta(self) -> float:
        return min(self.measures) if self.measures else 0.0


def dovetail_search(inp: DovetailInput, eps_grid: Sequence[float] = (0.9, 0.5, 0.25, 0.1),
                    delta_target: float = 0.1, J: int = 3, horizon: float = 1e6,
                    probes: int = 4000, seed: int | None = None) -> DovetailReport:
    """Greedy search for y_0 < y_1 < ... and nested sample subsets X_j.

    Even steps pick y and keep the sample points near the largest value
    with |f(x, y)| >= eps; odd steps keep the x in X_{2j} whose value at y'
    is at distance >= eps from every value taken on X_{2j}.  Both conditions
    are checked pairwise on the sample.
    """
    gen = rng(seed)
    xs = np.asarray(inp.xs, dtype=float)
    if xs.ndim == 1:
        xs = xs[:, None]
    nx = len(xs)
    for eps in sorted(eps_grid, reverse=True):
        ys, measures = [], []
        y = max(inp.lower, 1.0) * 1.5
        ok = True
        for _ in range(J):
            pick = _dovetail_even(inp, xs, y, eps, delta_target, horizon, probes, gen)
            if pick is None:
                ok = False
                break
            y0, v0, mask0 = pick
            pick2 = _dovetail_odd(inp, xs, y0, v0, mask0, eps, delta_target, horizon, probes, gen)
            if pick2 is None:
                ok = False
                break
            y1, mask1 = pick2
            ys += [y0, y1]
            measures += [float(inp.volume * m.sum() / nx) for m in (mask0, mask1)]
            y = y1 * 1.01 + 1.0
        if ok:
            return DovetailReport(True, eps, J, ys, measures)
    return DovetailReport(False)


def _dovetail_even(inp, xs, y_start, eps, delta, horizon, probes, gen):
    nx = len(xs)
    cands = np.sort(gen.uniform(y_start, min(horizon, y_start * 50 + 100), probes // 4))
    for y in cands:
        vals = np.array([inp.value(x, y) for x in xs])
        c = vals[np.argmax(np.abs(vals))]
        if abs(c) < eps:
            continue
        mask = (np.abs(vals - c) <= eps / 2) & (np.abs(vals) >= eps)
        if inp.volume * mask.sum() / nx >= delta:
            return float(y), vals[mask], mask
    return None


def _dovetail_odd(inp, xs, y0, v0, mask0, eps, delta, horizon, probes, gen):
    nx = len(xs)
    cands = np.sort(gen.uniform(y0 * 1.0001 + 1e-3, min(horizon, y0 * 50 + 100), probes // 4))
    idx = np.nonzero(mask0)[0]
    for y in cands:
        vals = np.array([inp.value(xs[i], y) for i in idx])
        gap = np.abs(vals[:, None] - v0[None, :]).min(axis=1)
        mask = np.zeros(nx, dtype=bool)
        mask[idx[gap >= eps]] = True
        if inp.volume * mask.sum() / nx >= delta:
            return float(y), mask
    return None


# ---------------------------------------------------------------------------
# Lp Cauchy checks

@dataclass
class CauchyReport:
    cauchy: bool
    y0: float | None
    distances: dict = field(default_factory=dict)
    limit_trend: list = field(default_factory=list)


def lp_norm(values: np.ndarray, weights: np.ndarray, p: float) -> float:
    a = np.abs(values)
    if math.isinf(p):
        return float(a.max()) if a.size else 0.0
    return float(np.sum(weights * a ** p) ** (1.0 / p))


def gauss_box(lo: Sequence[float], hi: Sequence[float], n: int = 64):
    """Tensor Gauss-Legendre nodes and weights on a box."""
    nodes, wts = np.polynomial.legendre.leggauss(n)
    axes, axw = [], []
    for a, b in zip(lo, hi):
        axes.append(0.5 * (b - a) * nodes + 0.5 * (a + b))
        axw.append(0.5 * (b - a) * wts)
    grids = np.meshgrid(*axes, indexing="ij")
    wgrid = np.ones_like(grids[0])
    for k, g in enumerate(np.meshgrid(*axw, indexing="ij")):
        wgrid = wgrid * g
    pts = np.stack([g.ravel() for g in grids], axis=1)
    return pts, wgrid.ravel()


def lp_cauchy_check(h: Callable[[Sequence[float], float], complex], p: float,
                    y_grid: Sequence[float], xs: np.ndarray, weights: np.ndarray,
                    eps: float, g: Callable[[Sequence[float]], complex] | None = None,
                    ) -> CauchyReport:
    """Empirical ||f_y - f_y'||_p for grid pairs beyond each candidate y0."""
    ys = sorted(float(y) for y in y_grid)
    if p < 1:
        raise PreconditionViolated("p must be >= 1")
    vals = {y: np.array([h(x, y) for x in xs], dtype=complex) for y in ys}
    rep = CauchyReport(False, None)
    for i, y in enumerate(ys):
        for y2 in ys[i + 1:]:
            rep.distances[(y, y2)] = lp_norm(vals[y] - vals[y2], weights, p)
    for i, y0 in enumerate(ys[:-1]):
        tail = [d for (a, b), d in rep.distances.items() if a >= y0]
        if tail and max(tail) < eps:
            rep.cauchy, rep.y0 = True, y0
            break
    if g is not None:
        gv = np.array([g(x) for x in xs], dtype=complex)
        rep.limit_trend = [(y, lp_norm(vals[y] - gv, weights, p)) for y in ys]
    return rep


def pointwise_cauchy(h: Callable[[float], complex], ys: Sequence[float], eps: float) -> bool:
    """True when all values on the (late) y-sample lie within eps of each other."""
    v = np.array([h(y) for y in ys], dtype=complex)
    spread = np.abs(v[:, None] - v[None, :]).max()
    return bool(spread < eps)
