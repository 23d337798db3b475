"""Command-line front end.

    oscint <subcommand> INPUT [options]

INPUT is an oscint-term-v1 GeneratorSum file (a WeylSystem file for weyl
and discrepancy).  Paths of the form ``fixtures/<name>.json`` fall back to
the fixtures shipped with the package.  JSON goes to stdout or ``--out``;
``--format table`` prints the plain-text view of the same data.

Exit codes: 0 success, 2 parse error, 3 precondition, 4 divergence or empty
locus, 5 oracle failure.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from . import numeric
from .asymptotics import Expansion, expand, limit_at_infinity
from .generators import GeneratorSum, PreparedGenerator, dumps
from .grid import GCell, Locus, LocusCell, gcells, grid_data_of, monomial_locus
from .kernel import (
    Divergent, OscintError, ParseError, PreconditionViolated, Strip, frac, rat_str,
)
from .rewrite import (
    extend_sum, fourier_fixed_freq, full_fourier, ibp_reduce_t, integrate_sum,
    mellin_transform, split_sum,
)

SUBCOMMANDS = ("fourier", "fourier-full", "mellin", "integrate", "extend-strip", "reduce-t",
               "split", "grid", "locus", "expand", "limit", "weyl", "discrepancy", "dovetail",
               "lp-check", "validate")

EXIT_OK, EXIT_PARSE, EXIT_PRECONDITION, EXIT_DIVERGENT, EXIT_ORACLE = 0, 2, 3, 4, 5


class UsageError(ParseError):
    pass


# ---------------------------------------------------------------------------
# input

def resolve_input(path: str) -> str:
    p = Path(path)
    if p.exists():
        return p.read_text(encoding="utf-8")
    if p.parent.name == "fixtures" or p.parent == Path("."):
        from .validation import fixture_text
        try:
            return fixture_text(p.name)
        except (FileNotFoundError, OSError):
            pass
    raise ParseError(f"cannot read {path}")


def parse_json(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def load_sum(path: str) -> GeneratorSum:
    obj = parse_json(resolve_input(path))
    h = GeneratorSum.from_json(obj)
    return h


def parse_complex(text: str) -> complex:
    t = text.strip().replace(" ", "").replace("i", "j")
    try:
        if "/" in t and "j" not in t:
            return complex(float(Fraction(t)))
        return complex(t)
    except ValueError as exc:
        raise UsageError(f"not a complex number: {text!r}") from exc


def parse_floats(text: str) -> tuple:
    if text.strip() == "":
        return ()
    try:
        return tuple(float(Fraction(v)) for v in text.split(","))
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"not a list of numbers: {text!r}") from exc


def parse_strip(text: str) -> Strip:
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError(f"--strip needs p,q; got {text!r}")
    return Strip(frac(parts[0]), frac(parts[1]))


def _c(z: complex) -> list:
    z = complex(z)
    return [z.real, z.imag]


# ---------------------------------------------------------------------------
# evaluation samples shared by commands returning y-free sums

def _default_points(strip: Strip) -> list:
    p, q = strip.p, strip.q
    if math.isinf(float(p)) or math.isinf(float(q)):
        return [0j]
    return [complex(float((p + q) / 2))]


def sample_values(h: GeneratorSum, points, xs) -> list:
    out = []
    for s in points:
        for x in xs:
            row = {"s": _c(s), "x": list(x)}
            try:
                row["value"] = _c(h.evaluate(s, x))
            except PreconditionViolated as exc:
                row["value"], row["note"] = None, str(exc)
            out.append(row)
    return out


def _xs_for(h: GeneratorSum, opt_x) -> list:
    if opt_x:
        return [parse_floats(v) for v in opt_x]
    return [tuple([1.0] * h.param_dim)]


def sum_table(title: str, h: GeneratorSum, values: list) -> str:
    rows = [title,
            f"strip: {rat_str(h.strip.p)} < Re s < {rat_str(h.strip.q)}",
            f"class: {h.class_tag}",
            f"poles: {', '.join(_pt(p) for p in h.poles.points) or 'none'}",
            f"terms: {len(h.terms)}"]
    for v in values:
        val = "undefined" if v["value"] is None else f"{v['value'][0]:.15g}{v['value'][1]:+.15g}i"
        rows.append(f"value at s={v['s'][0]:g}{v['s'][1]:+g}i x={v['x']}: {val}")
    return "\n".join(rows)


def _pt(p) -> str:
    return f"{rat_str(p.re)}+{rat_str(p.im)}i" if p.im else rat_str(p.re)


# ---------------------------------------------------------------------------
# commands

def cmd_fourier(args) -> tuple:
    h = load_sum(args.input)
    r = fourier_fixed_freq(h)
    vals = sample_values(r, args.at or _default_points(r.strip), _xs_for(r, args.x))
    return {"kind": "fourier", "result": r.to_json(), "values": vals}, \
        sum_table("fixed-frequency Fourier transform", r, vals)


def cmd_fourier_full(args) -> tuple:
    if args.t is None:
        raise UsageError("fourier-full needs --t")
    h = load_sum(args.input)
    r = full_fourier(h, frac(args.t))
    vals = sample_values(r, args.at or _default_points(r.strip), _xs_for(r, args.x))
    return {"kind": "fourier_full", "t": rat_str(frac(args.t)), "result": r.to_json(),
            "values": vals}, sum_table(f"Fourier transform at t = {args.t}", r, vals)


def cmd_mellin(args) -> tuple:
    h = load_sum(args.input)
    m = mellin_transform(h)
    vals = sample_values(m.h, args.at or _default_points(m.strip), _xs_for(m.h, args.x))
    out = m.to_json()
    out["values"] = vals
    text = sum_table("Mellin transform", m.h, vals)
    text += "\nremovable: " + (", ".join(_pt(z) for z in m.removable) or "none")
    return out, text


def cmd_extend_strip(args) -> tuple:
    if args.strip is None:
        raise UsageError("extend-strip needs --strip=p,q")
    h = load_sum(args.input)
    r, traces = extend_sum(h, args.strip)
    vals = sample_values(r, args.at or _default_points(h.strip), _xs_for(r, args.x))
    out = {"kind": "extend_strip", "result": r.to_json(),
           "traces": [tr.to_json() for tr in traces], "values": vals}
    text = sum_table("strip extension", r, vals)
    for k, tr in enumerate(traces):
        text += f"\ntrace {k}: {tr.steps} integrations by parts, " \
                f"{len(tr.boundary_terms)} boundary terms, {len(tr.reduced_terms)} reduced terms"
    return out, text


def cmd_reduce_t(args) -> tuple:
    h = load_sum(args.input)
    k0 = 1 if args.order is None else args.order
    parts, terms = [], []
    for i, T in enumerate(h.terms):
        if isinstance(T, PreparedGenerator) and T.gamma is not None and T.cell is not None:
            rr = ibp_reduce_t(T, k0)
            parts.append({"index": i, "trace": rr.trace.to_json()})
            terms += list(rr.h.terms)
        else:
            terms.append(T)
    r = GeneratorSum.make(terms, h.strip, h.poles, h.param_dim)
    out = {"kind": "reduce_t", "k0": k0, "result": r.to_json(), "reductions": parts}
    text = sum_table(f"t-exponent reduction (k0 = {k0})", r, [])
    text += "\nreduced terms: " + (", ".join(str(p["index"]) for p in parts) or "none")
    return out, text


def cmd_split(args) -> tuple:
    h = load_sum(args.input)
    sp = split_sum(h)
    out = sp.to_json()
    rows = [f"monomial generators: {len(sp.monomial)}",
            f"strongly integrable generators: {len(sp.strongly_integrable)}",
            f"grid: d = {sp.grid_d}, data = "
            + ", ".join(f"({rat_str(l)}, {rat_str(r)})" for l, r in sp.grid_data)]
    for M in sp.monomial:
        rows.append(f"  y^({M.lam}) (log y)^{M.mu}  Q degree {M.Q.degree if not M.Q.is_zero() else 0}")
    rows += [f"note: {n}" for n in sp.notes]
    return out, "\n".join(rows)


def cmd_grid(args) -> tuple:
    h = load_sum(args.input)
    strip = args.strip or h.strip
    items, rows = [], []
    for i, T in enumerate(h.terms):
        P = T.to_prepared() if hasattr(T, "to_prepared") else T
        if not isinstance(P, PreparedGenerator):
            raise PreconditionViolated(f"term {i}: grids need prepared generators")
        g = grid_data_of(P)
        cells = gcells(g, strip)
        items.append({"index": i, "grid": g.to_json(), "cells": [c.to_json() for c in cells]})
        rows.append(f"term {i}: d = {g.d}, data = "
                    + ", ".join(f"({rat_str(l)}, {rat_str(r)})" for l, r in g.data))
        rows += [f"  {c.label()}" for c in cells]
    return {"kind": "grids", "strip": strip.to_json(), "terms": items}, "\n".join(rows)


def _locus_of(h: GeneratorSum) -> Locus:
    sp = split_sum(h)
    P = h.poles | sp.poles_out
    if sp.monomial:
        locus, _ = monomial_locus(sp.monomial, h.strip, P)
        return locus
    return Locus(h.strip, [LocusCell(GCell(h.strip.p, h.strip.q), ())], (), P)


def locus_empty(locus: Locus, xs) -> bool:
    """No cell is full and every cell has a function nonzero at each sample x."""
    for lc in locus.cells:
        if lc.full:
            return False
        s = complex(float(lc.cell.representative()), 0.0)
        for x in xs:
            try:
                vals = [locus.functions[j].evaluate(s, x) for j in lc.J]
            except PreconditionViolated:
                continue
            if all(abs(v) <= 1e-9 for v in vals):
                return False
    return True


def cmd_locus(args) -> tuple:
    h = load_sum(args.input)
    locus = _locus_of(h)
    xs = _xs_for(h, args.x)
    empty = locus_empty(locus, xs)
    out = locus.to_json()
    out["kind"], out["empty_at_samples"] = "locus", empty
    return out, locus.table(), (EXIT_DIVERGENT if empty else EXIT_OK)


def cmd_integrate(args) -> tuple:
    h = load_sum(args.input)
    r = integrate_sum(h)
    xs = _xs_for(h, args.x)
    pts = args.at or [complex(float(r.locus.cells[0].cell.representative()), 0.0)]
    vals = sample_values(r.H, pts, xs)
    out = r.to_json()
    out["values"] = vals
    text = r.locus.table() + "\n" + sum_table("integral", r.H, vals)
    return out, text, (EXIT_DIVERGENT if locus_empty(r.locus, xs) else EXIT_OK)


def expansion_report(h: GeneratorSum, N: int, s=None, x=()) -> tuple:
    e = expand(h, N, s)
    return _expansion_payload(e, N, x), e.table(x)


def _expansion_payload(e: Expansion, N: int, x) -> dict:
    sv = complex(e.s)
    y0 = e.y0(x)
    coeffs = []
    for E in e.coefficients:
        coeffs.append([{"f": _c(sm.coeff.evaluate(sv, x)), "sigma": rat_str(sm.sigma),
                        "Q": sm.Q.to_json()} for sm in E.summands])
    consts = [None if tc.target is None else tc.evaluate(sv, x, y0) for tc in e.tail_constants]
    return {"kind": "expand", "order": N, "expansion": e.to_json(),
            "evaluated": {"x": list(x), "y0": y0, "coefficients": coeffs,
                          "tail_constants": consts}}


def cmd_expand(args) -> tuple:
    h = load_sum(args.input)
    N = 4 if args.order is None else args.order
    s = args.at[0] if args.at else None
    x = _xs_for(h, args.x)[0]
    out, text = expansion_report(h, N, s, x)
    return out, text


def cmd_limit(args) -> tuple:
    h = load_sum(args.input)
    s = args.at[0] if args.at else None
    lim = limit_at_infinity(h, s)
    sv = 0 if s is None else s
    rows = []
    for x in _xs_for(h, args.x):
        f, g = lim.f.evaluate(sv, x), lim.g.evaluate(sv, x)
        rows.append({"x": list(x), "f": _c(f), "g": _c(g), "exists": lim.exists_at(x)})
    out = lim.to_json()
    out["samples"] = rows
    text = [f"obstructions: {len(lim.obstructions)}"]
    for r in rows:
        text.append(f"x={r['x']}: f={r['f'][0]:.15g}{r['f'][1]:+.15g}i "
                    f"g={r['g'][0]:.15g}{r['g'][1]:+.15g}i "
                    f"limit {'exists' if r['exists'] else 'does not exist'}")
    return out, "\n".join(text)


def _load_weyl(path: str) -> numeric.WeylSystem:
    return numeric.WeylSystem.from_json(parse_json(resolve_input(path)))


def _h_vectors(dim: int, text: str | None) -> list:
    if text:
        vecs = []
        for part in text.split(";"):
            try:
                vecs.append([int(v) for v in part.split(",")])
            except ValueError as exc:
                raise UsageError(f"bad --h vector {part!r}") from exc
        return vecs
    return [list(h) for h in itertools.product(range(-2, 3), repeat=dim) if any(h)]


def cmd_weyl(args) -> tuple:
    w = _load_weyl(args.input)
    T = 20.0 if args.T is None else args.T
    x = parse_floats(args.x[0]) if args.x else ()
    rows = []
    for h in _h_vectors(w.dim, args.h):
        v = numeric.weyl_sum(w, h, x, T)
        rows.append({"h": h, "value": _c(v), "abs": abs(v)})
    worst = max(r["abs"] for r in rows)
    out = {"kind": "weyl", "system": w.to_json(), "T": T, "x": list(x), "sums": rows,
           "max_abs": worst}
    text = [f"{'h':<16} |weyl sum|"] + [f"{str(r['h']):<16} {r['abs']:.6e}" for r in rows]
    text.append(f"max: {worst:.6e} at T = {T:g}")
    return out, "\n".join(text)


def _parse_boxes(text: str | None, dim: int) -> list:
    if text:
        try:
            box = [tuple(float(Fraction(v)) for v in iv.split(",")) for iv in text.split(";")]
        except (ValueError, ZeroDivisionError) as exc:
            raise UsageError(f"bad --box {text!r}") from exc
        return [box]
    edges = [i / 4 for i in range(5)]
    ivs = list(itertools.combinations(edges, 2))
    return [list(b) for b in itertools.product(ivs, repeat=dim)]


def cmd_discrepancy(args) -> tuple:
    w = _load_weyl(args.input)
    T = 1e4 if args.T is None else args.T
    xs = [parse_floats(v) for v in args.x] if args.x else [()]
    rows = []
    for box in _parse_boxes(args.box, w.dim):
        rows.append({"box": [list(iv) for iv in box], "discrepancy": numeric.discrepancy(w, box, xs, T)})
    worst = max(rows, key=lambda r: r["discrepancy"])
    out = {"kind": "discrepancy", "system": w.to_json(), "T": T, "boxes": rows,
           "max": worst["discrepancy"], "argmax": worst["box"]}
    text = [f"{'box':<32} discrepancy"] + [f"{str(r['box']):<32} {r['discrepancy']:.6e}"
                                            for r in rows]
    text.append(f"max: {worst['discrepancy']:.6e} at {worst['box']}")
    return out, "\n".join(text)


def cmd_dovetail(args) -> tuple:
    h = load_sum(args.input)
    s = args.at[0] if args.at else None
    e = expand(h, 1, s)
    if not e.coefficients:
        raise Divergent("the expansion has no leading coefficient")
    E = e.coefficients[0]
    sv = complex(e.s)
    gen = numeric.rng(args.seed)
    m = h.param_dim
    xs = gen.uniform(0.0, 1.0, size=(200, m)) if m else np.zeros((1, 0))
    summands = tuple((lambda x, c=sm.coeff: c.evaluate(sv, tuple(x)), float(sm.sigma),
                      lambda x, y, Q=sm.Q: 0.0 if Q.is_zero() else Q.value(tuple(x), y))
                     for sm in E.summands)
    inp = numeric.DovetailInput(summands, max(e.y0(tuple([1.0] * m)), 1.0), xs)
    rep = numeric.dovetail_search(inp, seed=args.seed)
    out = {"kind": "dovetail", "leading_scale": [rat_str(e.scale[0][0]), e.scale[0][1]],
           "found": rep.found, "eps": rep.eps, "J": rep.J, "ys": rep.ys,
           "measures": rep.measures, "delta": rep.delta}
    text = [f"witness sequence {'found' if rep.found else 'not found'}"]
    if rep.found:
        text.append(f"eps = {rep.eps:g}, delta = {rep.delta:g}")
        text += [f"  y_{k} = {y:.10g}  measure {m_:.4f}" for k, (y, m_) in
                 enumerate(zip(rep.ys, rep.measures))]
    return out, "\n".join(text)


def cmd_lp_check(args) -> tuple:
    h = load_sum(args.input)
    p = 2.0 if args.p is None else args.p
    eps = 1e-3 if args.tol is None else args.tol
    s = args.at[0] if args.at else 0j
    m = h.param_dim
    if m:
        xs, wts = numeric.gauss_box([0.0] * m, [1.0] * m, 16)
    else:
        xs, wts = np.zeros((1, 0)), np.ones(1)
    try:
        lim = limit_at_infinity(h, args.at[0] if args.at else None)
        g = lambda x: lim.g.evaluate(s, tuple(x))
    except OscintError:
        g = None
    ys = np.geomspace(10.0, 1e4, 13)
    rep = numeric.lp_cauchy_check(lambda x, y: h.evaluate(s, tuple(x), y), p, ys, xs, wts,
                                  eps, g)
    dists = [{"y": a, "y2": b, "distance": d} for (a, b), d in sorted(rep.distances.items())]
    out = {"kind": "lp_check", "p": p, "eps": eps, "cauchy": rep.cauchy, "y0": rep.y0,
           "distances": dists, "limit_trend": [{"y": y, "distance": d} for y, d in rep.limit_trend]}
    text = [f"L^{p:g} Cauchy at eps {eps:g}: {'yes' if rep.cauchy else 'no'}"
            + (f" from y0 = {rep.y0:g}" if rep.cauchy else "")]
    text += [f"  y = {y:10.4g}  ||h_y - g||_p = {d:.6e}" for y, d in rep.limit_trend]
    return out, "\n".join(text)


def cmd_validate(args) -> tuple:
    from .validation import run_validation
    rep = run_validation(args.seed, args.suite or None, args.jobs)
    return rep.to_json(), rep.table(), (EXIT_OK if rep.passed else EXIT_ORACLE)


COMMANDS = {
    "fourier": cmd_fourier, "fourier-full": cmd_fourier_full, "mellin": cmd_mellin,
    "integrate": cmd_integrate, "extend-strip": cmd_extend_strip, "reduce-t": cmd_reduce_t,
    "split": cmd_split, "grid": cmd_grid, "locus": cmd_locus, "expand": cmd_expand,
    "limit": cmd_limit, "weyl": cmd_weyl, "discrepancy": cmd_discrepancy,
    "dovetail": cmd_dovetail, "lp-check": cmd_lp_check, "validate": cmd_validate,
}


# ---------------------------------------------------------------------------
# argument parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--order", type=int, help="expansion order N or reduction depth")
    common.add_argument("--tol", type=float, help="tolerance")
    common.add_argument("--seed", type=int, help="random seed (OSCINT_SEED overrides)")
    common.add_argument("--strip", type=parse_strip, help="strip override p,q")
    common.add_argument("--format", choices=("json", "table"), default="json")
    common.add_argument("--out", help="write the JSON result to this file")
    common.add_argument("--at", type=parse_complex, action="append",
                        help="evaluation point s (repeatable)")
    common.add_argument("--x", action="append", help="parameter point x1,x2,... (repeatable)")

    parser = _Parser(prog="oscint", description="symbolic-numeric oscillatory integrals")
    sub = parser.add_subparsers(dest="command", metavar="subcommand", parser_class=_Parser)
    sub.required = True
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name != "validate":
            sp.add_argument("input")
        if name == "fourier-full":
            sp.add_argument("--t", help="frequency (rational)")
        if name in ("weyl", "discrepancy"):
            sp.add_argument("--T", type=float, help="time horizon")
        if name == "weyl":
            sp.add_argument("--h", help="frequency vectors h1,h2;h1,h2")
        if name == "discrepancy":
            sp.add_argument("--box", help="box lo,hi;lo,hi")
        if name == "lp-check":
            sp.add_argument("--p", type=float, help="exponent p >= 1")
        if name == "validate":
            sp.add_argument("--suite", action="append", help="run only this suite")
            sp.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    return parser


def _seed(args) -> int:
    env = os.environ.get("OSCINT_SEED")
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise UsageError(f"OSCINT_SEED must be an integer, got {env!r}") from exc
    return numeric.DEFAULT_SEED if args.seed is None else args.seed


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.seed = _seed(args)
        res = COMMANDS[args.command](args)
    except OscintError as exc:
        print(f"oscint: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    payload, text = res[0], res[1]
    code = res[2] if len(res) > 2 else EXIT_OK
    from .validation import _jsonable
    body = dumps(_jsonable(payload))
    if args.out:
        Path(args.out).write_text(body, encoding="utf-8")
    if args.format == "table":
        sys.stdout.write(text + "\n")
    elif not args.out:
        sys.stdout.write(body)
    return code


if __name__ == "__main__":
    sys.exit(main())
