"""Command-line front end: parse systems and scalar equations, run the
engines, print JSON or text results.

Input grammar for matrix entries and equation coefficients: integers,
rationals a/b, the symbols x, eps and xi (xi expands to x^sigma eps for the
declared sigma), operators + - * / ^ and parentheses.  Exponents are integer
literals in input files; the parser also accepts parenthesized rational
exponents so that printed output round-trips.  Division is exact and
restricted to monomial or rational denominators.

Exit codes: 0 success, 2 parse error, 3 engine precondition, 4 stalled
reduction, 5 insufficient order after the configured restarts.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .coeff import QQ
from .driver import (
    Config,
    InputSystem,
    formal_reduce,
    input_from_presentation,
    iterative_restraining,
    restraining_indices,
    stretch,
)
from .errors import (
    DimensionMismatch,
    InsufficientOrder,
    ParamredError,
    ParseError,
    PreconditionError,
    Stalled,
)
from .linalg import Trunc
from .reduce import (
    eps_rank_reduce,
    exp_order_system,
    resolve_turning_point,
    split,
    theta,
)
from .scalar import ScalarEquation, eps_polygon, exp_order_scalar, scalar_moser, scalar_to_irreducible_system
from .series import BiSeries, PuiseuxSeries

F = Fraction


# ---------------------------------------------------------------------------
# tokenizer / expression parser
# ---------------------------------------------------------------------------


class _Tok:
    def __init__(self, kind, value, pos):
        self.kind = kind
        self.value = value
        self.pos = pos


def _tokenize(text):
    toks = []
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(_Tok("num", int(text[i:j]), i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(_Tok("name", text[i:j], i))
            i = j
            continue
        if c in "+-*/^()[],=":
            toks.append(_Tok(c, c, i))
            i += 1
            continue
        raise ParseError("unexpected character %r" % c, col=i)
    toks.append(_Tok("end", None, n))
    return toks


class _ExprParser:
    """Recursive-descent parser producing exact raw BiSeries values."""

    def __init__(self, toks, sigma):
        self.toks = toks
        self.i = 0
        self.sigma = F(sigma)

    def peek(self):
        return self.toks[self.i]

    def take(self, kind=None):
        t = self.toks[self.i]
        if kind and t.kind != kind:
            raise ParseError("expected %s, found %r" % (kind, t.value), col=t.pos)
        self.i += 1
        return t

    def parse_expr(self):
        t = self.peek()
        if t.kind in ("+", "-"):
            self.take()
            v = self.parse_term()
            if t.kind == "-":
                v = -v
        else:
            v = self.parse_term()
        while self.peek().kind in ("+", "-"):
            op = self.take().kind
            w = self.parse_term()
            v = v + w if op == "+" else v - w
        return v

    def parse_term(self):
        v = self.parse_factor()
        while True:
            t = self.peek()
            if t.kind == "*":
                self.take()
                v = v * self.parse_factor()
            elif t.kind == "/":
                self.take()
                w = self.parse_factor()
                v = _exact_div(v, w, t.pos)
            else:
                return v

    def parse_factor(self):
        t = self.peek()
        if t.kind == "-":
            self.take()
            return -self.parse_factor()
        base = self.parse_atom()
        while self.peek().kind == "^":
            self.take()
            e = self._exponent()
            base = _exact_pow(base, e)
        return base

    def _exponent(self):
        t = self.peek()
        neg = False
        if t.kind == "-":
            self.take()
            neg = True
        if self.peek().kind == "(":
            self.take()
            num = self._signed_int()
            den = 1
            if self.peek().kind == "/":
                self.take()
                den = self.take("num").value
            self.take(")")
            e = F(num, den)
        else:
            e = F(self.take("num").value)
        return -e if neg else e

    def _signed_int(self):
        neg = False
        if self.peek().kind == "-":
            self.take()
            neg = True
        v = self.take("num").value
        return -v if neg else v

    def parse_atom(self):
        t = self.take()
        if t.kind == "num":
            return BiSeries.monomial(QQ.from_fraction(t.value), 0, 0)
        if t.kind == "(":
            v = self.parse_expr()
            self.take(")")
            return v
        if t.kind == "name":
            if t.value == "x" or t.value == "tau":
                return BiSeries.monomial(QQ.one(), 1, 0)
            if t.value == "eps":
                return BiSeries.monomial(QQ.one(), 0, 1)
            if t.value == "xi":
                return BiSeries.monomial(QQ.one(), self.sigma, 1)
            raise ParseError("unknown symbol %r" % t.value, col=t.pos)
        raise ParseError("unexpected token %r" % (t.value,), col=t.pos)


def _is_monomial(b):
    mono = b.monomials()
    return len(mono) == 1


def _exact_div(a, b, pos):
    mono = b.monomials()
    if len(mono) != 1:
        raise ParseError("division is restricted to monomial denominators", col=pos)
    c, xe, ke = mono[0]
    if F(ke).denominator != 1:
        raise ParseError("fractional eps power in denominator", col=pos)
    return a.mul_monomial(c.inverse(), -xe, -int(ke))


def _exact_pow(b, e):
    e = F(e)
    mono = b.monomials()
    if len(mono) == 1:
        c, xe, ke = mono[0]
        if e.denominator == 1 and (int(e) >= 0 or True):
            k = int(e)
            if F(ke * k).denominator != 1:
                raise ParseError("fractional eps power")
            return BiSeries.monomial(c ** abs(k) if k >= 0 else (c.inverse() ** (-k)), xe * k, int(ke * k))
        if (xe * e).denominator >= 1 and ke == 0:
            return BiSeries.monomial(c ** 1 if e == 1 else _root_coeff(c, e), xe * e, 0)
        raise ParseError("unsupported fractional power")
    if e.denominator != 1 or e < 0:
        raise ParseError("general expressions take nonnegative integer powers only")
    out = BiSeries.one()
    for _ in range(int(e)):
        out = out * b
    return out


def _root_coeff(c, e):
    if c == QQ.one():
        return QQ.one()
    raise ParseError("fractional powers require unit coefficients")


def parse_entry(text, sigma=0):
    toks = _tokenize(text)
    p = _ExprParser(toks, sigma)
    v = p.parse_expr()
    if p.peek().kind != "end":
        raise ParseError("trailing input", col=p.peek().pos)
    return v


# ---------------------------------------------------------------------------
# system and equation files
# ---------------------------------------------------------------------------


def parse_system(text):
    """SystemFile: declarations n=, h=, p=, sigma= and a matrix A=[[...]]."""
    decls = {"n": None, "h": 0, "p": F(0), "sigma": F(0)}
    text = text.strip()
    idx = text.find("A=")
    if idx < 0:
        raise ParseError("missing matrix declaration A=[[...]]")
    head, matpart = text[:idx], text[idx + 2 :]
    for piece in head.replace("\n", " ").split():
        if "=" not in piece:
            raise ParseError("bad declaration %r" % piece)
        key, val = piece.split("=", 1)
        key = key.strip()
        if key not in decls:
            raise ParseError("unknown declaration %r" % key)
        decls[key] = F(val)
    sigma = F(decls["sigma"])
    if sigma > 0:
        raise ParseError("declared sigma must be nonpositive")
    rows = _parse_matrix_text(matpart)
    n = len(rows)
    if decls["n"] is not None and int(decls["n"]) != n:
        raise DimensionMismatch("declared n=%s but matrix has %d rows" % (decls["n"], n))
    for r in rows:
        if len(r) != n:
            raise DimensionMismatch("matrix is not square")
    entries = [[parse_entry(cell, sigma) for cell in row] for row in rows]
    h = decls["h"]
    if F(h).denominator != 1:
        raise ParseError("h must be an integer")
    return input_from_presentation(n, int(h), decls["p"], sigma, entries)


def _parse_matrix_text(text):
    text = text.strip()
    if not text.startswith("["):
        raise ParseError("matrix must start with [")
    depth = 0
    rows = []
    cur = []
    buf = []
    for i, c in enumerate(text):
        if c == "[":
            depth += 1
            if depth == 2:
                cur = []
                buf = []
            continue
        if c == "]":
            depth -= 1
            if depth == 1:
                cur.append("".join(buf).strip())
                rows.append(cur)
            if depth == 0:
                break
            continue
        if c == "," and depth == 2:
            cur.append("".join(buf).strip())
            buf = []
            continue
        if depth == 2:
            buf.append(c)
        elif depth == 1 and not c.isspace() and c != ",":
            raise ParseError("unexpected %r between rows" % c, col=i)
    if depth != 0:
        raise ParseError("unbalanced brackets in matrix")
    if any(cell == "" for row in rows for cell in row):
        raise DimensionMismatch("empty matrix entry")
    return rows


def parse_equation(text):
    """Scalar equation 'sigma=q  D^3 f - (x/xi^2) D^2 f - ... = 0'."""
    text = text.strip()
    sigma = F(0)
    if text.startswith("sigma="):
        head, _, rest = text.partition(" ")
        sigma = F(head.split("=", 1)[1])
        text = rest.strip()
    if "=" in text:
        lhs, _, rhs = text.rpartition("=")
        if rhs.strip() != "0":
            raise ParseError("equation must end in = 0")
        text = lhs.strip()
    toks = _tokenize(text)
    # split into top-level +- terms
    terms = []
    depth = 0
    cur = []
    sign = 1
    for t in toks:
        if t.kind == "(":
            depth += 1
        elif t.kind == ")":
            depth -= 1
        if depth == 0 and t.kind in ("+", "-") and cur:
            terms.append((sign, cur))
            sign = 1 if t.kind == "+" else -1
            cur = []
            continue
        if depth == 0 and t.kind in ("+", "-") and not cur:
            sign = sign if t.kind == "+" else -sign
            continue
        if t.kind == "end":
            break
        cur.append(t)
    if cur:
        terms.append((sign, cur))
    coeffs = {}
    order = 0
    for sign, toklist in terms:
        j, rest = _extract_derivative(toklist)
        if rest:
            p = _ExprParser(rest + [_Tok("end", None, 0)], sigma)
            val = p.parse_expr()
            if p.peek().kind != "end":
                raise ParseError("trailing input in coefficient")
        else:
            val = BiSeries.one()
        if sign < 0:
            val = -val
        coeffs[j] = coeffs.get(j, BiSeries.zero()) + val
        order = max(order, j)
    if order == 0:
        raise ParseError("no derivative of f found")
    a = []
    lead = coeffs.get(order)
    inv_lead = None
    mono = lead.monomials()
    if len(mono) == 1:
        c, xe, ke = mono[0]
        if F(ke).denominator != 1:
            raise ParseError("fractional eps power in leading coefficient")
        inv_lead = lambda v: v.mul_monomial(c.inverse(), -xe, -int(ke))
    else:
        raise ParseError("leading coefficient must be a monomial")
    for i in range(order + 1):
        ai = coeffs.get(i, BiSeries.zero())
        a.append(inv_lead(ai))
    return ScalarEquation(order, a, sigma)


def _extract_derivative(toklist):
    """Find 'D^j f', 'D f' or bare 'f' in a token run; return (j, rest)."""
    out = []
    j = None
    i = 0
    while i < len(toklist):
        t = toklist[i]
        if t.kind == "name" and t.value == "D":
            jj = 1
            i += 1
            if i < len(toklist) and toklist[i].kind == "^":
                i += 1
                jj = toklist[i].value
                i += 1
            if i < len(toklist) and toklist[i].kind == "name" and toklist[i].value == "f":
                i += 1
            else:
                raise ParseError("derivative must apply to f")
            if j is not None:
                raise ParseError("multiple derivative factors in one term")
            j = jj
            continue
        if t.kind == "name" and t.value == "f":
            if j is not None:
                raise ParseError("multiple f factors in one term")
            j = 0
            i += 1
            continue
        out.append(t)
        i += 1
    if j is None:
        raise ParseError("term without f")
    while out and out[-1].kind == "*":
        out.pop()
    while out and out[0].kind == "*":
        out.pop(0)
    return j, out


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _system_dict(sys):
    d = sys.describe()
    d["A"] = sys.entry_strings()
    d["lhs"] = "%s * d/d%s" % (sys.lhs_str(), sys.var)
    return d


def _emit(payload, fmt):
    if fmt == "json":
        return json.dumps(payload, indent=2, sort_keys=True)
    return _as_text(payload)


def _as_text(payload, indent=0):
    pad = "  " * indent
    lines = []
    if isinstance(payload, dict):
        for k in sorted(payload):
            v = payload[k]
            if isinstance(v, (dict, list)):
                lines.append("%s%s:" % (pad, k))
                lines.append(_as_text(v, indent + 1))
            else:
                lines.append("%s%s: %s" % (pad, k, v))
    elif isinstance(payload, list):
        for v in payload:
            if isinstance(v, (dict, list)):
                lines.append(_as_text(v, indent))
            else:
                lines.append("%s- %s" % (pad, v))
    else:
        lines.append("%s%s" % (pad, payload))
    return "\n".join(l for l in lines if l != "")


def _config(args):
    return Config(xi_order=args.order or 0, x_order=args.order or 0,
                  max_ramification=args.max_ram, max_restarts=args.restarts)


def _ctx_for(src, cfg):
    return cfg.base_trunc(src.n, src.guess_h())


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_reduce(args, text):
    src = parse_system(text)
    cfg = _config(args)
    if args.iterate:
        rhos = iterative_restraining(src, cfg)
        return {"restraining_indices": [str(r) for r in rhos]}
    part, trace = formal_reduce(src, cfg)
    out = {
        "variable": part.var,
        "branches": [b.to_dict(part.var) for b in part.branches],
        "restraining_indices": [str(r) for r in restraining_indices(trace)],
    }
    if args.trace:
        out["trace"] = trace.to_dict()
    return out


def _cmd_polygon(args, text):
    eq = parse_equation(text)
    poly = eps_polygon(eq)
    kappa, nu, mu, gamma = scalar_moser(eq)
    return {
        "slopes": [str(e.slope) for e in poly.edges],
        "polynomials": [e.poly_str() for e in poly.edges],
        "omega": str(exp_order_scalar(eq)),
        "kappa": kappa,
        "nu": nu,
        "mu": str(mu),
        "gamma": [str(g) for g in gamma],
    }


def _poly_str(coeffs, var="x"):
    parts = []
    for i, c in enumerate(coeffs):
        if c.is_known_zero():
            continue
        cs = c.to_str(var)
        if " + " in cs or " - " in cs:
            cs = "(%s)" % cs
        term = cs if i == 0 else ("lambda" if i == 1 else "lambda^%d" % i)
        if i > 0 and cs not in ("1", "-1"):
            term = "%s*%s" % (cs, term)
        elif i > 0 and cs == "-1":
            term = "-" + term
        parts.append(term)
    if not parts:
        return "0"
    out = parts[0]
    for p in parts[1:]:
        out += " - " + p[1:] if p.startswith("-") else " + " + p
    return out


def _cmd_split(args, text):
    src = parse_system(text)
    cfg = _config(args)
    sys = src.to_system(_ctx_for(src, cfg))
    sp = split(sys)
    return {
        "transformation": sp.record.entry_strings(var=sys.var, eps_den=sys.d),
        "blocks": [len(b) for b in sp.blocks],
        "subsystems": [_system_dict(s) for s in sp.subsystems],
    }


def _cmd_turning(args, text):
    src = parse_system(text)
    cfg = _config(args)
    sys = src.to_system(_ctx_for(src, cfg))
    res = resolve_turning_point(sys)
    return {
        "transformation": res.record.entry_strings(var=sys.var, eps_den=sys.d),
        "x_lattice": res.s,
        "system": _system_dict(res.sys),
    }


def _cmd_moser(args, text):
    """Rank reduction of a system file (the eps-rank engine)."""
    src = parse_system(text)
    cfg = _config(args)
    sys = src.to_system(_ctx_for(src, cfg))
    rr = eps_rank_reduce(sys)
    return {
        "transformation": rr.record.entry_strings(var=sys.var, eps_den=rr.sys.d),
        "h_history": [[h, r] for (h, r) in rr.h_history],
        "h_true_zero": rr.h_true_zero,
        "theta": _poly_str(theta(rr.sys), rr.sys.var),
        "system": _system_dict(rr.sys),
    }


def _cmd_omega(args, text):
    src = parse_system(text)
    cfg = _config(args)
    sys = src.to_system(_ctx_for(src, cfg))
    if sys.h <= 0:
        raise PreconditionError("precondition: h > 0")
    eo = exp_order_system(sys)
    return {
        "omega": str(eo.omega),
        "polynomial": eo.poly_str(sys.var),
        "support": eo.support,
        "guard_h_gt_n_minus_r": eo.guard_ok,
    }


def _cmd_stretch(args, text):
    src = parse_system(text)
    cfg = _config(args)
    st = stretch(src, F(args.rho))
    sys = st.to_system(_ctx_for(st, cfg))
    return {"rho": str(F(args.rho)), "system": _system_dict(sys)}


_COMMANDS = {
    "reduce": _cmd_reduce,
    "polygon": _cmd_polygon,
    "moser": _cmd_moser,
    "split": _cmd_split,
    "turning": _cmd_turning,
    "omega": _cmd_omega,
    "stretch": _cmd_stretch,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="paramred",
                                 description="Exact formal reduction of singularly-perturbed linear systems")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("file", nargs="?", help="input file ('-' or absent: stdin)")
        p.add_argument("--order", type=int, default=0, help="truncation order override")
        p.add_argument("--max-ram", type=int, default=64, dest="max_ram")
        p.add_argument("--restarts", type=int, default=5)
        p.add_argument("--format", choices=("json", "text"), default="json")
        p.add_argument("--trace", action="store_true")
        if name == "reduce":
            p.add_argument("--iterate", action="store_true",
                           help="iterative restraining-index exploration")
        if name == "stretch":
            p.add_argument("--rho", required=True, help="stretch exponent (positive rational)")
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if args.file and args.file != "-":
            with open(args.file) as fh:
                text = fh.read()
        else:
            text = sys.stdin.read()
        payload = _COMMANDS[args.command](args, text)
    except (ParseError, DimensionMismatch) as exc:
        print(json.dumps({"error": "parse", "message": str(exc)}), file=sys.stderr)
        return 2
    except Stalled as exc:
        print(json.dumps({"error": "stalled", "message": str(exc),
                          "omega": str(exc.omega) if exc.omega is not None else None}), file=sys.stderr)
        return 4
    except InsufficientOrder as exc:
        print(json.dumps({"error": "insufficient-order", "message": str(exc)}), file=sys.stderr)
        return 5
    except ParamredError as exc:
        print(json.dumps({"error": "precondition", "message": str(exc)}), file=sys.stderr)
        return 3
    print(_emit(payload, args.format))
    return 0


if __name__ == "__main__":
    sys.exit(main())
