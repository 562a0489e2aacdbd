"""Truncated Puiseux series in x and bivariate series in (x, eps).

A PuiseuxSeries is a sparse map from rational exponents to exact algebraic
coefficients together with a guaranteed order: exponents above `order` are
unknown.  Exact values (polynomials, monomial quotients) carry order = INF.

A BiSeries is an element of the coefficient field used by the systems: a
sparse map k -> PuiseuxSeries of eps^k coefficients with an eps order.  Its
normalization computes the half-plane data (sigma, p, nu): sigma is the
maximal nonpositive slope of a line through (nu, val_x(f_nu)) lying on or
below every stored point (k, val_x(f_k)); p is the line's value at 0.  For
truncated input the slope is taken over the stored window, which is the only
computable reading (an infinite tail can push the true slope lower, see the
geometric-series examples).
"""

from __future__ import annotations

from fractions import Fraction

from .coeff import QQ, AlgebraicNumber
from .errors import DivisionByZero, InsufficientOrder, PreconditionError

INF = float("inf")


def _coef(value):
    if isinstance(value, AlgebraicNumber):
        return value
    return QQ.from_fraction(Fraction(value))


class PuiseuxSeries:
    """Sparse exact series in one variable with rational exponents."""

    __slots__ = ("c", "order")

    def __init__(self, c=None, order=INF):
        self.c = {}
        if c:
            for e, v in c.items():
                v = _coef(v)
                if not v.is_zero():
                    self.c[Fraction(e)] = v
        self.order = order
        if order != INF:
            self.c = {e: v for e, v in self.c.items() if e <= order}

    # -- constructors -------------------------------------------------------

    @staticmethod
    def zero(order=INF):
        return PuiseuxSeries({}, order)

    @staticmethod
    def one():
        return PuiseuxSeries({0: 1})

    @staticmethod
    def monomial(coeff, exp):
        return PuiseuxSeries({Fraction(exp): coeff})

    @staticmethod
    def variable():
        return PuiseuxSeries({1: 1})

    # -- predicates ----------------------------------------------------------

    def is_known_zero(self):
        """No stored terms (zero to the guaranteed order)."""
        return not self.c

    def is_exact(self):
        return self.order == INF

    def is_zero(self, certainty=INF):
        """Decide exact vanishing.

        Empty exact series are zero; empty truncated series are zero once the
        guaranteed order reaches `certainty`, otherwise the question is
        undecidable and InsufficientOrder is raised.
        """
        if self.c:
            return False
        if self.order == INF or self.order >= certainty:
            return True
        raise InsufficientOrder("zero test at order %s" % self.order)

    def lb_val(self):
        """Lower bound for the valuation (exact when terms are stored)."""
        if self.c:
            return min(self.c)
        return INF if self.order == INF else self.order

    def val(self):
        if self.c:
            return min(self.c)
        if self.order == INF:
            return INF
        raise InsufficientOrder("valuation unknown below order %s" % self.order)

    def leading(self):
        v = self.val()
        if v == INF:
            raise DivisionByZero("leading coefficient of zero series")
        return v, self.c[v]

    def ram(self):
        den = 1
        for e in self.c:
            den = den * e.denominator // _igcd(den, e.denominator)
        return den

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, PuiseuxSeries):
            other = PuiseuxSeries.monomial(other, 0)
        order = min(self.order, other.order)
        out = dict(self.c)
        for e, v in other.c.items():
            s = out.get(e)
            s = v if s is None else s + v
            if s.is_zero():
                out.pop(e, None)
            else:
                out[e] = s
        return PuiseuxSeries(out, order)

    __radd__ = __add__

    def __neg__(self):
        return PuiseuxSeries({e: -v for e, v in self.c.items()}, self.order)

    def __sub__(self, other):
        if not isinstance(other, PuiseuxSeries):
            other = PuiseuxSeries.monomial(other, 0)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, PuiseuxSeries):
            return self.scale(other)
        if self.is_exact() and not self.c:
            return PuiseuxSeries.zero()
        if other.is_exact() and not other.c:
            return PuiseuxSeries.zero()
        order = min(self.order + other.lb_val(), other.order + self.lb_val())
        out = {}
        for e1, v1 in self.c.items():
            for e2, v2 in other.c.items():
                e = e1 + e2
                if e > order:
                    continue
                s = out.get(e)
                s = v1 * v2 if s is None else s + v1 * v2
                out[e] = s
        return PuiseuxSeries(out, order)

    __rmul__ = __mul__

    def scale(self, coeff):
        coeff = _coef(coeff)
        if coeff.is_zero():
            return PuiseuxSeries.zero() if self.is_exact() else PuiseuxSeries.zero(self.order)
        return PuiseuxSeries({e: v * coeff for e, v in self.c.items()}, self.order)

    def div_int(self, k):
        return self.scale(Fraction(1, k))

    def x_shift(self, exp):
        exp = Fraction(exp)
        order = self.order if self.order == INF else self.order + exp
        return PuiseuxSeries({e + exp: v for e, v in self.c.items()}, order)

    def x_scale(self, factor):
        """Substitute x -> x^factor on exponents (factor a positive rational)."""
        factor = Fraction(factor)
        if factor <= 0:
            raise PreconditionError("exponent scaling must be positive")
        order = self.order if self.order == INF else self.order * factor
        return PuiseuxSeries({e * factor: v for e, v in self.c.items()}, order)

    def derivative(self):
        out = {}
        for e, v in self.c.items():
            if e != 0:
                out[e - 1] = v * e
        order = self.order if self.order == INF else self.order - 1
        return PuiseuxSeries(out, order)

    def integrate(self):
        """Termwise antiderivative; x^-1 terms are rejected (handled by the
        caller as logarithms)."""
        out = {}
        for e, v in self.c.items():
            if e == -1:
                raise PreconditionError("x^-1 has no power antiderivative")
            out[e + 1] = v / Fraction(e + 1)
        order = self.order if self.order == INF else self.order + 1
        return PuiseuxSeries(out, order)

    def truncate(self, order):
        if order >= self.order:
            return self
        return PuiseuxSeries({e: v for e, v in self.c.items() if e <= order}, order)

    def inverse(self, target_order):
        """Geometric-series inverse up to x-order `target_order` past the
        leading exponent's reciprocal."""
        v, lead = self.leading()
        rest = PuiseuxSeries({e - v: c for e, c in self.c.items() if e != v},
                             self.order if self.order == INF else self.order - v)
        li = lead.inverse()
        u = rest.scale(li)  # val > 0
        span = target_order
        known = INF if (self.order == INF) else self.order - v
        acc = PuiseuxSeries.one()
        term = PuiseuxSeries.one()
        uval = u.lb_val()
        if uval <= 0 and u.c:
            raise PreconditionError("inverse: tail not of positive valuation")
        k = 1
        while u.c and k * uval <= span:
            term = (term * (-1)) * u
            term = term.truncate(span)
            acc = acc + term
            k += 1
        acc = acc.truncate(min(span, known))
        return acc.scale(li).x_shift(-v)

    def eval0(self):
        """Value at x = 0 for a series regular there."""
        if self.c and min(self.c) < 0:
            raise PreconditionError("series has a pole at 0")
        if Fraction(0) in self.c:
            return self.c[Fraction(0)]
        if self.c or self.order == INF or self.order >= 0:
            return _shared_zero(self)
        raise InsufficientOrder("constant term unknown")

    def coeff_at(self, exp):
        exp = Fraction(exp)
        v = self.c.get(exp)
        if v is not None:
            return v
        if self.order != INF and exp > self.order:
            raise InsufficientOrder("coefficient beyond guaranteed order")
        return _shared_zero(self)

    def map_coeff(self, fn):
        return PuiseuxSeries({e: fn(v) for e, v in self.c.items()}, self.order)

    # -- comparison / display -------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, PuiseuxSeries):
            return NotImplemented
        return self.c == other.c and self.order == other.order

    def same_terms(self, other):
        return self.c == other.c

    def __repr__(self):
        return "PuiseuxSeries(%s)" % self.to_str()

    def to_str(self, var="x"):
        return _terms_to_str([(v, e, Fraction(0)) for e, v in sorted(self.c.items())], var=var) + (
            "" if self.order == INF else " + O(%s^(%s))" % (var, _fr(self.order))
        )


def _shared_zero(ps):
    for v in ps.c.values():
        return v.tower.zero()
    return QQ.zero()


def _igcd(a, b):
    while b:
        a, b = b, a % b
    return a


def _fr(q):
    q = Fraction(q)
    return "%d/%d" % (q.numerator, q.denominator) if q.denominator != 1 else "%d" % q.numerator


def _pow_str(name, exp):
    exp = Fraction(exp)
    if exp == 1:
        return name
    if exp.denominator == 1 and exp >= 0:
        return "%s^%d" % (name, exp.numerator)
    return "%s^(%s)" % (name, _fr(exp))


def _terms_to_str(terms, var="x", eps="eps"):
    """terms: iterable of (coeff, x_exp, eps_exp)."""
    parts = []
    for coeff, xe, ke in terms:
        cs = coeff.to_str()
        if " + " in cs or " - " in cs:
            cs = "(%s)" % cs
        fs = [cs]
        if xe != 0:
            fs.append(_pow_str(var, xe))
        if ke != 0:
            fs.append(_pow_str(eps, ke))
        if len(fs) > 1 and fs[0] == "1":
            fs = fs[1:]
        elif len(fs) > 1 and fs[0] == "-1":
            fs = ["-" + fs[1]] + fs[2:]
        parts.append("*".join(fs))
    if not parts:
        return "0"
    out = parts[0]
    for p in parts[1:]:
        out += " - " + p[1:] if p.startswith("-") else " + " + p
    return out


class BiSeries:
    """Element of the bivariate coefficient field: sum_k f_k(x) eps^k."""

    __slots__ = ("t", "eo", "_norm")

    def __init__(self, terms=None, eps_order=INF):
        self.t = {}
        if terms:
            for k, f in terms.items():
                if not isinstance(f, PuiseuxSeries):
                    f = PuiseuxSeries.monomial(f, 0)
                if f.c or not f.is_exact():
                    self.t[int(k)] = f
        self.eo = eps_order
        if eps_order != INF:
            self.t = {k: f for k, f in self.t.items() if k <= eps_order}
        self._norm = None

    # -- constructors ---------------------------------------------------------

    @staticmethod
    def zero(eps_order=INF):
        return BiSeries({}, eps_order)

    @staticmethod
    def one():
        return BiSeries({0: PuiseuxSeries.one()})

    @staticmethod
    def monomial(coeff, x_exp, eps_exp):
        return BiSeries({int(eps_exp): PuiseuxSeries.monomial(coeff, x_exp)})

    @staticmethod
    def from_px(f, k=0):
        return BiSeries({k: f})

    # -- predicates -------------------------------------------------------------

    def is_known_zero(self):
        return all(f.is_known_zero() for f in self.t.values())

    def is_exact(self):
        return self.eo == INF and all(f.is_exact() for f in self.t.values())

    def is_zero(self, certainty=INF, x_certainty=INF):
        ans = True
        for f in self.t.values():
            if not f.is_zero(x_certainty):
                return False
        if self.eo == INF or self.eo >= certainty:
            return ans
        raise InsufficientOrder("eps zero test at order %s" % self.eo)

    def lb_nu(self):
        ks = [k for k, f in self.t.items() if f.c]
        if ks:
            return min(ks)
        return INF if self.eo == INF else self.eo

    def val_eps(self, x_certainty=INF):
        """Exact eps valuation; raises if undecidable.

        Empty truncated coefficients guaranteed past `x_certainty` are
        accepted as zero."""
        for k in sorted(self.t):
            f = self.t[k]
            if f.c:
                return k
            if not f.is_exact() and f.order < x_certainty:
                raise InsufficientOrder("eps coefficient %d zero only to order %s" % (k, f.order))
        if self.eo == INF:
            return INF
        raise InsufficientOrder("eps valuation unknown beyond order %s" % self.eo)

    def coeff(self, k):
        f = self.t.get(int(k))
        if f is not None:
            return f
        if self.eo != INF and k > self.eo:
            raise InsufficientOrder("eps coefficient beyond guaranteed order")
        return PuiseuxSeries.zero()

    # -- arithmetic ---------------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, BiSeries):
            other = BiSeries.monomial(other, 0, 0)
        eo = min(self.eo, other.eo)
        out = dict(self.t)
        for k, f in other.t.items():
            g = out.get(k)
            out[k] = f if g is None else g + f
        return BiSeries(out, eo)

    __radd__ = __add__

    def __neg__(self):
        return BiSeries({k: -f for k, f in self.t.items()}, self.eo)

    def __sub__(self, other):
        if not isinstance(other, BiSeries):
            other = BiSeries.monomial(other, 0, 0)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, BiSeries):
            if isinstance(other, PuiseuxSeries):
                other = BiSeries.from_px(other)
            else:
                return self.scale(other)
        if self.is_exact() and not self.t:
            return BiSeries.zero()
        if other.is_exact() and not other.t:
            return BiSeries.zero()
        eo = min(self.eo + other.lb_nu(), other.eo + self.lb_nu())
        out = {}
        for k1, f1 in self.t.items():
            if not f1.c and f1.is_exact():
                continue
            for k2, f2 in other.t.items():
                if not f2.c and f2.is_exact():
                    continue
                k = k1 + k2
                if k > eo:
                    continue
                # empty truncated slices participate: their order caps the
                # guaranteed order of the product slice
                p = f1 * f2
                g = out.get(k)
                out[k] = p if g is None else g + p
        return BiSeries(out, eo)

    __rmul__ = __mul__

    def scale(self, coeff):
        return BiSeries({k: f.scale(coeff) for k, f in self.t.items()}, self.eo)

    def div_int(self, n):
        return self.scale(Fraction(1, n))

    def mul_px(self, g):
        return BiSeries({k: f * g for k, f in self.t.items()}, self.eo)

    def mul_monomial(self, coeff, x_exp, eps_exp):
        eo = self.eo if self.eo == INF else self.eo + int(eps_exp)
        return BiSeries(
            {k + int(eps_exp): f.x_shift(x_exp).scale(coeff) for k, f in self.t.items()}, eo
        )

    def derivative(self):
        return BiSeries({k: f.derivative() for k, f in self.t.items()}, self.eo)

    def eps_scale(self, d):
        """Substitute eps = eta^d: exponents multiply by d."""
        d = int(d)
        eo = self.eo if self.eo == INF else self.eo * d
        return BiSeries({k * d: f for k, f in self.t.items()}, eo)

    def x_scale(self, factor):
        return BiSeries({k: f.x_scale(factor) for k, f in self.t.items()}, self.eo)

    def truncate_eps(self, eo):
        if eo >= self.eo:
            return self
        return BiSeries({k: f for k, f in self.t.items() if k <= eo}, eo)

    def truncate_x(self, order):
        return BiSeries({k: f.truncate(order) for k, f in self.t.items()}, self.eo)

    def inverse(self, eps_span, x_span, x_certainty=INF):
        """Inverse in the bivariate field, to eps-width `eps_span` and x-width
        `x_span` past the leading monomial."""
        nu = self.val_eps(x_certainty)
        if nu == INF:
            raise DivisionByZero("inverse of zero element")
        lead = self.t[nu]
        li = lead.inverse(x_span)
        rest = BiSeries({k - nu: f for k, f in self.t.items() if k != nu},
                        self.eo if self.eo == INF else self.eo - nu)
        u = rest.mul_px(li)  # eps valuation >= 1
        eo_known = INF if self.eo == INF else self.eo - nu
        acc = BiSeries.one()
        term = BiSeries.one()
        k = 1
        while u.t and k <= eps_span:
            term = (term * u).scale(-1).truncate_eps(eps_span).truncate_x(x_span)
            acc = acc + term
            if term.is_known_zero():
                break
            k += 1
        acc = acc.truncate_eps(min(eps_span, eo_known))
        return acc.mul_px(li).eps_shift(-nu)

    def eps_shift(self, j):
        eo = self.eo if self.eo == INF else self.eo + j
        return BiSeries({k + j: f for k, f in self.t.items()}, eo)

    # -- normalization -------------------------------------------------------------

    def normalize(self):
        """Half-plane data (sigma, p, nu) over the stored window.

        sigma is the largest nonpositive slope of a line through the leading
        point (nu, val_x(f_nu)) staying on or below every stored point; p is
        its intercept val_x(f_nu) - sigma*nu.  The zero element reports
        (0, 0, None).
        """
        if self._norm is not None:
            return self._norm
        nu = None
        for k in sorted(self.t):
            if self.t[k].c:
                nu = k
                break
        if nu is None:
            self._norm = (Fraction(0), Fraction(0), None)
            return self._norm
        vnu = self.t[nu].val()
        sigma = Fraction(0)
        for k in sorted(self.t):
            if k == nu:
                continue
            f = self.t[k]
            lb = f.lb_val()
            if lb == INF:
                continue
            v = min(f.c) if f.c else lb
            bound = Fraction(v - vnu, k - nu) if k > nu else None
            if bound is not None and bound < sigma:
                sigma = bound
        p = vnu - sigma * nu
        self._norm = (sigma, Fraction(p), nu)
        return self._norm

    def sigma(self):
        return self.normalize()[0]

    def p(self):
        return self.normalize()[1]

    def nu(self):
        return self.normalize()[2]

    def xi_coeff(self, j):
        """Coefficient of xi^j in the xi-representation
        x^p * sum x^(-k sigma - p) f_k xi^k, xi = x^sigma eps."""
        sigma, p, nu = self.normalize()
        if nu is None:
            return PuiseuxSeries.zero()
        k = nu + j
        return self.coeff(k).x_shift(-sigma * k - p)

    # -- display ----------------------------------------------------------------

    def monomials(self):
        """Sorted list of (coeff, x_exp, eps_exp)."""
        out = []
        for k in sorted(self.t):
            for e in sorted(self.t[k].c):
                out.append((self.t[k].c[e], e, Fraction(k)))
        return out

    def to_str(self, var="x", eps="eps", eps_den=1, show_order=True):
        terms = [(c, xe, Fraction(ke, eps_den)) for (c, xe, ke) in self.monomials()]
        s = _terms_to_str(terms, var=var, eps=eps)
        if show_order and self.eo != INF:
            s += " + O(%s^(%s))" % (eps, _fr(Fraction(self.eo + 1, eps_den)))
        return s

    def __eq__(self, other):
        if not isinstance(other, BiSeries):
            return NotImplemented
        a = {k: f for k, f in self.t.items() if f.c}
        b = {k: f for k, f in other.t.items() if f.c}
        return a == b and self.eo == other.eo

    def same_terms(self, other):
        a = {k: f.c for k, f in self.t.items() if f.c}
        b = {k: f.c for k, f in other.t.items() if f.c}
        return a == b

    def __repr__(self):
        return "BiSeries(%s)" % self.to_str()


def normalize(raw_terms, eps_order=INF):
    """Build a BiSeries from a raw map k -> PuiseuxSeries and compute its
    half-plane normalization."""
    f = BiSeries(raw_terms, eps_order)
    f.normalize()
    return f


def bi_derive(f):
    """d/dx on a bivariate element (termwise on the eps coefficients; on the
    xi-representation this is the twisted rule with the sigma*k/x correction)."""
    return f.derivative()


def rescale_to_regular(f):
    """Largest integer e <= sigma_f and the regular rewrite.

    Returns (e, shift, g) with f = x^shift * g(x, x^e eps') termwise, where
    every coefficient of g has nonnegative x-valuation: g_k = f_k * x^(-e*k - shift).
    """
    sigma, p, nu = f.normalize()
    if nu is None:
        raise PreconditionError("rescale_to_regular expects a nonzero element")
    e = Fraction(sigma).__floor__()
    shift = None
    for k, g in f.t.items():
        if not g.c:
            continue
        cand = g.val() - e * k
        shift = cand if shift is None else min(shift, cand)
    out = {k: g.x_shift(-e * k - shift) for k, g in f.t.items()}
    return e, shift, BiSeries(out, f.eo)


def ramify_x(f, s):
    """Refine the x lattice: substitute x = t^s (exponents scale by s)."""
    if int(s) <= 0:
        raise PreconditionError("ramification index must be positive")
    return f.x_scale(int(s))


def ramify_eps(f, d):
    """Refine the eps lattice: substitute eps = eta^d (eps exponents scale)."""
    if int(d) <= 0:
        raise PreconditionError("ramification index must be positive")
    return f.eps_scale(int(d))
