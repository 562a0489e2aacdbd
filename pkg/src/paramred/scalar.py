"""Scalar n-th order equations: eps-polygon, exponential order, Moser data.

An equation is monic in the highest derivative,

    d^n f + a_{n-1}(x, xi) d^{n-1} f + ... + a_0(x, xi) f = 0,

with coefficients in the bivariate field and a declared slope sigma for
xi = x^sigma eps.  The polygon collects the points (i, val_eps a_i); its
edge slopes are nonnegative rationals and the largest one is the eps
exponential order.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .coeff import QQ
from .errors import PreconditionError
from .linalg import PerturbedSystem, Trunc
from .series import INF, BiSeries, PuiseuxSeries

F = Fraction


@dataclass
class ScalarEquation:
    """Monic scalar equation with BiSeries coefficients a_0 .. a_n, a_n = 1."""

    n: int
    a: list
    sigma: Fraction = F(0)
    d: int = 1

    def __post_init__(self):
        if len(self.a) != self.n + 1:
            raise PreconditionError("need n + 1 coefficients")
        if not self.a[self.n].same_terms(BiSeries.one()):
            raise PreconditionError("equation must be monic in the top derivative")

    def nu(self, i):
        """val_eps of a_i (INF for the zero coefficient)."""
        return self.a[i].val_eps()


@dataclass
class PolygonEdge:
    slope: Fraction
    support: list          # indices i on the edge, ascending
    poly: dict             # X-degree -> PuiseuxSeries coefficient

    def poly_str(self, var="x"):
        parts = []
        for deg in sorted(self.poly, reverse=True):
            c = self.poly[deg]
            cs = c.to_str(var=var)
            if " + " in cs or " - " in cs:
                cs = "(%s)" % cs
            if deg == 0:
                parts.append(cs)
            else:
                xs = "X" if deg == 1 else "X^%d" % deg
                if cs == "1":
                    parts.append(xs)
                elif cs == "-1":
                    parts.append("-" + xs)
                else:
                    parts.append("%s*%s" % (cs, xs))
        out = parts[0]
        for p in parts[1:]:
            out += " - " + p[1:] if p.startswith("-") else " + " + p
        return out


@dataclass
class EpsPolygonScalar:
    points: list           # (i, nu_i) for nonzero coefficients
    edges: list            # PolygonEdge, slopes strictly increasing


def _lower_hull(points):
    pts = sorted(points)
    hull = []
    for pt in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (y2 - y1) * (pt[0] - x1) >= (pt[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(pt)
    return hull


def eps_polygon(eq):
    """Lower convex hull of the points (i, val_eps a_i) with the leftward
    quadrant closure; each edge carries its polynomial in X (powers X^{i_k},
    matching the worked forms; sign-normalized on the top coefficient)."""
    pts = []
    for i, ai in enumerate(eq.a):
        if ai.is_known_zero():
            continue
        pts.append((i, ai.val_eps()))
    if not pts:
        raise PreconditionError("zero equation has no polygon")
    numin = min(v for (_, v) in pts)
    aug = pts + [(0, numin)]
    hull = _lower_hull(aug)
    edges = []
    for (i1, v1), (i2, v2) in zip(hull, hull[1:]):
        slope = F(v2 - v1, i2 - i1)
        if slope < 0:
            continue
        support = [i for (i, v) in pts if i1 <= i <= i2 and v == v1 + slope * (i - i1)]
        poly = {}
        for i in support:
            ai = eq.a[i]
            k = ai.val_eps()
            poly[i] = ai.t[k]
        poly = _sign_normalize(poly)
        edges.append(PolygonEdge(slope, support, poly))
    return EpsPolygonScalar(pts, edges)


def _sign_normalize(poly):
    deg = max(poly)
    lead = poly[deg]
    v = lead.lb_val()
    c = lead.c.get(v)
    if c is not None and c.is_rational() and c.as_fraction() < 0:
        return {k: -p for k, p in poly.items()}
    return poly


def exp_order_scalar(eq):
    """Largest polygon slope: max(0, max_i -val_eps(a_i)/(n - i))."""
    best = F(0)
    for i in range(eq.n):
        if eq.a[i].is_known_zero():
            continue
        cand = F(-eq.a[i].val_eps(), eq.n - i)
        if cand > best:
            best = cand
    return best


def scalar_moser(eq):
    """Moser data (kappa, nu, mu, gamma).

    kappa is the least natural number with val_eps(a_i) + (n-i) kappa >= 0
    for all i; nu = max_i (i-n)(kappa-1) - val_eps(a_i) (i = n included);
    mu = kappa + nu/n; gamma_i = max(kappa (i-n), (kappa-1)(i-n) - nu)."""
    n = eq.n
    kappa = 0
    for i in range(n):
        if eq.a[i].is_known_zero():
            continue
        nu_i = eq.a[i].val_eps()
        if nu_i < 0:
            kappa = max(kappa, (-nu_i + (n - i) - 1) // (n - i))
    nu = None
    for i in range(n + 1):
        if eq.a[i].is_known_zero():
            continue
        nu_i = eq.a[i].val_eps()
        cand = (i - n) * (kappa - 1) - nu_i
        nu = cand if nu is None else max(nu, cand)
    mu = kappa + F(nu, n)
    gamma = [max(kappa * (i - n), (kappa - 1) * (i - n) - nu) for i in range(n)]
    return kappa, nu, mu, gamma


def _xi_coeff(b, sigma, k):
    """Coefficient of xi^k when the raw element is read with xi = x^sigma eps."""
    return b.coeff(k).x_shift(-F(sigma) * k)


def scalar_to_irreducible_system(eq, ctx=None):
    """Sparse first-order system x xi^kappa dW = A W built from the weighted
    substitutions w_{i+1} = xi^{gamma_i} d^i f.

    Diagonal entries sigma_a gamma_i xi^kappa, superdiagonal x xi below the
    corner index i0 = n - nu and x at or above it, last row x alpha_i with
    alpha_i = -a_i xi^{-gamma_i}.  rank A(x,0) = nu.  Returned in the given
    presentation, without renormalization."""
    n = eq.n
    kappa, nu, mu, gamma = scalar_moser(eq)
    i0 = n - nu
    ctx = ctx or Trunc.for_system(n, kappa)
    zero = PuiseuxSeries.zero()
    Ak = {}

    def slot(k, i, j):
        M = Ak.get(k)
        if M is None:
            M = [[zero for _ in range(n)] for _ in range(n)]
            Ak[k] = M
        return M

    def add(k, i, j, ps):
        if not ps.c and ps.is_exact():
            return
        M = slot(k, i, j)
        M[i][j] = M[i][j] + ps

    for i in range(n):
        c = eq.sigma * gamma[i]
        if c:
            add(kappa, i, i, PuiseuxSeries.monomial(QQ.from_fraction(c), 0))
    for i in range(n - 1):
        add(1 if i < i0 else 0, i, i + 1, PuiseuxSeries.monomial(QQ.one(), 1))
    for i in range(n):
        ai = eq.a[i]
        for k in sorted(ai.t):
            j = k - gamma[i]
            if j < 0:
                raise PreconditionError("gamma does not dominate val_eps(a_%d)" % i)
            add(j, n - 1, i, _xi_coeff(-ai, eq.sigma, k).x_shift(1))
    if 0 not in Ak:
        Ak[0] = [[zero for _ in range(n)] for _ in range(n)]
    ko = INF
    for c in eq.a:
        if c.eo != INF:
            ko = min(ko, c.eo - min(gamma))
    return PerturbedSystem.from_parts(n, kappa, F(1), eq.sigma, Ak, ko, ctx, d=eq.d)
