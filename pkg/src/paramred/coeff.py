"""Exact arithmetic over towers of quotient extensions of the rationals.

A tower is a chain Q = K_0 < K_1 < ... < K_m where K_{i+1} = K_i[z_i]/(m_i)
for a monic squarefree m_i of degree >= 2.  Defining polynomials are only
required squarefree, never proven irreducible: if an inversion discovers a
nontrivial factor of some m_i, a ZeroDivisor carrying that factor is raised
(dynamic evaluation) and the caller may restart in the quotient by each
factor.

Elements are stored as reduced multivariate polynomials in the generators
with Fraction coefficients; degree in generator i stays below deg(m_i).
Towers are immutable: extending one returns a new value, so all elements are
freely shareable.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import DivisionByZero, NotSquarefree, PreconditionError, ZeroDivisor

# coords: dict mapping exponent tuples (one slot per tower level) to Fraction.


def _czero():
    return {}


def _cadd(a, b):
    out = dict(a)
    for e, q in b.items():
        s = out.get(e, 0) + q
        if s:
            out[e] = s
        else:
            out.pop(e, None)
    return out


def _cneg(a):
    return {e: -q for e, q in a.items()}


def _cscale(a, q):
    if not q:
        return {}
    return {e: v * q for e, v in a.items()}


def _pad(exps, depth):
    return exps + (0,) * (depth - len(exps))


def _cembed(a, depth):
    return {_pad(e, depth): q for e, q in a.items()}


class ExtensionTower:
    """Immutable chain of quotient extensions over Q.

    Each level holds the generator name and the low-order coefficients of its
    monic defining polynomial, expressed over the lower levels.
    """

    __slots__ = ("levels",)

    def __init__(self, levels=()):
        self.levels = tuple(levels)

    def depth(self):
        return len(self.levels)

    def degrees(self):
        return tuple(deg for (_, deg, _) in self.levels)

    def is_prefix_of(self, other):
        return self.levels == other.levels[: len(self.levels)]

    def extend(self, name, minpoly_low):
        """Append a level whose defining polynomial is monic with the given
        low-order coefficients (coords over this tower)."""
        d = self.depth()
        deg = len(minpoly_low)
        low = tuple({k: v for k, v in _cembed(c, d).items() if v} for c in minpoly_low)
        return ExtensionTower(self.levels + ((name, deg, low),))

    def zero(self):
        return AlgebraicNumber(self, {})

    def one(self):
        return self.from_fraction(1)

    def from_fraction(self, q):
        q = Fraction(q)
        if not q:
            return AlgebraicNumber(self, {})
        return AlgebraicNumber(self, {(0,) * self.depth(): q})

    def gen(self, i):
        if not 0 <= i < self.depth():
            raise PreconditionError("no such generator")
        e = [0] * self.depth()
        e[i] = 1
        return AlgebraicNumber(self, {tuple(e): Fraction(1)})

    def gen_name(self, i):
        return self.levels[i][0]

    def minpoly(self, i):
        """Defining polynomial of level i as a Upoly over this tower."""
        _, deg, low = self.levels[i]
        coeffs = [AlgebraicNumber(self, dict(_cembed(c, self.depth()))) for c in low]
        coeffs.append(self.one())
        return Upoly(self, coeffs)

    def __eq__(self, other):
        return isinstance(other, ExtensionTower) and self.levels == other.levels

    def __hash__(self):
        return hash(self.levels)

    def __repr__(self):
        return "ExtensionTower(%s)" % ", ".join(name for (name, _, _) in self.levels)


QQ = ExtensionTower()


def _reduce(coords, tower):
    degs = tower.degrees()
    if not degs:
        return {e: q for e, q in coords.items() if q}
    out = {}
    stack = list(coords.items())
    while stack:
        exps, q = stack.pop()
        if not q:
            continue
        hit = -1
        for i in range(len(degs) - 1, -1, -1):
            if exps[i] >= degs[i]:
                hit = i
                break
        if hit < 0:
            s = out.get(exps, 0) + q
            if s:
                out[exps] = s
            else:
                out.pop(exps, None)
            continue
        i = hit
        base = list(exps)
        base[i] -= degs[i]
        _, _, low = tower.levels[i]
        for j, cj in enumerate(low):
            for e2, q2 in cj.items():
                ne = list(base)
                ne[i] += j
                for t, v in enumerate(e2):
                    ne[t] += v
                stack.append((tuple(ne), -q * q2))
    return out


def _cmul(a, b, tower):
    raw = {}
    for ea, qa in a.items():
        for eb, qb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            s = raw.get(e, 0) + qa * qb
            if s:
                raw[e] = s
            else:
                raw.pop(e, None)
    return _reduce(raw, tower)


def _top_level(coords, depth):
    """Largest generator index actually used, or -1."""
    lvl = -1
    for e in coords:
        for i in range(depth - 1, lvl, -1):
            if e[i]:
                lvl = max(lvl, i)
                break
    return lvl


def _as_upoly(coords, var):
    """View coords as a dense univariate polynomial in generator `var`,
    coefficients being coords over the lower levels (tuples shortened)."""
    by_deg = {}
    for e, q in coords.items():
        d = e[var]
        low = e[:var]
        slot = by_deg.setdefault(d, {})
        slot[low] = slot.get(low, 0) + q
    degmax = max(by_deg) if by_deg else -1
    return [by_deg.get(d, {}) for d in range(degmax + 1)]


def _from_upoly(poly, var, depth):
    out = {}
    for d, c in enumerate(poly):
        for low, q in c.items():
            if q:
                e = _pad(low, var) + (d,) + (0,) * (depth - var - 1)
                out[e] = out.get(e, 0) + q
    return out


def _u_trim(p):
    while p and not p[-1]:
        p.pop()
    return p


def _u_scale(p, c, tower):
    return _u_trim([_cmul(x, c, tower) for x in p])


def _u_sub_shift(p, q, c, k, tower):
    """p - c * z^k * q, all coefficients over `tower`."""
    out = list(p) + [{}] * max(0, k + len(q) - len(p))
    for j, qj in enumerate(q):
        out[k + j] = _cadd(out[k + j], _cneg(_cmul(c, qj, tower)))
    return _u_trim(out)


def _inv_coords(coords, tower):
    depth = tower.depth()
    if not coords:
        raise DivisionByZero("inverse of zero")
    lvl = _top_level(coords, depth)
    if lvl < 0:
        q = coords[(0,) * depth]
        return {(0,) * depth: Fraction(1) / q}
    sub = ExtensionTower(tower.levels[:lvl])
    subdepth = lvl
    a = [{k[:subdepth]: v for k, v in ({} if not c else c).items()} for c in _as_upoly(coords, lvl)]
    a = [{k: v for k, v in c.items() if v} for c in a]
    name, deg, low = tower.levels[lvl]
    m = [dict(c) for c in low] + [{(0,) * subdepth: Fraction(1)}]
    g, s = _u_half_xgcd(a, m, sub)
    if len(g) != 1:
        factor = Upoly(sub, [AlgebraicNumber(sub, c) for c in g]).monic()
        raise ZeroDivisor(factor, "defining polynomial of %s factors" % name)
    ginv = _inv_coords(_cembed(g[0], subdepth), sub)
    ginv_short = {k[:subdepth]: v for k, v in ginv.items()}
    s = _u_scale(s, ginv_short, sub)
    return _reduce(_from_upoly(s, lvl, depth), tower)


def _u_half_xgcd(a, m, tower):
    """Extended gcd returning (g, s) with s*a = g (mod m), over `tower`."""
    r0, r1 = list(m), list(a)
    s0, s1 = [], [{(0,) * tower.depth(): Fraction(1)}]
    while r1:
        q, r = _u_divmod(r0, r1, tower)
        r0, r1 = r1, r
        s0, s1 = s1, _u_poly_sub(s0, _u_poly_mul(q, s1, tower))
    return r0, s0


def _u_poly_mul(a, b, tower):
    if not a or not b:
        return []
    out = [{} for _ in range(len(a) + len(b) - 1)]
    for i, ai in enumerate(a):
        if not ai:
            continue
        for j, bj in enumerate(b):
            if bj:
                out[i + j] = _cadd(out[i + j], _cmul(ai, bj, tower))
    return _u_trim(out)


def _u_poly_sub(a, b):
    out = list(a) + [{}] * max(0, len(b) - len(a))
    for j, bj in enumerate(b):
        out[j] = _cadd(out[j], _cneg(bj))
    return _u_trim(out)


def _u_divmod(a, b, tower):
    if not b:
        raise DivisionByZero("polynomial division by zero")
    lead_inv_full = _inv_coords(_cembed(b[-1], tower.depth()), tower)
    lead_inv = {k[: tower.depth()]: v for k, v in lead_inv_full.items()}
    r = _u_trim([dict(c) for c in a])
    q = []
    while r and len(r) >= len(b):
        c = _cmul(r[-1], lead_inv, tower)
        k = len(r) - len(b)
        while len(q) <= k:
            q.append({})
        q[k] = _cadd(q[k], c)
        r = _u_trim(_u_sub_shift(r, b, c, k, tower))
    return _u_trim(q), r


class AlgebraicNumber:
    """Element of a tower: reduced polynomial in the generators over Q."""

    __slots__ = ("tower", "coords")

    def __init__(self, tower, coords):
        self.tower = tower
        self.coords = coords

    # -- coercion ---------------------------------------------------------

    @staticmethod
    def of(value, tower=QQ):
        if isinstance(value, AlgebraicNumber):
            return value
        return tower.from_fraction(Fraction(value))

    def _join(self, other):
        if not isinstance(other, AlgebraicNumber):
            other = AlgebraicNumber.of(other, self.tower)
        a, b = self, other
        if a.tower is b.tower or a.tower == b.tower:
            return a, b
        if a.tower.is_prefix_of(b.tower):
            return a.lift(b.tower), b
        if b.tower.is_prefix_of(a.tower):
            return a, b.lift(a.tower)
        raise PreconditionError("incompatible extension towers")

    def lift(self, tower):
        if not self.tower.is_prefix_of(tower):
            raise PreconditionError("not a prefix tower")
        return AlgebraicNumber(tower, _cembed(self.coords, tower.depth()))

    # -- predicates --------------------------------------------------------

    def is_zero(self):
        return not self.coords

    def is_rational(self):
        return all(not any(e) for e in self.coords)

    def as_fraction(self):
        if not self.coords:
            return Fraction(0)
        if not self.is_rational():
            raise PreconditionError("not a rational value")
        return next(iter(self.coords.values()))

    # -- ring ops ----------------------------------------------------------

    def __add__(self, other):
        a, b = self._join(other)
        return AlgebraicNumber(a.tower, _cadd(a.coords, b.coords))

    __radd__ = __add__

    def __neg__(self):
        return AlgebraicNumber(self.tower, _cneg(self.coords))

    def __sub__(self, other):
        a, b = self._join(other)
        return AlgebraicNumber(a.tower, _cadd(a.coords, _cneg(b.coords)))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        a, b = self._join(other)
        if a.is_rational():
            return AlgebraicNumber(b.tower, _cscale(b.coords, a.as_fraction()))
        if b.is_rational():
            return AlgebraicNumber(a.tower, _cscale(a.coords, b.as_fraction()))
        return AlgebraicNumber(a.tower, _cmul(a.coords, b.coords, a.tower))

    __rmul__ = __mul__

    def inverse(self):
        if not self.coords:
            raise DivisionByZero("inverse of zero")
        if self.is_rational():
            return AlgebraicNumber(self.tower, {(0,) * self.tower.depth(): 1 / self.as_fraction()})
        return AlgebraicNumber(self.tower, _inv_coords(self.coords, self.tower))

    def __truediv__(self, other):
        a, b = self._join(other)
        return a * b.inverse()

    def __rtruediv__(self, other):
        return AlgebraicNumber.of(other, self.tower) / self

    def __pow__(self, n):
        if n < 0:
            return self.inverse() ** (-n)
        out = AlgebraicNumber(self.tower, {(0,) * self.tower.depth(): Fraction(1)})
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other):
        try:
            a, b = self._join(other)
        except PreconditionError:
            return NotImplemented
        return a.coords == b.coords

    def __hash__(self):
        return hash((self.tower, tuple(sorted(self.coords.items()))))

    # -- display -----------------------------------------------------------

    def __repr__(self):
        return "AlgebraicNumber(%s)" % self.to_str()

    def to_str(self):
        if not self.coords:
            return "0"
        names = [
            "RootOf(%s, index=%d)" % (_minpoly_str(self.tower, i), i)
            for i in range(self.tower.depth())
        ]
        parts = []
        for e, q in sorted(self.coords.items()):
            factors = []
            if q == -1 and any(e):
                factors.append("-")
            elif q != 1 or not any(e):
                factors.append(str(q))
            for i, d in enumerate(e):
                if d == 1:
                    factors.append(names[i])
                elif d > 1:
                    factors.append("%s^%d" % (names[i], d))
            term = "*".join(f for f in factors if f != "-")
            if factors and factors[0] == "-":
                term = "-" + term
            parts.append(term)
        out = parts[0]
        for p in parts[1:]:
            out += " - " + p[1:] if p.startswith("-") else " + " + p
        return out


def _minpoly_str(tower, i):
    _, deg, low = tower.levels[i]
    terms = ["z^%d" % deg if deg > 1 else "z"]
    for j in range(deg - 1, -1, -1):
        c = low[j]
        if not c:
            continue
        if all(not any(e) for e in c):
            q = next(iter(c.values()))
            s = str(q)
        else:
            s = "(%s)" % AlgebraicNumber(ExtensionTower(tower.levels[:i]), dict(c)).to_str()
        if j == 0:
            terms.append("%s" % s)
        elif j == 1:
            terms.append("%s*z" % s)
        else:
            terms.append("%s*z^%d" % (s, j))
    return "+".join(terms).replace("+-", "-")


class Upoly:
    """Dense univariate polynomial with AlgebraicNumber coefficients."""

    __slots__ = ("tower", "coeffs")

    def __init__(self, tower, coeffs):
        cs = list(coeffs)
        for c in cs:
            if not isinstance(c, AlgebraicNumber):
                raise PreconditionError("Upoly coefficients must be constants: got %r" % (c,))
        while cs and cs[-1].is_zero():
            cs.pop()
        self.tower = tower
        self.coeffs = cs

    @staticmethod
    def from_rationals(values, tower=QQ):
        return Upoly(tower, [tower.from_fraction(Fraction(v)) for v in values])

    def degree(self):
        return len(self.coeffs) - 1

    def is_zero(self):
        return not self.coeffs

    def lead(self):
        return self.coeffs[-1]

    def is_monic(self):
        return bool(self.coeffs) and self.lead() == self.tower.one()

    def lift(self, tower):
        return Upoly(tower, [c.lift(tower) for c in self.coeffs])

    def monic(self):
        if self.is_zero():
            return self
        li = self.lead().inverse()
        return Upoly(self.tower, [c * li for c in self.coeffs])

    def __add__(self, other):
        n = max(len(self.coeffs), len(other.coeffs))
        z = self.tower.zero()
        a = self.coeffs + [z] * (n - len(self.coeffs))
        b = other.coeffs + [z] * (n - len(other.coeffs))
        return Upoly(self.tower, [x + y for x, y in zip(a, b)])

    def __sub__(self, other):
        return self + Upoly(other.tower, [-c for c in other.coeffs])

    def __mul__(self, other):
        if self.is_zero() or other.is_zero():
            return Upoly(self.tower, [])
        z = self.tower.zero()
        out = [z] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a.is_zero():
                continue
            for j, b in enumerate(other.coeffs):
                if not b.is_zero():
                    out[i + j] = out[i + j] + a * b
        return Upoly(self.tower, out)

    def scale(self, c):
        return Upoly(self.tower, [x * c for x in self.coeffs])

    def shift_mul(self, k):
        return Upoly(self.tower, [self.tower.zero()] * k + self.coeffs)

    def divmod(self, other):
        if other.is_zero():
            raise DivisionByZero("polynomial division by zero")
        li = other.lead().inverse()
        r = Upoly(self.tower, list(self.coeffs))
        q = Upoly(self.tower, [])
        while not r.is_zero() and r.degree() >= other.degree():
            c = r.lead() * li
            k = r.degree() - other.degree()
            q = q + Upoly(self.tower, [self.tower.zero()] * k + [c])
            r = r - other.scale(c).shift_mul(k)
        return q, r

    def gcd(self, other):
        a, b = self, other
        while not b.is_zero():
            a, b = b, a.divmod(b)[1]
        return a.monic() if not a.is_zero() else a

    def derivative(self):
        return Upoly(
            self.tower,
            [c * Fraction(i) for i, c in enumerate(self.coeffs)][1:],
        )

    def eval(self, x):
        out = self.tower.zero()
        for c in reversed(self.coeffs):
            out = out * x + c
        return out

    def __eq__(self, other):
        return isinstance(other, Upoly) and self.coeffs == other.coeffs

    def __repr__(self):
        if self.is_zero():
            return "Upoly(0)"
        return "Upoly(%s)" % " + ".join(
            "(%s)*z^%d" % (c.to_str(), i) for i, c in enumerate(self.coeffs) if not c.is_zero()
        )


def adjoin_root(tower, poly):
    """Append a level defined by `poly` and return (new tower, its root).

    The polynomial must be monic of degree >= 2 and squarefree over the
    current tower (checked against its derivative).
    """
    if not poly.is_monic():
        raise PreconditionError("defining polynomial must be monic")
    if poly.degree() < 2:
        raise PreconditionError("defining polynomial must have degree >= 2")
    g = poly.gcd(poly.derivative())
    if g.degree() > 0:
        raise NotSquarefree(g)
    name = "r%d" % tower.depth()
    low = [c.coords for c in poly.coeffs[:-1]]
    t2 = tower.extend(name, low)
    return t2, t2.gen(t2.depth() - 1)


def _rational_roots(poly):
    """Rational roots of a squarefree poly with all-rational coefficients."""
    qs = [c.as_fraction() for c in poly.coeffs]
    den = 1
    for q in qs:
        den = den * q.denominator // _gcd(den, q.denominator)
    ints = [int(q * den) for q in qs]
    roots = []
    if ints[0] == 0:
        roots.append(Fraction(0))
        while ints and ints[0] == 0:
            ints = ints[1:]
    if not ints:
        return roots
    a0, an = abs(ints[0]), abs(ints[-1])
    seen = set(roots)
    for p in _divisors_capped(a0):
        for q in _divisors_capped(an):
            for cand in (Fraction(p, q), Fraction(-p, q)):
                if cand in seen:
                    continue
                val = Fraction(0)
                for c in reversed(ints):
                    val = val * cand + c
                if val == 0:
                    roots.append(cand)
                    seen.add(cand)
    return roots


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a


def _divisors_capped(n, cap=200000):
    n = abs(n)
    out = []
    d = 1
    while d * d <= n and d <= cap:
        if n % d == 0:
            out.append(d)
            if d != n // d:
                out.append(n // d)
        d += 1
    return sorted(out)


def _roots_of_squarefree(poly):
    """All roots of a squarefree monic polynomial, adjoining generators as
    needed.  Returns (roots, tower)."""
    tower = poly.tower
    roots = []
    if poly.degree() <= 0:
        return roots, tower
    if poly.degree() == 1:
        return [-poly.coeffs[0]], tower
    if all(c.is_rational() for c in poly.coeffs):
        for r in sorted(_rational_roots(poly)):
            rr = tower.from_fraction(r)
            roots.append(rr)
            poly = poly.divmod(Upoly(tower, [-rr, tower.one()]))[0]
        if poly.degree() <= 0:
            return roots, tower
        if poly.degree() == 1:
            roots.append(-poly.coeffs[0])
            return roots, tower
    t2, theta = adjoin_root(tower, poly)
    roots = [r.lift(t2) for r in roots]
    roots.append(theta)
    rest = poly.lift(t2).divmod(Upoly(t2, [-theta, t2.one()]))[0]
    more, t3 = _roots_of_squarefree(rest)
    return [r.lift(t3) for r in roots] + more, t3


def _squarefree_decomposition(poly):
    """Yun decomposition: list of (factor, multiplicity), factors monic
    squarefree and pairwise coprime."""
    out = []
    p = poly.monic()
    dp = p.derivative()
    a = p.gcd(dp)
    if a.degree() == 0:
        return [(p, 1)] if p.degree() > 0 else []
    b = p.divmod(a)[0]
    c = dp.divmod(a)[0]
    i = 1
    while b.degree() > 0 and i <= poly.degree() + 1:
        d = c - b.derivative()
        f = b.gcd(d)
        if f.degree() > 0:
            out.append((f.monic(), i))
            b = b.divmod(f)[0]
            c = d.divmod(f)[0]
        else:
            c = d
        i += 1
    return out


def distinct_root_partition(poly):
    """Distinct roots of a monic polynomial over a tower, with multiplicities.

    Linear factors over the current tower give explicit roots; any remaining
    squarefree nonlinear factor is split by adjoining one of its roots and
    re-factoring, so the returned roots are pairwise distinct elements of the
    (possibly extended) final tower and the multiplicities sum to the degree.
    """
    if not poly.is_monic():
        raise PreconditionError("distinct_root_partition expects a monic polynomial")
    pairs = []
    tower = poly.tower
    for factor, mult in _squarefree_decomposition(poly):
        roots, tower2 = _roots_of_squarefree(factor.lift(tower) if tower is not factor.tower else factor)
        pairs = [(r.lift(tower2), m) for (r, m) in pairs]
        pairs.extend((r, mult) for r in roots)
        tower = tower2
    total = sum(m for (_, m) in pairs)
    if total != poly.degree():
        raise PreconditionError("root extraction lost factors (degree %d of %d)" % (total, poly.degree()))
    return pairs
