"""Linear algebra over the series rings and the perturbed-system normal form.

Matrices are plain lists of rows whose entries are AlgebraicNumber,
PuiseuxSeries or BiSeries values; the generic helpers only use ring
operations.  A PerturbedSystem holds the canonical presentation

    xi^h x^p dF/dx = A(x, xi) F,   xi = x^sigma eps,
    A = sum_k A_k(x) xi^k,  A_k regular in x,  A_0(x=0) != 0,

obtained by renormalizing the raw operator matrix B = A xi^-h x^-p with the
matrix-level half-plane data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .coeff import QQ, AlgebraicNumber, Upoly
from .errors import (
    AllNilpotent,
    InsufficientOrder,
    NotInvertible,
    NotSingular,
    PreconditionError,
    SpectraOverlap,
)
from .series import INF, BiSeries, PuiseuxSeries

F = Fraction


# ---------------------------------------------------------------------------
# generic matrix helpers (entries: any ring with +, -, *)
# ---------------------------------------------------------------------------


def mat(rows):
    return [list(r) for r in rows]


def mat_shape(M):
    return len(M), len(M[0]) if M else 0


def mat_map(M, fn):
    return [[fn(e) for e in row] for row in M]


def mat_add(A, B):
    return [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def mat_sub(A, B):
    return [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def mat_neg(A):
    return [[-a for a in row] for row in A]


def mat_mul(A, B):
    n, m = mat_shape(A)
    m2, p = mat_shape(B)
    if m != m2:
        raise PreconditionError("matrix dimensions do not match")
    out = []
    for i in range(n):
        row = []
        for j in range(p):
            acc = A[i][0] * B[0][j]
            for k in range(1, m):
                acc = acc + A[i][k] * B[k][j]
            row.append(acc)
        out.append(row)
    return out


def mat_transpose(A):
    return [list(col) for col in zip(*A)]


def mat_identity(n, one, zero):
    return [[one if i == j else zero for j in range(n)] for i in range(n)]


def mat_scale(A, c):
    return [[a * c for a in row] for row in A]


def trace(A):
    acc = A[0][0]
    for i in range(1, len(A)):
        acc = acc + A[i][i]
    return acc


def _div_int(v, k):
    if hasattr(v, "div_int"):
        return v.div_int(k)
    return v / k


def leverrier(M, one, zero):
    """Characteristic polynomial coefficients [c_0 .. c_n] (c_n = 1) of M by
    the Leverrier-Faddeev recursion; only divisions by integers occur."""
    n = len(M)
    cs = [None] * (n + 1)
    cs[n] = one
    Nk = mat_identity(n, one, zero)
    Mk = M
    for k in range(1, n + 1):
        Mk = mat_mul(M, Nk)
        c = -_div_int(trace(Mk), k)
        cs[n - k] = c
        if k < n:
            Nk = [[Mk[i][j] + (c if i == j else zero) for j in range(n)] for i in range(n)]
    return cs


def det_leverrier(M, one, zero):
    n = len(M)
    c0 = leverrier(M, one, zero)[0]
    return c0 if n % 2 == 0 else -c0


# ---------------------------------------------------------------------------
# constant matrices (AlgebraicNumber entries)
# ---------------------------------------------------------------------------


def cmat_identity(n, tower=QQ):
    return mat_identity(n, tower.one(), tower.zero())


def cmat_charpoly(M, tower=None):
    tower = tower or M[0][0].tower
    cs = leverrier(M, tower.one(), tower.zero())
    return Upoly(tower, cs)


def cmat_lift(M, tower):
    return mat_map(M, lambda a: a.lift(tower))


def cmat_solve(A, b):
    """Solve A x = b exactly; returns None if A is singular."""
    n = len(A)
    M = [list(row) + [bi] for row, bi in zip(A, b)]
    for col in range(n):
        piv = None
        for r in range(col, n):
            if not M[r][col].is_zero():
                piv = r
                break
        if piv is None:
            return None
        M[col], M[piv] = M[piv], M[col]
        inv = M[col][col].inverse()
        M[col] = [v * inv for v in M[col]]
        for r in range(n):
            if r != col and not M[r][col].is_zero():
                f = M[r][col]
                M[r] = [v - f * w for v, w in zip(M[r], M[col])]
    return [M[i][n] for i in range(n)]


def cmat_inverse(M):
    n = len(M)
    tower = M[0][0].tower
    cols = []
    for j in range(n):
        e = [tower.one() if i == j else tower.zero() for i in range(n)]
        x = cmat_solve(M, e)
        if x is None:
            raise NotInvertible("constant matrix is singular")
        cols.append(x)
    return mat_transpose(cols)


def cmat_rank(M):
    if not M:
        return 0
    rows = [list(r) for r in M]
    n, m = mat_shape(rows)
    rank = 0
    col = 0
    for col in range(m):
        piv = None
        for r in range(rank, n):
            if not rows[r][col].is_zero():
                piv = r
                break
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = rows[rank][col].inverse()
        rows[rank] = [v * inv for v in rows[rank]]
        for r in range(n):
            if r != rank and not rows[r][col].is_zero():
                f = rows[r][col]
                rows[r] = [v - f * w for v, w in zip(rows[r], rows[rank])]
        rank += 1
    return rank


def cmat_right_kernel(M):
    """Basis of the right kernel of a constant matrix (list of columns)."""
    rows = [list(r) for r in M]
    n, m = mat_shape(rows)
    tower = rows[0][0].tower
    pivots = []
    rank = 0
    for col in range(m):
        piv = None
        for r in range(rank, n):
            if not rows[r][col].is_zero():
                piv = r
                break
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = rows[rank][col].inverse()
        rows[rank] = [v * inv for v in rows[rank]]
        for r in range(n):
            if r != rank and not rows[r][col].is_zero():
                f = rows[r][col]
                rows[r] = [v - f * w for v, w in zip(rows[r], rows[rank])]
        pivots.append(col)
        rank += 1
    free = [j for j in range(m) if j not in pivots]
    basis = []
    for j in free:
        v = [tower.zero()] * m
        v[j] = tower.one()
        for r, pc in enumerate(pivots):
            v[pc] = -rows[r][j]
        basis.append(v)
    return basis


def cmat_nilpotent(M):
    n = len(M)
    P = M
    for _ in range(n):
        if all(e.is_zero() for row in P for e in row):
            return True
        P = mat_mul(P, M)
    return all(e.is_zero() for row in P for e in row)


def sylvester_solve(P, Q, C):
    """Unique X with P X - X Q = C for constant matrices with disjoint
    spectra; raises SpectraOverlap otherwise."""
    p = len(P)
    q = len(Q)
    tower = P[0][0].tower
    for Mx in (Q, C):
        for row in Mx:
            for e in row:
                tower = tower if e.tower.is_prefix_of(tower) else e.tower
    P = cmat_lift(P, tower)
    Q = cmat_lift(Q, tower)
    C = cmat_lift(C, tower)
    # vec ordering: X[i][j] -> index i*q + j
    N = p * q
    A = [[tower.zero() for _ in range(N)] for _ in range(N)]
    b = [tower.zero()] * N
    for i in range(p):
        for j in range(q):
            r = i * q + j
            b[r] = C[i][j]
            for k in range(p):
                A[r][k * q + j] = A[r][k * q + j] + P[i][k]
            for l in range(q):
                A[r][i * q + l] = A[r][i * q + l] - Q[l][j]
    x = cmat_solve(A, b)
    if x is None:
        raise SpectraOverlap("Sylvester operator is singular: spectra overlap")
    return [[x[i * q + j] for j in range(q)] for i in range(p)]


# ---------------------------------------------------------------------------
# truncation context
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Trunc:
    """Work precision: xi-width, x-width, and the zero-test certainty
    thresholds used for rank decisions on truncated series."""

    xi_order: int = 12
    x_order: Fraction = Fraction(12)
    x_certainty: Fraction = Fraction(6)
    eps_certainty: int = 6

    @staticmethod
    def for_system(n, h, scale=1):
        xi = max(10, 2 * n * (abs(h) + 1)) * scale
        xo = max(16, 4 * n) * scale
        return Trunc(xi_order=xi, x_order=F(xo), x_certainty=F(xo, 2), eps_certainty=max(4, xi // 2))

    def doubled(self):
        return Trunc(self.xi_order * 2, self.x_order * 2, self.x_certainty * 2, self.eps_certainty * 2)


# ---------------------------------------------------------------------------
# Puiseux-matrix operations
# ---------------------------------------------------------------------------


def pmat_eval0(M):
    return mat_map(M, lambda e: e.eval0())


def pmat_is_zero(M, certainty=INF):
    return all(e.is_zero(certainty) for row in M for e in row)


def smith_column_reduce(A0, ctx):
    """Unimodular U in GL_n(C[[x]]) with the last n - r columns of U spanning
    ker A0 over C[[x]] and A0 U = [r independent columns | zero columns].

    Gaussian column elimination with minimum-valuation pivots; returns (U, r).
    """
    n, m = mat_shape(A0)
    if n != m:
        raise PreconditionError("smith_column_reduce expects a square matrix")
    M = [list(r) for r in A0]
    U = mat_identity(n, PuiseuxSeries.one(), PuiseuxSeries.zero())
    fixed = 0
    for _round in range(n):
        best = None
        uncertain_lb = INF
        for j in range(fixed, n):
            for i in range(n):
                e = M[i][j]
                if e.is_known_zero():
                    if not e.is_exact():
                        uncertain_lb = min(uncertain_lb, e.order)
                    continue
                v = e.val()
                key = (v, i, j)
                if best is None or key < best:
                    best = key
        if best is None:
            if uncertain_lb < ctx.x_certainty:
                raise InsufficientOrder("undecidable pivot entry")
            break
        if best[0] > uncertain_lb:
            raise InsufficientOrder("pivot could hide below truncation")
        v, i, j = best
        if j != fixed:
            for row in M:
                row[fixed], row[j] = row[j], row[fixed]
            for row in U:
                row[fixed], row[j] = row[j], row[fixed]
        pivinv = M[i][fixed].inverse(ctx.x_order)
        for l in range(fixed + 1, n):
            if M[i][l].is_known_zero():
                continue
            f_ = M[i][l] * pivinv
            for row_m, row_u in zip(M, U):
                row_m[l] = row_m[l] - f_ * row_m[fixed]
                row_u[l] = row_u[l] - f_ * row_u[fixed]
        fixed += 1
    # verify the trailing columns vanish
    for j in range(fixed, n):
        for i in range(n):
            if not M[i][j].is_zero(ctx.x_certainty):
                raise InsufficientOrder("kernel column did not clear")
    return U, fixed


def pmat_left_kernel(M, ctx):
    """Rows spanning the left kernel of a square Puiseux matrix, entries in
    C[[x]] (denominators cleared by construction)."""
    U, r = smith_column_reduce(mat_transpose(M), ctx)
    n = len(M)
    return [[U[i][j] for i in range(n)] for j in range(r, n)], r


def left_nullvector(M, ctx):
    """A nonzero left null vector over C[[x]], or NotSingular.

    Among kernel rows the one whose minimal-valuation entry in the trailing
    positions has the highest index is preferred (deterministic tie-break).
    """
    rows, r = pmat_left_kernel(M, ctx)
    if not rows:
        raise NotSingular("matrix has full rank at this order")
    return rows[0]


def pmat_inverse(M, ctx):
    K = mat_map(M, lambda e: BiSeries.from_px(e))
    Ki = kmat_inverse(K, ctx)
    return mat_map(Ki, lambda b: b.coeff(0))


# ---------------------------------------------------------------------------
# BiSeries-matrix operations
# ---------------------------------------------------------------------------


def kmat_identity(n):
    return mat_identity(n, BiSeries.one(), BiSeries.zero())


def kmat_derivative(M):
    return mat_map(M, lambda b: b.derivative())


def kmat_inverse(M, ctx):
    """Exact inverse over the bivariate field, Gaussian elimination with
    minimal (eps-valuation, x-valuation) pivots.

    Entries whose leading slice cannot be certified are never chosen as
    pivots; they only matter when no definite pivot exists in a column, in
    which case the order is insufficient."""
    n = len(M)
    A = [list(r) + [BiSeries.one() if i == j else BiSeries.zero() for j in range(n)] for i, r in enumerate(M)]
    for col in range(n):
        best = None
        saw_uncertain = False
        for r in range(col, n):
            e = A[r][col]
            try:
                nu = e.val_eps(ctx.x_certainty)
            except InsufficientOrder:
                saw_uncertain = True
                continue
            if nu == INF:
                continue
            f = e.t.get(nu)
            if f is None or not f.c:
                saw_uncertain = True
                continue
            key = (nu, f.val(), r)
            if best is None or key < best:
                best = key
        if best is None:
            if saw_uncertain:
                raise InsufficientOrder("no certified pivot in column %d" % col)
            raise NotInvertible("matrix is singular to working order")
        _, _, r = best
        A[col], A[r] = A[r], A[col]
        pinv = A[col][col].inverse(ctx.xi_order, ctx.x_order, ctx.x_certainty)
        A[col] = [v * pinv for v in A[col]]
        for r2 in range(n):
            if r2 != col and not A[r2][col].is_known_zero():
                f_ = A[r2][col]
                A[r2] = [v - f_ * w for v, w in zip(A[r2], A[col])]
    return [row[n:] for row in A]


# ---------------------------------------------------------------------------
# the system normal form
# ---------------------------------------------------------------------------


@dataclass
class PerturbedSystem:
    """Canonical presentation xi^h x^p dF/dx = A(x, xi) F with xi = x^sigma eps.

    `Ak` maps the xi power to a regular Puiseux coefficient matrix; `ko` is
    the guaranteed xi order.  `d` is the accumulated eps ramification (the
    current eps variable is the d-th root of the original), `s` the x lattice
    denominator actually in use, and `var` the name of the independent
    variable ("x", or "tau" after a stretch).
    """

    n: int
    h: int
    p: Fraction
    sigma: Fraction
    Ak: dict
    ko: object
    ctx: Trunc
    d: int = 1
    var: str = "x"

    # -- constructors -------------------------------------------------------

    @staticmethod
    def from_op(op, ctx, d=1, var="x"):
        """Renormalize a raw operator matrix (dF/dx = op F) into the
        canonical presentation."""
        n = len(op)
        nu = None
        eo = INF
        for row in op:
            for e in row:
                eo = min(eo, e.eo)
                for k, f in e.t.items():
                    if f.c and (nu is None or k < nu):
                        nu = k
        if nu is None:
            # no stored term anywhere: certified zero (or the order was too
            # small to decide, which is_zero reports)
            for row in op:
                for e in row:
                    e.is_zero(ctx.eps_certainty, ctx.x_certainty)
            return PerturbedSystem(n, 0, F(0), F(0), {}, INF, ctx, d, var)
        vals = {}
        for row in op:
            for e in row:
                for k, f in e.t.items():
                    if f.c:
                        v = f.val()
                        vals[k] = min(vals.get(k, v), v)
        sigma = F(0)
        for k, v in vals.items():
            if k > nu:
                b = F(v - vals[nu], k - nu)
                if b < sigma:
                    sigma = b
        p_mat = vals[nu] - sigma * nu
        h = -nu
        ko = INF if eo == INF else eo - nu
        stored = sorted({k for row in op for e in row for k in e.t})
        Ak = {}
        for k in stored:
            j = k - nu
            entries = []
            nonzero = False
            for row in op:
                r = []
                for e in row:
                    g = e.t.get(k, PuiseuxSeries.zero())
                    g = g.x_shift(-sigma * k - p_mat)
                    if g.c or not g.is_exact():
                        nonzero = True
                    r.append(g)
                entries.append(r)
            if nonzero or j == 0:
                Ak[j] = entries
        if 0 not in Ak:
            z = PuiseuxSeries.zero()
            Ak[0] = [[z] * n for _ in range(n)]
        return PerturbedSystem(n, h, -p_mat, sigma, Ak, ko, ctx, d, var)

    @staticmethod
    def from_parts(n, h, p, sigma, Ak, ko, ctx, d=1, var="x"):
        """As-is construction (no renormalization)."""
        return PerturbedSystem(n, int(h), F(p), F(sigma), Ak, ko, ctx, d, var)

    # -- accessors ----------------------------------------------------------

    def A(self, j):
        Mj = self.Ak.get(j)
        if Mj is not None:
            return Mj
        if self.ko != INF and j > self.ko:
            raise InsufficientOrder("xi coefficient beyond guaranteed order")
        z = PuiseuxSeries.zero()
        return [[z] * self.n for _ in range(self.n)]

    def A0(self):
        return self.A(0)

    def A00(self):
        return pmat_eval0(self.A0())

    def rank_A0(self, ctx=None):
        ctx = ctx or self.ctx
        _, r = smith_column_reduce(self.A0(), ctx)
        return r

    def is_zero_system(self):
        return not self.Ak or all(
            e.is_known_zero() for M in self.Ak.values() for row in M for e in row
        )

    def op(self):
        """Raw operator matrix dF/dvar = op F with BiSeries entries."""
        n = self.n
        eo = INF if self.ko == INF else self.ko - self.h
        out = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(n):
                t = {}
                for k, M in self.Ak.items():
                    e = M[i][j]
                    if e.c or not e.is_exact():
                        t[k - self.h] = e.x_shift(self.sigma * (k - self.h) - self.p)
                out[i][j] = BiSeries(t, eo)
        return out

    def s_lattice(self):
        den = self.sigma.denominator
        den = den * self.p.denominator // _igcd(den, self.p.denominator)
        for M in self.Ak.values():
            for row in M:
                for e in row:
                    r = e.ram()
                    den = den * r // _igcd(den, r)
        return den

    def lhs_str(self):
        parts = []
        if self.h:
            parts.append(_pow(u"xi", self.h))
        if self.p:
            parts.append(_pow(self.var, self.p))
        return "*".join(parts) if parts else "1"

    def describe(self):
        return {
            "n": self.n,
            "h": self.h,
            "p": str(self.p),
            "sigma": str(self.sigma),
            "eps_ramification": self.d,
            "x_lattice": self.s_lattice(),
            "var": self.var,
        }

    def entry_strings(self):
        """Entries of A(x, xi) as raw (var, eps) textual sums (xi expanded
        through x^sigma eps), eps exponents in original units; truncation is
        reported separately by describe()."""
        out = []
        for i in range(self.n):
            row = []
            for j in range(self.n):
                t = {}
                for k, M in self.Ak.items():
                    e = M[i][j]
                    if e.c or not e.is_exact():
                        t[k] = e.x_shift(self.sigma * k)
                b = BiSeries(t, self.ko)
                row.append(b.to_str(var=self.var, eps_den=self.d, show_order=False))
            out.append(row)
        return out


def _igcd(a, b):
    a, b = int(a), int(b)
    while b:
        a, b = b, a % b
    return a


def _pow(name, e):
    e = F(e)
    if e == 1:
        return name
    if e.denominator == 1:
        return "%s^%d" % (name, e.numerator)
    return "%s^(%s)" % (name, e)


# ---------------------------------------------------------------------------
# gauge transformations
# ---------------------------------------------------------------------------


@dataclass
class GaugeRecord:
    """Composable record of the change of basis F = T G."""

    T: list
    label: str = ""

    def compose(self, other):
        return GaugeRecord(mat_mul(self.T, other.T), label=(self.label + ";" + other.label).strip(";"))

    def eps_scale(self, dd):
        """Reinterpret the record in a dd-fold finer eps lattice."""
        return GaugeRecord(mat_map(self.T, lambda b: b.eps_scale(dd)), label=self.label)

    def entry_strings(self, var="x", eps_den=1):
        return [[b.to_str(var=var, eps_den=eps_den) for b in row] for row in self.T]


def gauge_identity(n):
    return GaugeRecord(kmat_identity(n), label="id")


def gauge_apply(sys, T, label="", Tinv=None):
    """Apply F = T G: the new operator is T^-1 op T - T^-1 T', renormalized.

    Returns (new system, GaugeRecord)."""
    op = sys.op()
    if Tinv is None:
        Tinv = kmat_inverse(T, sys.ctx)
    dT = kmat_derivative(T)
    new_op = mat_sub(mat_mul(Tinv, mat_mul(op, T)), mat_mul(Tinv, dT))
    out = PerturbedSystem.from_op(new_op, sys.ctx, d=sys.d, var=sys.var)
    return out, GaugeRecord(T, label=label)


def gauge_apply_px(sys, Tpx, label=""):
    return gauge_apply(sys, mat_map(Tpx, BiSeries.from_px), label=label)


# ---------------------------------------------------------------------------
# characteristic polynomial of a system
# ---------------------------------------------------------------------------


def char_poly(sys):
    """Coefficients alpha_0..alpha_n of det(lambda I - A/(x^p xi^h)) as raw
    bivariate elements (alpha_n = 1)."""
    return leverrier(sys.op(), BiSeries.one(), BiSeries.zero())


# ---------------------------------------------------------------------------
# Newton polygon of the leading matrix: eigenvalue exponents
# ---------------------------------------------------------------------------


def _lower_hull(points):
    """Monotone-chain lower hull of (i, v) points sorted by i."""
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


def newton_puiseux_exponents(A0, ctx, with_coeffs=False):
    """Leading exponents of the nonzero eigenvalues of A0(x).

    From the Newton polygon of det(lambda I - A0(x)): returns
    (exponents ascending, s, data) where s is the lcm of the exponent
    denominators and data optionally carries (exponent, [leading coeffs])
    pairs.  Raises AllNilpotent when every eigenvalue vanishes."""
    n = len(A0)
    cs = leverrier(A0, PuiseuxSeries.one(), PuiseuxSeries.zero())
    pts = []
    for i, c in enumerate(cs):
        if c.is_known_zero():
            if not c.is_zero(ctx.x_certainty):
                raise InsufficientOrder("characteristic coefficient undecided")
            continue
        pts.append((i, c.val()))
    if pts == [(n, 0)] or all(i == n for i, _ in pts):
        raise AllNilpotent("leading matrix is nilpotent")
    hull = _lower_hull(pts)
    expos = []
    data = []
    for (i1, v1), (i2, v2) in zip(hull, hull[1:]):
        slope = F(v1 - v2, i2 - i1)  # eigenvalue exponent
        expos.append(slope)
        if with_coeffs:
            from .coeff import distinct_root_partition

            poly = {}
            for (i, v) in pts:
                if i1 <= i <= i2 and v == v1 - slope * (i - i1):
                    poly[i - i1] = cs[i].c[cs[i].val()]
            degmax = max(poly)
            tower = QQ
            for c in poly.values():
                if c.tower.depth() > tower.depth():
                    tower = c.tower
            coeffs = [poly[k].lift(tower) if k in poly else tower.zero() for k in range(degmax + 1)]
            up = Upoly(tower, coeffs).monic()
            roots = [r for (r, m) in distinct_root_partition(up) if not r.is_zero()]
            data.append((slope, roots))
    expos = sorted(set(expos))
    s = 1
    for e in expos:
        s = s * e.denominator // _igcd(s, e.denominator)
    return expos, s, data
