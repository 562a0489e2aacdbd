"""Reduction engines: splitting, eigenvalue shifting, turning points, rank
reduction, exponential order, and the ramification lemma.

All engines act on the canonical PerturbedSystem presentation and return the
transformed system together with composable gauge records.  The rank engine
is also reused for the unperturbed leading matrix inside the turning-point
resolution by encoding the matrix pencil with the x lattice playing the role
of the perturbation variable (the pencil has no derivation term, so the
reuse is exact).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .coeff import QQ, Upoly, distinct_root_partition
from .errors import (
    AllNilpotent,
    InsufficientOrder,
    PreconditionError,
    SpectraOverlap,
    Stalled,
)
from .linalg import (
    GaugeRecord,
    PerturbedSystem,
    Trunc,
    char_poly,
    cmat_charpoly,
    cmat_identity,
    cmat_inverse,
    cmat_lift,
    cmat_nilpotent,
    cmat_right_kernel,
    det_leverrier,
    gauge_apply,
    gauge_apply_px,
    gauge_identity,
    kmat_identity,
    leverrier,
    mat_identity,
    mat_map,
    mat_mul,
    mat_transpose,
    newton_puiseux_exponents,
    pmat_left_kernel,
    smith_column_reduce,
    sylvester_solve,
)
from .series import INF, BiSeries, PuiseuxSeries

F = Fraction


# ---------------------------------------------------------------------------
# result records
# ---------------------------------------------------------------------------


@dataclass
class SplitResult:
    record: GaugeRecord
    subsystems: list
    blocks: list


@dataclass
class RankReductionResult:
    record: GaugeRecord
    sys: PerturbedSystem
    h_history: list
    h_true_zero: bool = False
    ramified_by: int = 1


@dataclass
class ExpOrderResult:
    omega: Fraction
    E: dict          # X-degree (i_k - i_0) -> PuiseuxSeries coefficient
    support: list
    guard_ok: bool

    def poly_str(self, var="x"):
        parts = []
        for deg in sorted(self.E, reverse=True):
            c = self.E[deg]
            cs = c.to_str(var=var)
            if " + " in cs or " - " in cs:
                cs = "(%s)" % cs
            term = cs if deg == 0 else ("X" if deg == 1 else "X^%d" % deg)
            if deg > 0 and cs not in ("1", "-1"):
                term = "%s*%s" % (cs, term)
            elif deg > 0 and cs == "-1":
                term = "-" + term
            parts.append(term)
        out = parts[0]
        for p in parts[1:]:
            out += " - " + p[1:] if p.startswith("-") else " + " + p
        return out


@dataclass
class TurningResult:
    record: GaugeRecord
    sys: PerturbedSystem
    s: int


# ---------------------------------------------------------------------------
# theta and the G-matrix determinant
# ---------------------------------------------------------------------------


def _lagrange_coeffs(nodes):
    """Coefficient rows: basis[j][k] = coefficient of X^k in prod_{m != j}
    (X - x_m)/(x_j - x_m)."""
    n = len(nodes)
    basis = []
    for j in range(n):
        poly = [F(1)]
        denom = F(1)
        for m in range(n):
            if m == j:
                continue
            poly = [F(0)] + poly
            poly = [poly[k] - nodes[m] * (poly[k + 1] if k + 1 < len(poly) else F(0)) for k in range(len(poly))]
            denom *= nodes[j] - nodes[m]
        basis.append([c / denom for c in poly])
    return basis


def _interpolate_lambda(values, nodes):
    """Polynomial coefficients (ascending) from values at rational nodes;
    values live in any module over the rationals (PuiseuxSeries here)."""
    basis = _lagrange_coeffs(nodes)
    deg = len(nodes) - 1
    out = []
    for k in range(deg + 1):
        acc = None
        for j, v in enumerate(values):
            w = basis[j][k] if k < len(basis[j]) else F(0)
            term = v.scale(w)
            acc = term if acc is None else acc + term
        out.append(acc)
    while out and out[-1].is_known_zero() and out[-1].is_exact():
        out.pop()
    return out


def theta(sys, r=None):
    """theta(lambda) = xi^r det(lambda I + A_0/xi + A_1)|_{xi=0}, coefficients
    as Puiseux series in x, degree ascending."""
    n = sys.n
    ctx = sys.ctx
    if r is None:
        r = sys.rank_A0()
    A0, A1 = sys.A0(), sys.A(1)
    nodes = [F(j) for j in range(n + 1)]
    vals = []
    for lam in nodes:
        M = []
        for i in range(n):
            row = []
            for j in range(n):
                t = {}
                if A0[i][j].c or not A0[i][j].is_exact():
                    t[-1] = A0[i][j]
                diag = A1[i][j]
                if i == j and lam:
                    diag = diag + PuiseuxSeries.monomial(QQ.from_fraction(lam), 0)
                t[0] = diag
                row.append(BiSeries(t, INF if sys.ko == INF else sys.ko - 1))
            M.append(row)
        d = det_leverrier(M, BiSeries.one(), BiSeries.zero())
        vals.append(d.eps_shift(r).coeff(0))
    return _interpolate_lambda(vals, nodes)


def det_G(sys, r, ctx=None):
    """det of the reduction pencil built from a leading matrix in column
    form: [[A0 | A1 columns r..n-1]] with lambda added on the trailing
    diagonal.  Equals theta identically; computed independently."""
    n = sys.n
    ctx = ctx or sys.ctx
    A0, A1 = sys.A0(), sys.A(1)
    nodes = [F(j) for j in range(n - r + 1)]
    vals = []
    for lam in nodes:
        G = []
        for i in range(n):
            row = []
            for j in range(n):
                e = A0[i][j] if j < r else A1[i][j]
                if i == j and j >= r and lam:
                    e = e + PuiseuxSeries.monomial(QQ.from_fraction(lam), 0)
                row.append(e)
            G.append(row)
        vals.append(det_leverrier(G, PuiseuxSeries.one(), PuiseuxSeries.zero()))
    return _interpolate_lambda(vals, nodes)


def _poly_known_zero(coeffs, ctx):
    for c in coeffs:
        if not c.is_zero(ctx.x_certainty):
            return False
    return True


# ---------------------------------------------------------------------------
# eigenvalue grouping and splitting
# ---------------------------------------------------------------------------


def _root_sort_key(root):
    if root.is_rational():
        return (0, root.as_fraction(), "")
    return (1, F(0), root.to_str())


def eigenvalue_groups(A00):
    """Distinct eigenvalues of the leading constant matrix with
    multiplicities, deterministically ordered (rationals ascending first)."""
    chi = cmat_charpoly(A00)
    parts = distinct_root_partition(chi)
    return sorted(parts, key=lambda rm: _root_sort_key(rm[0]))


def _generalized_eigenbasis(A00, groups):
    """Constant grouping matrix whose column blocks span the generalized
    eigenspaces, in group order."""
    n = len(A00)
    tower = groups[0][0].tower
    for r, _ in groups:
        if r.tower.depth() > tower.depth():
            tower = r.tower
    M = cmat_lift(A00, tower)
    cols = []
    sizes = []
    for root, mult in groups:
        root = root.lift(tower)
        shifted = [[M[i][j] - (root if i == j else tower.zero()) for j in range(n)] for i in range(n)]
        P = mat_identity(n, tower.one(), tower.zero())
        for _ in range(mult):
            P = mat_mul(P, shifted)
        basis = cmat_right_kernel(P)
        if len(basis) != mult:
            raise PreconditionError("generalized eigenspace has wrong dimension")
        cols.extend(basis)
        sizes.append(mult)
    Tc = mat_transpose(cols)
    cmat_inverse(Tc)  # raises if not invertible
    return Tc, sizes, tower


def _px_shift_slices(M):
    """All x exponents appearing in a Puiseux matrix."""
    out = set()
    for row in M:
        for e in row:
            out.update(e.c.keys())
    return out


def _px_coeff_mat(M, exp, tower):
    return [[e.c.get(F(exp), tower.zero()).lift(tower) if e.c.get(F(exp)) is not None else tower.zero() for e in row] for row in M]


def _blocks_of(sizes):
    out = []
    start = 0
    for s in sizes:
        out.append(list(range(start, start + s)))
        start += s
    return out


def split(sys):
    """Block-diagonalize along the distinct-eigenvalue groups of the leading
    constant matrix (constant grouping, then the x recursion on the leading
    coefficient, then the xi recursion via Sylvester solves)."""
    n, ctx = sys.n, sys.ctx
    if sys.h < 1:
        raise PreconditionError("splitting expects a positive eps rank")
    groups = eigenvalue_groups(sys.A00())
    if len(groups) < 2:
        raise SpectraOverlap("leading constant matrix has a single eigenvalue group")
    Tc, sizes, tower = _generalized_eigenbasis(sys.A00(), groups)
    blocks = _blocks_of(sizes)
    Tc_px = mat_map(Tc, lambda a: PuiseuxSeries({0: a}) if not a.is_zero() else PuiseuxSeries.zero())

    sys_c, rec_c = gauge_apply_px(sys, Tc_px, label="grouping")

    L = 1
    for e in _px_shift_slices(sys_c.A0()):
        L = L * e.denominator // _gcd(L, e.denominator)
    if sys_c.p < 1:
        sigma_t = sys_c.sigma + F(sys_c.p - 1, sys_c.h)
        p_hat = F(1)
    else:
        sigma_t = sys_c.sigma
        p_hat = sys_c.p
    for q in (sigma_t - sys_c.sigma, p_hat):
        L = L * q.denominator // _gcd(L, q.denominator)
    X = int(ctx.x_order * L)
    K = ctx.xi_order if sys_c.ko == INF else min(ctx.xi_order, int(sys_c.ko))

    A00g = pmat_eval0_lift(sys_c.A0(), tower)
    A00_blocks = [_submat(A00g, blk, blk) for blk in blocks]

    # step 1: clear the x dependence of the off-diagonal blocks of A_0
    T0 = _step1_block_diagonalize(sys_c.A0(), blocks, A00_blocks, tower, L, X)
    sys_0, rec_0 = gauge_apply_px(sys_c, T0, label="leading")

    # step 2: the xi recursion
    Txi = _step2_xi_recursion(sys_0, blocks, A00_blocks, tower, L, X, K, sigma_t, p_hat)
    sys_2, rec_2 = gauge_apply(sys_0, Txi, label="tail")

    # verify block form and the preserved leading constant matrix
    _assert_block_diagonal(sys_2, blocks, ctx)
    A00_grouped = pmat_eval0_lift(sys_c.A0(), tower)
    A00_out = pmat_eval0_lift(sys_2.A0(), tower)
    for i in range(n):
        for j in range(n):
            if not (A00_out[i][j] - A00_grouped[i][j]).is_zero():
                raise PreconditionError("splitting changed the leading constant matrix")
    subsystems = []
    op = sys_2.op()
    for blk in blocks:
        sub = [[op[i][j] for j in blk] for i in blk]
        subsystems.append(PerturbedSystem.from_op(sub, ctx, d=sys.d, var=sys.var))
    record = rec_c.compose(rec_0).compose(rec_2)
    return SplitResult(record, subsystems, blocks)


def pmat_eval0_lift(M, tower):
    return [[e.eval0().lift(tower) if e.eval0().tower.is_prefix_of(tower) else e.eval0() for e in row] for row in M]


def _submat(M, rows, cols):
    return [[M[i][j] for j in cols] for i in rows]


def _gcd(a, b):
    a, b = int(a), int(b)
    while b:
        a, b = b, a % b
    return a


def _step1_block_diagonalize(A0, blocks, A00_blocks, tower, L, X):
    """T0 = I + sum_{mu>=1} T0_mu x^(mu/L), off-diagonal blocks, from the
    order-by-order Sylvester recursion; returns a Puiseux matrix."""
    n = len(A0)
    zero = tower.zero()
    rel0 = F(X, L)
    for row in A0:
        for e in row:
            if e.order != INF:
                rel0 = min(rel0, e.order)
    Amu = {}
    for e in _px_shift_slices(A0):
        mu = int(e * L)
        Amu[mu] = _px_coeff_mat(A0, e, tower)
    Tmu = {0: mat_identity(n, tower.one(), zero)}
    Atil = {0: Amu.get(0, mat_identity(n, zero, zero))}
    for mu in range(1, X + 1):
        A_mu = Amu.get(mu)
        T_mu = [[zero for _ in range(n)] for _ in range(n)]
        At_mu = [[zero for _ in range(n)] for _ in range(n)]
        for bi, blk_s in enumerate(blocks):
            # diagonal blocks of the reduced leading coefficient
            acc = _submat(A_mu, blk_s, blk_s) if A_mu else _zmat(len(blk_s), len(blk_s), zero)
            for j in range(1, mu):
                Aj = Amu.get(mu - j)
                if Aj is None:
                    continue
                for bt, blk_t in enumerate(blocks):
                    if bt != bi:
                        acc = _madd(acc, mat_mul(_submat(Aj, blk_s, blk_t), _submat(Tmu[j], blk_t, blk_s)))
            _set_submat(At_mu, blk_s, blk_s, acc)
        for bi, blk_s in enumerate(blocks):
            for bj, blk_r in enumerate(blocks):
                if bi == bj:
                    continue
                rhs = _mneg(_submat(A_mu, blk_s, blk_r)) if A_mu else _zmat(len(blk_s), len(blk_r), zero)
                for j in range(1, mu):
                    Aj = Amu.get(mu - j)
                    if Aj is not None:
                        for bt, blk_t in enumerate(blocks):
                            if bt != bj:
                                rhs = _msub(rhs, mat_mul(_submat(Aj, blk_s, blk_t), _submat(Tmu[j], blk_t, blk_r)))
                    rhs = _madd(rhs, mat_mul(_submat(Tmu[j], blk_s, blk_r), _submat(Atil[mu - j], blk_r, blk_r)))
                Tblk = sylvester_solve(A00_blocks[bi], A00_blocks[bj], rhs)
                _set_submat(T_mu, blk_s, blk_r, Tblk)
        Tmu[mu] = T_mu
        Atil[mu] = At_mu
    out = [[PuiseuxSeries.zero(order=rel0) for _ in range(n)] for _ in range(n)]
    for mu, M in Tmu.items():
        for i in range(n):
            for j in range(n):
                if not M[i][j].is_zero() and F(mu, L) <= rel0:
                    out[i][j] = out[i][j] + PuiseuxSeries({F(mu, L): M[i][j]}, order=rel0)
    return out


def _zmat(r, c, zero):
    return [[zero for _ in range(c)] for _ in range(r)]


def _madd(A, B):
    return [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def _msub(A, B):
    return [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def _mneg(A):
    return [[-a for a in row] for row in A]


def _set_submat(M, rows, cols, S):
    for a, i in enumerate(rows):
        for b, j in enumerate(cols):
            M[i][j] = S[a][b]


def _step2_xi_recursion(sys0, blocks, A00_blocks, tower, L, X, K, sigma_t, p_hat):
    """T = I + sum_{k>=1} T_k(x) xi_t^k with off-diagonal T_k solved from
    Sylvester equations order by order; returned as a raw BiSeries matrix."""
    n = sys0.n
    zero = tower.zero()
    h = sys0.h
    shift = sys0.sigma - sigma_t

    def b_mat(k):
        M = sys0.A(k) if (sys0.ko == INF or k <= sys0.ko) else None
        if M is None:
            return None
        return mat_map(M, lambda e: e.x_shift(shift * k))

    def rel_b(k):
        """Shifted x-order to which the slice B_k is reliable."""
        if sys0.ko != INF and k > sys0.ko:
            return F(0)
        M = sys0.Ak.get(k)
        if M is None:
            return INF
        out = INF
        for row in M:
            for e in row:
                if e.order != INF:
                    out = min(out, e.order + shift * k)
        return out

    # x slices per k, integer grid over 1/L
    def slices(M):
        out = {}
        if M is None:
            return out
        for e in _px_shift_slices(M):
            out[int(e * L)] = _px_coeff_mat(M, e, tower)
        return out

    Bs = {k: slices(b_mat(k)) for k in range(0, K + 1)}
    rel = {0: min(F(X, L), rel_b(0))}
    for k in range(1, K + 1):
        rel[k] = min(rel[k - 1], rel_b(k))
    T = {0: {0: mat_identity(n, tower.one(), zero)}}
    Bt = {0: dict(Bs[0])}
    for k in range(1, K + 1):
        # base RHS: MID + derivation + B_k, as x-slice dicts
        rhs = {mu: M for mu, M in (Bs.get(k) or {}).items()}
        rhs = {mu: [row[:] for row in M] for mu, M in rhs.items()}
        for i in range(1, k):
            for mu1, M1 in (Bs.get(k - i) or {}).items():
                for mu2, M2 in T[i].items():
                    _acc(rhs, mu1 + mu2, mat_mul(M1, M2), zero, n)
            for mu1, M1 in T[i].items():
                for mu2, M2 in Bt[k - i].items():
                    _acc(rhs, mu1 + mu2, _mneg(mat_mul(M1, M2)), zero, n)
        if k - h >= 1:
            # subtract x^(p_hat - 1) (x d/dx + sigma_t (k - h)) T_{k-h}
            ph_mu = int((p_hat - 1) * L)
            for mu, M in T[k - h].items():
                w = F(mu, L) + sigma_t * (k - h)
                if w:
                    _acc(rhs, mu + ph_mu, mat_map(M, lambda a, _w=w: a * (-_w)), zero, n)
        # equation per x order: A00 X - X A00 = -(rhs_mu + coupling_mu)
        # (diagonal blocks have no coupling and define the reduced matrix)
        Btk = {}
        Tk = {}
        B0s = Bs[0]
        for mu in range(0, X + 1):
            R = rhs.get(mu)
            corr = None
            for mu2 in range(0, mu):
                M2 = Tk.get(mu2)
                if M2 is None:
                    continue
                B0d = B0s.get(mu - mu2)
                if B0d is None:
                    continue
                delta = _msub(mat_mul(B0d, M2), mat_mul(M2, B0d))
                corr = delta if corr is None else _madd(corr, delta)
            if R is None and corr is None:
                continue
            total = R if R is not None else _zmat(n, n, zero)
            if corr is not None:
                total = _madd(total, corr)
            Tk_mu = [[zero for _ in range(n)] for _ in range(n)]
            Bt_mu = [[zero for _ in range(n)] for _ in range(n)]
            for bi, blk_s in enumerate(blocks):
                for bj, blk_r in enumerate(blocks):
                    S = _submat(total, blk_s, blk_r)
                    if all(e.is_zero() for row in S for e in row):
                        continue
                    if bi == bj:
                        _set_submat(Bt_mu, blk_s, blk_r, S)
                    else:
                        sol = sylvester_solve(A00_blocks[bi], A00_blocks[bj], _mneg(S))
                        _set_submat(Tk_mu, blk_s, blk_r, sol)
            if any(not e.is_zero() for row in Tk_mu for e in row):
                Tk[mu] = Tk_mu
            if any(not e.is_zero() for row in Bt_mu for e in row):
                Btk[mu] = Bt_mu
        T[k] = Tk
        Bt[k] = Btk
    # assemble raw BiSeries matrix: T_k(x) (x^{sigma_t} eps)^k; each T_k is
    # reliable only to the least shifted order of the inputs it consumed
    out = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            terms = {}
            for k, tk in T.items():
                if k == 0:
                    continue
                bound = rel[k] + sigma_t * k if rel[k] != INF else INF
                c = {}
                for mu, M in tk.items():
                    if not M[i][j].is_zero() and (bound == INF or F(mu, L) + sigma_t * k <= bound):
                        c[F(mu, L) + sigma_t * k] = M[i][j]
                if c or (bound != INF):
                    terms[k] = PuiseuxSeries(c, order=bound)
            if i == j:
                terms[0] = PuiseuxSeries.one()
            out[i][j] = BiSeries(terms, K)
    return out


def _acc(store, mu, M, zero, n):
    cur = store.get(mu)
    if cur is None:
        store[mu] = M
    else:
        store[mu] = _madd(cur, M)


def _assert_block_diagonal(sys2, blocks, ctx):
    index_of = {}
    for bi, blk in enumerate(blocks):
        for i in blk:
            index_of[i] = bi
    for j, M in sys2.Ak.items():
        for i in range(sys2.n):
            for l in range(sys2.n):
                if index_of[i] != index_of[l]:
                    if not M[i][l].is_known_zero():
                        raise InsufficientOrder("split left a nonzero off-diagonal block")


# ---------------------------------------------------------------------------
# eigenvalue shifting
# ---------------------------------------------------------------------------


def eigen_shift(sys, gamma):
    """F = exp(int gamma xi^-h x^-p) G: subtract gamma from A; returns
    (system, contribution) with the contribution as a list of exponential
    monomials (coeff, x_exp, eps_exp_in_current_units, is_log)."""
    n = sys.n
    op = sys.op()
    mono = BiSeries.monomial(QQ.one(), -sys.sigma * sys.h - sys.p, -sys.h)
    shifted = [[op[i][j] - (mono.scale(gamma) if i == j else BiSeries.zero()) for j in range(n)] for i in range(n)]
    q = -sys.sigma * sys.h - sys.p
    terms = []
    if not gamma.is_zero():
        if q == -1:
            terms.append((gamma, F(0), F(-sys.h), True))
        else:
            terms.append((gamma / (q + 1), q + 1, F(-sys.h), False))
    try:
        out = PerturbedSystem.from_op(shifted, sys.ctx, d=sys.d, var=sys.var)
    except InsufficientOrder:
        raise
    return out, terms, GaugeRecord(kmat_identity(n), label="shift")


# ---------------------------------------------------------------------------
# the rank-reduction engine
# ---------------------------------------------------------------------------


def _rank_px(M, ctx):
    rows = len(M)
    cols = len(M[0]) if rows else 0
    m = max(rows, cols)
    z = PuiseuxSeries.zero()
    padded = [list(r) + [z] * (m - cols) for r in M] + [[z] * m for _ in range(m - rows)]
    _, r = smith_column_reduce(padded, ctx)
    return r


def _is_identity_px(U):
    n = len(U)
    for i in range(n):
        for j in range(n):
            e = U[i][j]
            if i == j:
                if e.c != {F(0): QQ.one()} and not (len(e.c) == 1 and F(0) in e.c and e.c[F(0)] == QQ.one()):
                    return False
            elif e.c:
                return False
    return True


def _constant_left_kernel(M, ctx):
    """Constant rows w with w M = 0 for every stored x order."""
    n = len(M)
    tower = QQ
    for row in M:
        for e in row:
            for c in e.c.values():
                if c.tower.depth() > tower.depth():
                    tower = c.tower
    constraints = []
    for j in range(n):
        exps = set()
        for i in range(n):
            exps.update(M[i][j].c.keys())
        for e in sorted(exps):
            constraints.append([M[i][j].c.get(e, tower.zero()).lift(tower) for i in range(n)])
    if not constraints:
        return [[tower.one() if i == k else tower.zero() for i in range(n)] for k in range(n)]
    return cmat_right_kernel(constraints)


def _in_gaussform(A0, r, ctx):
    n = len(A0)
    for j in range(r, n):
        for i in range(n):
            if not A0[i][j].is_zero(ctx.x_certainty):
                return False
    return True


def _gaussform_establish(sys, rec):
    """Column-reduce the leading matrix, composing records, until its last
    n - r columns vanish; returns (sys, rec, r)."""
    ctx = sys.ctx
    for _ in range(4):
        U, r = smith_column_reduce(sys.A0(), ctx)
        if _in_gaussform(sys.A0(), r, ctx):
            return sys, rec, r
        sys, rc = gauge_apply_px(sys, U, label="columns")
        rec = rec.compose(rc)
    raise InsufficientOrder("column form did not stabilize")


def _measure(h, r, n):
    return max(F(0), h + F(r, n))


def _reduction_sweep(sys, r, constants_only):
    """One elimination-and-shear pass.  Returns (sys2, records, rho) or None
    when no admissible null vector exists (constant search exhausted)."""
    n, ctx = sys.n, sys.ctx
    recs = []
    cur = sys
    rho = 0
    while True:
        m = n - rho
        A0, A1 = cur.A0(), cur.A(1)
        top = [[A0[i][j] for j in range(r)] + [A1[i][j] for j in range(r, m)] for i in range(r)]
        if r == 0 or _rank_px(top, ctx) < r:
            break
        if rho >= n - r:
            break
        G0 = [[(A0[i][j] if j < r else A1[i][j]) for j in range(m)] for i in range(m)]
        w = _pick_null_vector(G0, r, m, ctx, constants_only)
        if w is None:
            return None
        # permutation: among minimal-valuation tail entries pick the highest
        # index, move it to position m-1
        tail = [(w[j].val(), j) for j in range(r, m) if w[j].c]
        vmin = min(v for v, _ in tail)
        idx = max(j for v, j in tail if v == vmin)
        P = mat_identity(n, PuiseuxSeries.one(), PuiseuxSeries.zero())
        if idx != m - 1:
            P[idx][idx] = PuiseuxSeries.zero()
            P[m - 1][m - 1] = PuiseuxSeries.zero()
            P[idx][m - 1] = PuiseuxSeries.one()
            P[m - 1][idx] = PuiseuxSeries.one()
            w = list(w)
            w[idx], w[m - 1] = w[m - 1], w[idx]
        piv_inv = w[m - 1].inverse(ctx.x_order)
        IQ = mat_identity(n, PuiseuxSeries.one(), PuiseuxSeries.zero())
        for j in range(r, m - 1):
            if w[j].c:
                IQ[m - 1][j] = -(w[j] * piv_inv)
        T = mat_mul(P, IQ)
        cur, rc = gauge_apply_px(cur, T, label="eliminate")
        recs.append(rc)
        rho += 1
    # shearing: diag(xi I_r, I_(n-r-rho), xi I_rho)
    sig = cur.sigma
    diag = []
    for i in range(n):
        if i < r or i >= n - rho:
            diag.append(BiSeries.monomial(QQ.one(), sig, 1))
        else:
            diag.append(BiSeries.one())
    S = [[diag[i] if i == j else BiSeries.zero() for j in range(n)] for i in range(n)]
    cur, rc = gauge_apply(cur, S, label="shear")
    recs.append(rc)
    return cur, recs, rho


def _pick_null_vector(G0, r, m, ctx, constants_only):
    if constants_only:
        rows = _constant_left_kernel(G0, ctx)
        cands = []
        for w in rows:
            if any(not w[j].is_zero() for j in range(r, m)):
                cands.append([PuiseuxSeries({0: c}) if not c.is_zero() else PuiseuxSeries.zero() for c in w])
        return cands[0] if cands else None
    rows, _ = pmat_left_kernel(G0, ctx)
    for w in rows:
        ok = False
        for j in range(r, m):
            if w[j].c:
                ok = True
        if ok:
            return w
    return None


def _A0_nilpotent(sys, ctx):
    cs = leverrier(sys.A0(), PuiseuxSeries.one(), PuiseuxSeries.zero())
    for i in range(sys.n):
        if not cs[i].is_zero(ctx.x_certainty):
            return False
    return True


def exp_order_system(sys):
    """Exponential order and edge polynomial from the characteristic
    polynomial of A/(x^p xi^h); raw leading coefficients already carry the
    x^(sigma val) factors."""
    n, ctx = sys.n, sys.ctx
    alphas = char_poly(sys)
    nus = {}
    for i in range(n):
        a = alphas[i]
        if a.is_zero(ctx.eps_certainty, ctx.x_certainty):
            continue
        nus[i] = a.val_eps(ctx.x_certainty)
    omega = F(0)
    for i, v in nus.items():
        omega = max(omega, F(-v, n - i))
    support = [i for i, v in nus.items() if F(-v, n - i) == omega]
    support.append(n)
    support = sorted(support)
    i0 = support[0]
    E = {}
    for i in support:
        if i == n:
            E[n - i0] = PuiseuxSeries.one()
        else:
            E[i - i0] = alphas[i].t[nus[i]]
    r = sys.rank_A0()
    guard_ok = sys.h > n - r
    return ExpOrderResult(omega, E, support, guard_ok)


def ramify_system(sys, dd):
    """eps = eta^dd at the system level; the operator is renormalized in the
    finer lattice and the accumulated ramification recorded."""
    dd = int(dd)
    if dd <= 1:
        return sys
    op = sys.op()
    op2 = mat_map(op, lambda b: b.eps_scale(dd))
    return PerturbedSystem.from_op(op2, sys.ctx, d=sys.d * dd, var=sys.var)


def eps_rank_reduce(sys, _depth=0, stop_nonnilpotent=False):
    """Minimal-rank reduction of Algorithm-2 type.

    Sweeps gauss1 + elimination + shearing while the reduction criterion
    vanishes; for rank 1 in eps, constant eliminations first, then the
    candidate ramification from the exponential order, then the blanket
    eps = eta^(n+1) ramification which decides whether the true rank is 0.

    With stop_nonnilpotent the loop also exits once the leading constant
    matrix has a nonzero eigenvalue (the pencil-reduction use: the caller
    only needs that postcondition, and stopping early keeps the composed
    transformation as flat as possible)."""
    n, ctx = sys.n, sys.ctx
    rec = gauge_identity(n)
    hist = []
    cur = sys
    ramified_by = 1
    guard = (max(cur.h, 1) + 2) * (n + 2) + 8
    for _ in range(guard):
        if cur.h <= 0:
            break
        cur, rec, r = _gaussform_establish(cur, rec)
        hist.append((cur.h, r))
        if stop_nonnilpotent and not cmat_nilpotent(cur.A00()):
            break
        th = theta(cur, r)
        if not _poly_known_zero(th, ctx):
            break
        meas = _measure(cur.h, r, n)
        if cur.h > 1:
            out = _reduction_sweep(cur, r, constants_only=False)
            if out is None:
                raise PreconditionError("no admissible elimination vector at rank > 1")
            cur2, recs, rho = out
            if cur2.h > 0:
                _, new_r = smith_column_reduce(cur2.A0(), ctx)
                if _measure(cur2.h, new_r, n) >= meas:
                    raise PreconditionError("reduction sweep made no progress")
            for rc in recs:
                rec = rec.compose(rc)
            cur = cur2
            continue
        # h == 1
        if not cmat_nilpotent(cur.A00()) or not _A0_nilpotent(cur, ctx):
            break
        out = _reduction_sweep(cur, r, constants_only=True)
        if out is not None:
            cur2, recs, rho = out
            progressed = cur2.h <= 0
            if not progressed:
                _, new_r = smith_column_reduce(cur2.A0(), ctx)
                progressed = _measure(cur2.h, new_r, n) < meas
            if progressed:
                for rc in recs:
                    rec = rec.compose(rc)
                cur = cur2
                continue
        # escalation: candidate ramification from the exponential order
        if _depth < 3:
            eo = exp_order_system(cur)
            dd = eo.omega.denominator if eo.omega > 0 else 1
            if dd > 1:
                cand = ramify_system(cur, dd)
                rr = eps_rank_reduce(cand, _depth + 1)
                if not _A0_nilpotent(rr.sys, ctx) or not cmat_nilpotent(rr.sys.A00()) or rr.sys.h <= 0:
                    return RankReductionResult(
                        rec.eps_scale(dd).compose(rr.record), rr.sys, hist + rr.h_history,
                        rr.h_true_zero, ramified_by * dd * rr.ramified_by,
                    )
            blanket = n + 1
            cand = ramify_system(cur, blanket)
            rr = eps_rank_reduce(cand, _depth + 1)
            return RankReductionResult(
                rec.eps_scale(blanket).compose(rr.record), rr.sys, hist + rr.h_history,
                rr.sys.h <= 1 or rr.h_true_zero, ramified_by * blanket * rr.ramified_by,
            )
        raise Stalled("rank-1 reduction exhausted its strategies")
    return RankReductionResult(rec, cur, hist, False, ramified_by)


# ---------------------------------------------------------------------------
# turning points
# ---------------------------------------------------------------------------


def _encode_pencil(A0, m, ctx):
    """Encode the leading matrix as a derivation-free system in which the
    x^(1/m) lattice plays the perturbation role, so the rank engine performs
    the classical matrix-pencil reduction."""
    n = len(A0)
    tower = QQ
    entries = []
    fake_h = 0
    for row in A0:
        r = []
        for e in row:
            t = {}
            for exp, c in e.c.items():
                k = int(exp * m)
                t[k] = PuiseuxSeries({0: c})
            eo = INF if e.order == INF else int(e.order * m)
            r.append(BiSeries(t, eo))
        entries.append(r)
    vmax = 0
    for row in entries:
        for e in row:
            if e.t:
                vmax = max(vmax, max(e.t))
    fake_h = n * (vmax + 2) + 4
    op = [[e.eps_shift(-fake_h) for e in row] for row in entries]
    fake_ctx = Trunc(
        xi_order=fake_h + vmax + 4,
        x_order=F(4),
        x_certainty=F(2),
        eps_certainty=fake_h + vmax + 2,
    )
    return PerturbedSystem.from_op(op, fake_ctx), fake_h


def _decode_pencil_transform(T, m):
    """Fake-variable matrix back to a Puiseux matrix in x^(1/m)."""
    out = []
    for row in T:
        r = []
        for b in row:
            c = {}
            for k, ps in b.t.items():
                for e2, v in ps.c.items():
                    if e2 != 0:
                        raise PreconditionError("pencil transform is not monomial")
                    c[F(k, m)] = v
            r.append(PuiseuxSeries(c))
        out.append(r)
    return out


def resolve_turning_point(sys):
    """Reduce a non-nilpotent leading coefficient with nilpotent constant
    term: ramify the x lattice to the minimal eigenvalue exponent, run the
    pencil reduction, and apply the resulting transformation exactly."""
    ctx = sys.ctx
    A00 = sys.A00()
    if not cmat_nilpotent(A00):
        raise PreconditionError("leading constant matrix is not nilpotent")
    expos, s_all, _ = newton_puiseux_exponents(sys.A0(), ctx)
    vmin = min(expos)
    m = 1
    for e in _px_shift_slices(sys.A0()):
        m = m * e.denominator // _gcd(m, e.denominator)
    m = m * vmin.denominator // _gcd(m, vmin.denominator)
    pencil, fake_h = _encode_pencil(sys.A0(), m, ctx)
    rr = eps_rank_reduce(pencil, stop_nonnilpotent=True)
    T = _decode_pencil_transform(rr.record.T, m)
    out, rc = gauge_apply_px(sys, T, label="turning")
    if cmat_nilpotent(out.A00()):
        raise PreconditionError("turning point resolution failed to expose an eigenvalue")
    return TurningResult(rc, out, m)


# ---------------------------------------------------------------------------
# the ramification lemma
# ---------------------------------------------------------------------------


def katz_ramify(sys, d=None):
    """Ramify eps so that the reduced system satisfies h + rank A_0 > n.

    The default d is the smallest integer >= n/(h - 1 + r/n); any larger
    value (the worked examples use one) is accepted."""
    n, ctx = sys.n, sys.ctx
    r = sys.rank_A0()
    if sys.h + r > n:
        if d is None or d == 1:
            return sys, 1, RankReductionResult(gauge_identity(n), sys, [(sys.h, r)])
    bound = F(n, 1) / (sys.h - 1 + F(r, n))
    d_min = int(bound) if bound == int(bound) else int(bound) + 1
    if d is None:
        d = d_min
    if d < bound:
        raise PreconditionError("ramification index below the admissible bound")
    cand = ramify_system(sys, d)
    rr = eps_rank_reduce(cand)
    return rr.sys, d, rr
