"""Randomized property suite: exact assertions on randomly generated
systems, seeded for reproducibility."""

import random
from fractions import Fraction

from paramred.coeff import QQ
from paramred.driver import input_from_presentation
from paramred.linalg import (
    PerturbedSystem,
    Trunc,
    char_poly,
    gauge_apply,
    kmat_identity,
    mat_mul,
    smith_column_reduce,
)
from paramred.reduce import det_G, eps_rank_reduce, exp_order_system, split, theta, _gaussform_establish
from paramred.reduce import eigenvalue_groups
from paramred.linalg import gauge_identity
from paramred.scalar import ScalarEquation, exp_order_scalar
from paramred.series import INF, BiSeries, PuiseuxSeries, bi_derive

F = Fraction
CTX = Trunc()


def kzero():
    return BiSeries.zero()


def mono(c, xe, ke):
    return BiSeries.monomial(QQ.from_fraction(F(c)), F(xe), int(ke))


def rand_entry(rng, max_terms=2, xmax=3, kmin=0, kmax=3):
    out = BiSeries.zero()
    for _ in range(rng.randint(0, max_terms)):
        c = rng.randint(-3, 3)
        if c:
            out = out + mono(c, rng.randint(0, xmax), rng.randint(kmin, kmax))
    return out


def rand_system(rng, n, h):
    entries = [[rand_entry(rng) for _ in range(n)] for _ in range(n)]
    if all(e.is_known_zero() for row in entries for e in row):
        entries[0][0] = mono(1, 0, 0)
    src = input_from_presentation(n, h, 0, 0, entries)
    return src.to_system(CTX)


def test_theta_equals_det_G():
    rng = random.Random(101)
    done = 0
    while done < 200:
        n = rng.choice((2, 2, 3))
        sys = rand_system(rng, n, rng.randint(1, 3))
        if sys.h < 1:
            continue
        sys2, _, r = _gaussform_establish(sys, gauge_identity(sys.n))
        th = theta(sys2, r)
        dg = det_G(sys2, r)
        la = max(len(th), len(dg))
        for k in range(la):
            a = th[k] if k < len(th) else PuiseuxSeries.zero()
            b = dg[k] if k < len(dg) else PuiseuxSeries.zero()
            assert a.same_terms(b)
        done += 1


def _exact_gauge(sys, rng):
    """A random exactly invertible transformation: permutations, shear
    eliminations with monomial entries, and eps-power scalings."""
    n = sys.n
    T = kmat_identity(n)
    Tinv = kmat_identity(n)
    for _ in range(rng.randint(1, 3)):
        kind = rng.choice(("perm", "elem", "diag"))
        if kind == "perm":
            i, j = rng.sample(range(n), 2)
            P = kmat_identity(n)
            P[i][i] = BiSeries.zero()
            P[j][j] = BiSeries.zero()
            P[i][j] = BiSeries.one()
            P[j][i] = BiSeries.one()
            T = mat_mul(T, P)
            Tinv = mat_mul(P, Tinv)
        elif kind == "elem":
            i, j = rng.sample(range(n), 2)
            q = mono(rng.randint(-2, 2), rng.randint(0, 2), rng.randint(0, 2))
            E = kmat_identity(n)
            E[i][j] = q
            Einv = kmat_identity(n)
            Einv[i][j] = -q
            T = mat_mul(T, E)
            Tinv = mat_mul(Einv, Tinv)
        else:
            g = [rng.randint(-1, 1) for _ in range(n)]
            D = kmat_identity(n)
            Dinv = kmat_identity(n)
            for i in range(n):
                D[i][i] = BiSeries.monomial(QQ.one(), 0, g[i])
                Dinv[i][i] = BiSeries.monomial(QQ.one(), 0, -g[i])
            T = mat_mul(T, D)
            Tinv = mat_mul(Dinv, Tinv)
    return T, Tinv


def test_char_poly_valuation_bound_under_gauges():
    # val_eps(alpha_i - beta_i) >= (1 - (n - i)) h for equivalent systems
    rng = random.Random(102)
    done = 0
    while done < 200:
        n = rng.choice((2, 3))
        sys = rand_system(rng, n, rng.randint(1, 2))
        if sys.h < 1:
            continue
        alphas = char_poly(sys)
        h = sys.h
        T, Tinv = _exact_gauge(sys, rng)
        out, _ = gauge_apply(sys, T, Tinv=Tinv)
        betas = char_poly(out)
        for i in range(n):
            diff = alphas[i] - betas[i]
            if diff.is_known_zero():
                continue
            assert diff.val_eps() >= (1 - (n - i)) * h
        done += 1


def rand_equation(rng, n):
    a = []
    for i in range(n):
        if rng.random() < 0.25:
            a.append(BiSeries.zero())
        else:
            c = rng.choice([v for v in range(-3, 4) if v])
            a.append(mono(c, rng.randint(0, 2), rng.randint(-4, 1)))
    a.append(BiSeries.one())
    eq = ScalarEquation(n, a, F(0))
    if all(ai.is_known_zero() for ai in a[:-1]):
        a[0] = mono(1, 0, -2)
        eq = ScalarEquation(n, a, F(0))
    return eq


def companion_system(eq):
    n = eq.n
    entries = [[kzero() for _ in range(n)] for _ in range(n)]
    for i in range(n - 1):
        entries[i][i + 1] = BiSeries.one()
    for i in range(n):
        entries[n - 1][i] = -eq.a[i]
    return PerturbedSystem.from_op(entries, CTX)


def test_companion_omega_matches_scalar_formula():
    rng = random.Random(103)
    done = 0
    while done < 200:
        n = rng.choice((2, 3))
        eq = rand_equation(rng, n)
        omega = exp_order_scalar(eq)
        sys = companion_system(eq)
        if sys.h <= 0:
            done += 1
            continue
        eo = exp_order_system(sys)
        assert eo.omega == omega
        done += 1


def test_irreducible_sandwich():
    # h - 1 + rank(A_0)/n <= omega <= h on eps-irreducible reductions
    rng = random.Random(104)
    done = 0
    while done < 200:
        n = rng.choice((2, 3))
        eq = rand_equation(rng, n)
        omega = exp_order_scalar(eq)
        sys = companion_system(eq)
        if sys.h < 1:
            done += 1
            continue
        rr = eps_rank_reduce(sys)
        out = rr.sys
        d = out.d
        if out.h < 1 or rr.h_true_zero:
            # true rank nonpositive: the order must vanish as well
            assert omega * d <= max(out.h, 0) + 1
            done += 1
            continue
        th = theta(out)
        irreducible = any(c.c for c in th)
        _, r = smith_column_reduce(out.A0(), out.ctx)
        if irreducible and out.h > 1:
            assert out.h - 1 + F(r, n) <= omega * d <= out.h
        else:
            assert omega * d <= out.h
        done += 1


def test_split_preserves_leading_constant():
    rng = random.Random(105)
    done = 0
    while done < 200:
        n = rng.choice((2, 3))
        # distinct constant diagonal plus perturbations
        diag = rng.sample(range(-3, 4), n)
        entries = [[kzero() for _ in range(n)] for _ in range(n)]
        for i in range(n):
            entries[i][i] = mono(diag[i], 0, 0) + rand_entry(rng, 1, 2, 1, 2)
            for j in range(n):
                if i != j:
                    entries[i][j] = rand_entry(rng, 1, 2, 0, 2).mul_monomial(QQ.one(), 1, 0)
        src = input_from_presentation(n, rng.randint(1, 2), 0, 0, entries)
        sys = src.to_system(CTX)
        groups = eigenvalue_groups(sys.A00())
        if len(groups) < 2:
            continue
        sp = split(sys)  # internal asserts: block diagonal, A00 preserved
        assert sum(len(b) for b in sp.blocks) == n
        assert len(sp.subsystems) == len(groups)
        done += 1


def test_rank_reduction_measure_decreases():
    # the eps-Moser measure max(0, h + r/n) strictly decreases across every
    # sweep that fires, and the shear drops the leading rank
    rng = random.Random(106)
    done = 0
    while done < 200:
        n = rng.choice((2, 3))
        sys = rand_system(rng, n, rng.randint(1, 3))
        if sys.h < 1:
            continue
        rr = eps_rank_reduce(sys)
        ms = [max(F(0), h + F(r, n)) for (h, r) in rr.h_history]
        assert all(a > b for a, b in zip(ms, ms[1:]))
        if rr.sys.h >= 1 and not rr.h_true_zero:
            th = theta(rr.sys)
            assert any(c.c for c in th) or rr.sys.h == 1
        done += 1


def test_series_ring_axioms_and_leibniz():
    rng = random.Random(107)

    def rand_bi():
        t = {}
        for _ in range(rng.randint(1, 3)):
            k = rng.randint(-1, 2)
            e = F(rng.randint(-3, 4), rng.choice([1, 2]))
            t.setdefault(k, PuiseuxSeries.zero())
            t[k] = t[k] + PuiseuxSeries({e: rng.randint(-3, 3)})
        return BiSeries(t)

    for _ in range(200):
        f, g, w = rand_bi(), rand_bi(), rand_bi()
        assert ((f + g) + w).same_terms(f + (g + w))
        assert ((f * g) * w).same_terms(f * (g * w))
        assert (f * (g + w)).same_terms(f * g + f * w)
        assert (f * g).same_terms(g * f)
        lhs = bi_derive(f * g)
        rhs = bi_derive(f) * g + f * bi_derive(g)
        assert lhs.same_terms(rhs)
