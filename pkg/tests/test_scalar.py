import random
from fractions import Fraction

import pytest

from paramred.coeff import QQ
from paramred.errors import PreconditionError
from paramred.scalar import (
    ScalarEquation,
    eps_polygon,
    exp_order_scalar,
    scalar_moser,
    scalar_to_irreducible_system,
)
from paramred.series import BiSeries, PuiseuxSeries

F = Fraction


def xi_term(c, xexp, k, sigma):
    """c * x^xexp * xi^k as a raw element, xi = x^sigma eps."""
    return BiSeries.monomial(QQ.from_fraction(F(c)), F(xexp) + F(sigma) * k, k)


def wasow_equation():
    # d^3 f - (x/xi^2) d^2 f - (1/xi^5) f = 0, sigma = 0
    sigma = F(0)
    a2 = xi_term(-1, 1, -2, sigma)
    a0 = xi_term(-1, 0, -5, sigma)
    a = [a0, BiSeries.zero(), a2, BiSeries.one()]
    return ScalarEquation(3, a, sigma)


def worked_order5_equation():
    # sigma = -1:
    # d^5 f + (x xi^-3 + x) d^4 f + 2 x^2 xi^-1 d^3 f + (xi^-3 + 1) d^2 f
    #       + (-3 xi^-4 + x^2 xi^-2) d f - xi^-2 f = 0
    s = F(-1)
    a4 = xi_term(1, 1, -3, s) + xi_term(1, 1, 0, s)
    a3 = xi_term(2, 2, -1, s)
    a2 = xi_term(1, 0, -3, s) + xi_term(1, 0, 0, s)
    a1 = xi_term(-3, 0, -4, s) + xi_term(1, 2, -2, s)
    a0 = xi_term(-1, 0, -2, s)
    return ScalarEquation(5, [a0, a1, a2, a3, a4, BiSeries.one()], s)


def test_polygon_wasow():
    eq = wasow_equation()
    poly = eps_polygon(eq)
    assert [e.slope for e in poly.edges] == [F(3, 2), F(2)]
    e1, e2 = poly.edges
    assert e1.support == [0, 2]
    assert e2.support == [2, 3]
    assert e1.poly_str() == "x*X^2 + 1"
    assert e2.poly_str() == "X^3 - x*X^2"


def test_exp_order_scalar():
    eq = wasow_equation()
    assert exp_order_scalar(eq) == F(2)

    # all nu_i >= 0: single zero slope
    a = [BiSeries.monomial(QQ.one(), 0, 1), BiSeries.monomial(QQ.one(), 0, 0), BiSeries.one()]
    eq0 = ScalarEquation(2, a, F(0))
    assert exp_order_scalar(eq0) == 0
    poly = eps_polygon(eq0)
    assert [e.slope for e in poly.edges] == [F(0)]


def test_polygon_brute_force_random():
    rng = random.Random(31)
    for _ in range(200):
        n = 4
        nus = [rng.randint(-6, 3) for _ in range(n)]
        keep = [rng.random() < 0.85 for _ in range(n)]
        a = []
        for i in range(n):
            if keep[i]:
                a.append(BiSeries.monomial(QQ.one(), 0, nus[i]))
            else:
                a.append(BiSeries.zero())
        a.append(BiSeries.one())
        if not any(keep):
            keep[0] = True
            a[0] = BiSeries.monomial(QQ.one(), 0, nus[0])
        eq = ScalarEquation(n, a, F(0))
        poly = eps_polygon(eq)
        slopes = [e.slope for e in poly.edges]
        assert slopes == sorted(slopes)
        assert all(s >= 0 for s in slopes)
        # brute-force oracle: the largest slope is max(0, -nu_i/(n-i))
        best = max([F(0)] + [F(-nus[i], n - i) for i in range(n) if keep[i]])
        assert (slopes[-1] if slopes else F(0)) == best == exp_order_scalar(eq)
        # every point lies on or above each edge line
        pts = poly.points
        for e in poly.edges:
            i0 = e.support[0]
            v0 = dict(pts)[i0]
            for (i, v) in pts:
                assert v >= v0 + e.slope * (i - i0) or i < i0


def test_scalar_moser_worked_example():
    eq = worked_order5_equation()
    kappa, nu, mu, gamma = scalar_moser(eq)
    assert kappa == 3
    assert nu == 1
    assert mu == F(16, 5)
    assert gamma == [-11, -9, -7, -5, -3]


def test_scalar_moser_nonnegative_case():
    # all nu_i >= 0: kappa = 0; nu from the formula with i = n included
    a = [BiSeries.monomial(QQ.one(), 0, 2), BiSeries.monomial(QQ.one(), 0, 0), BiSeries.one()]
    eq = ScalarEquation(2, a, F(0))
    kappa, nu, mu, gamma = scalar_moser(eq)
    assert kappa == 0
    # nu = max over i of (i-n)(kappa-1) - nu_i = max((0-2)(-1)-2, (1-2)(-1)-0, 0) = 1
    assert nu == 1
    assert mu == F(1, 2)


def test_scalar_moser_defining_conditions_random():
    rng = random.Random(77)
    for _ in range(200):
        n = rng.randint(2, 4)
        a = []
        for i in range(n):
            if rng.random() < 0.8:
                a.append(BiSeries.monomial(QQ.one(), 0, rng.randint(-7, 3)))
            else:
                a.append(BiSeries.zero())
        a.append(BiSeries.one())
        eq = ScalarEquation(n, a, F(0))
        kappa, nu, mu, gamma = scalar_moser(eq)
        nus = {i: eq.a[i].val_eps() for i in range(n + 1) if not eq.a[i].is_known_zero()}
        # kappa minimal with nu_i + (n-i) kappa >= 0
        assert all(v + (n - i) * kappa >= 0 for i, v in nus.items())
        if kappa > 0:
            assert any(v + (n - i) * (kappa - 1) < 0 for i, v in nus.items())
        # gamma dominates no point and touches at some i >= n - nu
        for i, v in nus.items():
            if i < n:
                assert gamma[i] <= v
        touch = [i for i, v in nus.items() if i < n and gamma[i] == v]
        assert all(g == max(kappa * (i - n), (kappa - 1) * (i - n) - nu) for i, g in enumerate(gamma))


def test_irreducible_system_worked_example():
    eq = worked_order5_equation()
    sys = scalar_to_irreducible_system(eq)
    assert (sys.n, sys.h, sys.p, sys.sigma) == (5, 3, F(1), F(-1))
    # the displayed sparse matrix: diagonal entries sigma_a gamma_i xi^3
    # (the corner (5,5) also receives x alpha_4 and is checked below)
    A3 = sys.A(3)
    for i, g in enumerate([-11, -9, -7, -5]):
        assert A3[i][i].c == {F(0): QQ.from_fraction(-g)}  # sigma_a = -1
    # superdiagonal x xi for i < i0 = 4
    A1 = sys.A(1)
    for i in range(4):
        assert A1[i][i + 1].c == {F(1): QQ.one()}
    # last row: x alpha_i with alpha_i = -a_i xi^{-gamma_i}
    # x alpha_0 = x xi^9, x alpha_1 = 3 x xi^5 - x^3 xi^7,
    # x alpha_2 = -x xi^4 - x xi^7, x alpha_3 = -2 x^3 xi^4,
    # x alpha_4 = -x^2 - (x^2 - 3) xi^3
    assert sys.A(9)[4][0].c == {F(1): QQ.one()}
    assert sys.A(5)[4][1].c == {F(1): QQ.from_fraction(3)}
    assert sys.A(7)[4][1].c == {F(3): QQ.from_fraction(-1)}
    assert sys.A(4)[4][2].c == {F(1): QQ.from_fraction(-1)}
    assert sys.A(7)[4][2].c == {F(1): QQ.from_fraction(-1)}
    assert sys.A(4)[4][3].c == {F(3): QQ.from_fraction(-2)}
    assert sys.A(0)[4][4].c == {F(2): QQ.from_fraction(-1)}
    assert sys.A(3)[4][4].c == {F(2): QQ.from_fraction(-1), F(0): QQ.from_fraction(3)}
    # rank A(x, 0) = nu = 1
    assert sys.rank_A0() == 1


def test_irreducible_system_order1():
    # n = 1 equation d f + a0 f = 0 with nu_0 >= 0: kappa = 0, 1x1 system
    a0 = BiSeries.monomial(QQ.one(), 0, 0)
    eq = ScalarEquation(1, [a0, BiSeries.one()], F(0))
    sys = scalar_to_irreducible_system(eq)
    assert sys.n == 1 and sys.h == 0
