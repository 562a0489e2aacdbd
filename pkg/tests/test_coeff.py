import random
from fractions import Fraction

import pytest

from paramred.coeff import (
    QQ,
    AlgebraicNumber,
    Upoly,
    adjoin_root,
    distinct_root_partition,
)
from paramred.errors import DivisionByZero, NotSquarefree, PreconditionError


def q(v):
    return QQ.from_fraction(Fraction(v))


def test_rational_field_ops():
    assert q("1/2") + q("1/3") == q("5/6")
    assert q(2) * q("3/4") == q("3/2")
    assert q(1) / q(3) == q("1/3")
    with pytest.raises(DivisionByZero):
        q(1) / q(0)


def test_gaussian_unit():
    t, i = adjoin_root(QQ, Upoly.from_rationals([1, 0, 1]))  # z^2 + 1
    assert i * i == t.from_fraction(-1)
    assert (i ** 4) == t.from_fraction(1)
    assert (q(1).lift(t) + i) * (q(1).lift(t) - i) == t.from_fraction(2)


def test_cube_root_of_unity_inverse():
    t, z = adjoin_root(QQ, Upoly.from_rationals([1, 1, 1]))  # z^2 + z + 1
    one = t.one()
    inv = one / (one - z)
    # stated value (2 + zeta)/3; verified by multiplying back
    assert inv == (t.from_fraction(2) + z) / 3
    assert (one - z) * inv == one
    assert z ** 3 == one


def test_adjoin_examples():
    t, i = adjoin_root(QQ, Upoly.from_rationals([1, 0, 1]))
    assert Upoly.from_rationals([1, 0, 1]).lift(t).eval(i).is_zero()

    t2, z = adjoin_root(QQ, Upoly.from_rationals([1, 1, 1]))
    # zeta^3 reduces to 1 (hand oracle: z^3 = z*z^2 = z*(-z-1) = -z^2-z = 1)
    assert z ** 3 == t2.one()

    # z^2 - z is squarefree, adjoining is legal even though reducible
    t3, th = adjoin_root(QQ, Upoly.from_rationals([0, -1, 1]))
    assert th * th == th
    # (z^2+1)^2 is not squarefree
    sq = Upoly.from_rationals([1, 0, 2, 0, 1])
    with pytest.raises(NotSquarefree) as exc:
        adjoin_root(QQ, sq)
    assert exc.value.gcd == Upoly.from_rationals([1, 0, 1])


def test_distinct_root_partition_basic():
    # lambda^2 (lambda - 1)
    p = Upoly.from_rationals([0, 0, -1, 1])
    parts = distinct_root_partition(p)
    as_set = {(r.as_fraction(), m) for (r, m) in parts}
    assert as_set == {(Fraction(0), 2), (Fraction(1), 1)}

    # lambda^3 - lambda, oracle: rational root search gives {0, 1, -1}
    p = Upoly.from_rationals([0, -1, 0, 1])
    parts = distinct_root_partition(p)
    assert {(r.as_fraction(), m) for (r, m) in parts} == {
        (Fraction(0), 1),
        (Fraction(1), 1),
        (Fraction(-1), 1),
    }


def test_distinct_root_partition_contract():
    # coefficients must be constants of the tower
    with pytest.raises(PreconditionError):
        Upoly(QQ, [object()])
    # non-monic input rejected
    with pytest.raises(PreconditionError):
        distinct_root_partition(Upoly.from_rationals([1, 0, 2]))


def test_distinct_root_partition_extends_tower():
    p = Upoly.from_rationals([1, 0, 1])  # z^2 + 1: needs i
    parts = distinct_root_partition(p)
    assert len(parts) == 2
    (r1, m1), (r2, m2) = parts
    assert m1 == m2 == 1
    assert r1 == -r2
    tower = r1.tower
    assert tower.depth() == 1
    assert (r1 * r1) == tower.from_fraction(-1)


def test_distinct_root_partition_multiplicities_and_substitution():
    rng = random.Random(7)
    for _ in range(25):
        roots = [Fraction(rng.randint(-4, 4), rng.randint(1, 3)) for _ in range(3)]
        mults = [rng.randint(1, 2) for _ in range(3)]
        p = Upoly.from_rationals([1])
        for r, m in zip(roots, mults):
            for _ in range(m):
                p = p * Upoly(QQ, [QQ.from_fraction(-r), QQ.one()])
        parts = distinct_root_partition(p)
        assert sum(m for (_, m) in parts) == p.degree()
        tower = parts[0][0].tower
        for r, _ in parts:
            assert p.lift(tower).eval(r).is_zero()


def test_field_axioms_random():
    t, i = adjoin_root(QQ, Upoly.from_rationals([1, 0, 1]))
    t2, s2 = adjoin_root(t, Upoly.from_rationals([-2, 0, 1]).lift(t))  # sqrt(2) above i
    rng = random.Random(20240817)
    gens = [t2.one(), i.lift(t2), s2, i.lift(t2) * s2]

    def rand_elem():
        out = t2.zero()
        for g in gens:
            out = out + g * Fraction(rng.randint(-3, 3), rng.randint(1, 3))
        return out

    for _ in range(200):
        a, b, c = rand_elem(), rand_elem(), rand_elem()
        assert (a + b) + c == a + (b + c)
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        if not a.is_zero():
            assert a * a.inverse() == t2.one()


def test_defining_polynomial_vanishes():
    t, i = adjoin_root(QQ, Upoly.from_rationals([1, 0, 1]))
    t2, z = adjoin_root(t, Upoly.from_rationals([1, 1, 1]).lift(t))
    for lvl, g in ((0, i.lift(t2)), (1, z)):
        assert t2.minpoly(lvl).eval(g).is_zero()


def test_serialization_style():
    t, z = adjoin_root(QQ, Upoly.from_rationals([1, 1, 1]))
    s = ((t.from_fraction(2) + z) / 3).to_str()
    assert "RootOf(" in s and "index=0" in s
