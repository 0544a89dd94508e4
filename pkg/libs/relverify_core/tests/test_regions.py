from __future__ import annotations

import random

import pytest

from relverify.lang.regions import NULL, RefPerm, RefPermError, Reference, Region


def _perm(rng: random.Random, n: int = 6) -> RefPerm:
    lefts = rng.sample(range(1, 30), n)
    rights = rng.sample(range(1, 30), n)
    return RefPerm(tuple((Reference(l), Reference(r)) for l, r in zip(lefts, rights)))


def test_refperm_rejects_null_and_non_injective_pairs():
    with pytest.raises(RefPermError):
        RefPerm(((NULL, Reference(1)),))
    with pytest.raises(RefPermError):
        RefPerm(((Reference(1), Reference(2)), (Reference(3), Reference(2))))
    with pytest.raises(RefPermError):
        RefPerm(((Reference(1), Reference(2)), (Reference(1), Reference(3))))


def test_refperm_algebra():
    rng = random.Random(7)
    for _ in range(50):
        p = _perm(rng)
        inv = p.inverse()
        assert inv.inverse().forward == p.forward
        assert p.domain() == inv.range() and p.range() == inv.domain()
        assert p.compose(inv).forward == {l: l for l in p.domain()}
        for l, r in p.pairs:
            assert p.relates(l, r)
            assert p.get_inverse(r) == l


def test_extend_and_includes():
    p = RefPerm(((Reference(1), Reference(5)),))
    q = p.extend(Reference(2), Reference(6))
    assert q.includes(p) and not p.includes(q)
    assert p.extend(Reference(1), Reference(5)) is p
    with pytest.raises(RefPermError):
        q.extend(Reference(3), Reference(6))


def test_null_relates_only_to_null():
    p = RefPerm(((Reference(1), Reference(1)),))
    assert p.relates(NULL, NULL)
    assert not p.relates(NULL, Reference(1))
    assert not p.relates(Reference(1), NULL)


def test_image_of_regions():
    p = RefPerm(((Reference(1), Reference(4)), (Reference(2), Reference(5))))
    assert p.image(Region.of(Reference(1), NULL)) == Region.of(Reference(4), NULL)
    assert p.image(Region.of(Reference(1), Reference(3))) is None
    assert p.image(Region()) == Region()


def test_region_operations():
    a = Region.of(Reference(1), Reference(2))
    b = Region.of(Reference(2), Reference(3))
    assert a.union(b) == Region.of(Reference(1), Reference(2), Reference(3))
    assert a.inter(b) == Region.of(Reference(2))
    assert a.diff(b) == Region.of(Reference(1))
    assert a.inter(b).subset(a) and not a.subset(b)
    assert Reference(1) in a and len(a) == 2
    assert str(Region.of(NULL, Reference(2))) == "{null, r2}"
