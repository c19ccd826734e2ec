import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sympy.combinatorics.named_groups import DihedralGroup, SymmetricGroup

from boxlab.errors import GroupError, InputError
from boxlab.groups import (
    A_SIDE, B_SIDE, FiniteGroupTable, FreeProduct, cyclic, dihedral, direct_product,
    group_from_spec, parse_group_table, quaternion, small_group_library, symmetric,
)


@pytest.mark.parametrize("group, count", [
    (direct_product(direct_product(cyclic(2), cyclic(2)), cyclic(2)), 16),
    (dihedral(4), 10),
    (quaternion(), 6),
    (cyclic(12), 6),
    (symmetric(3), 6),
])
def test_subgroup_counts(group, count):
    subs = group.subgroups()
    assert len(subs) == count
    assert all(group.is_subgroup(h) for h in subs)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_dihedral_matches_sympy(n):
    g = dihedral(n)
    assert g.order == DihedralGroup(n).order()
    orders = sorted(g.element_order(x) for x in g.elements())
    assert orders == sorted(p.order() for p in DihedralGroup(n).elements)


def test_symmetric_matches_sympy():
    g = symmetric(4)
    assert g.order == SymmetricGroup(4).order()
    assert sorted(g.element_order(x) for x in g.elements()) == sorted(p.order() for p in SymmetricGroup(4).elements)


def test_quaternion_has_one_involution():
    q = quaternion()
    assert [x for x in q.elements() if q.element_order(x) == 2] == [4]


def test_library_groups_are_groups():
    for g in small_group_library(16):
        g.check_associativity()
        assert g.order <= 16


def test_loop_fails_associativity(loop5_text):
    with pytest.raises(GroupError, match="associativity"):
        parse_group_table(loop5_text)


@pytest.mark.parametrize("table, msg", [
    ([[0, 1], [1, 1]], "inverse|Latin"),
    ([[1, 0], [0, 1]], "identity"),
    ([[0, 1, 2], [1, 2, 0], [2, 1, 0]], "identity|Latin|inverse"),
])
def test_bad_tables_rejected(table, msg):
    with pytest.raises(GroupError, match=msg):
        FiniteGroupTable(np.array(table))


def test_parse_round_trip():
    g = dihedral(5)
    h = parse_group_table(g.to_text())
    assert np.array_equal(g.mul, h.mul)


def test_group_spec():
    assert group_from_spec("cyclic:2*cyclic:3").order == 6
    assert group_from_spec("quaternion").order == 8
    with pytest.raises(InputError):
        group_from_spec("klein")


FP = FreeProduct(cyclic(2), cyclic(3))
FP_Q = FreeProduct(cyclic(4), dihedral(3))


def raw_words(fp):
    syl = st.integers(0, 1).flatmap(
        lambda s: st.tuples(st.just(s), st.integers(0, fp.factors[s].order - 1)))
    return st.lists(syl, max_size=12)


@given(raw_words(FP_Q), raw_words(FP_Q), raw_words(FP_Q))
def test_free_product_associative(x, y, z):
    fp = FP_Q
    x, y, z = fp.reduce(x), fp.reduce(y), fp.reduce(z)
    assert fp.multiply(fp.multiply(x, y), z) == fp.multiply(x, fp.multiply(y, z))


@given(raw_words(FP_Q))
def test_reduce_gives_normal_form(raw):
    fp = FP_Q
    w = fp.reduce(raw)
    assert fp.is_reduced(w)
    assert fp.reduce(w) == w
    assert fp.multiply(w, fp.inverse(w)) == ()
    assert fp.parse(fp.format(w)) == w


@given(raw_words(FP), raw_words(FP))
def test_projection_is_homomorphism(x, y):
    fp = FP
    x, y = fp.reduce(x), fp.reduce(y)
    px, py = fp.project(x), fp.project(y)
    assert fp.project(fp.multiply(x, y)) == (fp.A.m(px[0], py[0]), fp.B.m(px[1], py[1]))
    assert fp.in_commutator_subgroup(fp.commutator(x, y))


def count_reduced(na, nb, k):
    # words alternate; count by brute force over side patterns
    total = 1
    for n in range(1, k + 1):
        for first in (na, nb):
            other = nb if first is na else na
            total += first ** ((n + 1) // 2) * other ** (n // 2)
    return total


@pytest.mark.parametrize("k", range(0, 7))
def test_words_up_to_counts(k):
    words = FP.words_up_to(k)
    assert len(words) == len(set(words)) == count_reduced(1, 2, k)
    assert all(FP.is_reduced(w) and len(w) <= k for w in words)


def test_random_words_reduced():
    rng = random.Random(3)
    for _ in range(200):
        assert FP.is_reduced(FP.random_word(rng, 10))


def test_bad_syllable():
    with pytest.raises(InputError):
        FP.reduce([(2, 0)])
    with pytest.raises(InputError):
        FP.parse("c1")
    assert FP.letter(A_SIDE, 0) == ()
    assert FP.letter(B_SIDE, 2) == ((B_SIDE, 2),)
