import numpy as np
import pytest

from boxlab import baumslag
from boxlab.errors import CapExceeded, InputError
from boxlab.groups import A_SIDE, B_SIDE, FreeProduct, GeneratingSet, check_injective_on, cyclic, dihedral

FP = FreeProduct(cyclic(2), cyclic(3))


@pytest.mark.parametrize("fp", [FP, FreeProduct(cyclic(3), cyclic(3)), FreeProduct(cyclic(2), dihedral(3))])
@pytest.mark.parametrize("k", range(0, 6))
def test_word_count_closed_form(fp, k):
    ws = baumslag.build_truncated_words(fp, k)
    assert len(ws) == baumslag.count_truncated_words(fp.A.order, fp.B.order, k)
    assert ws.words[0] == ()


@pytest.mark.parametrize("k", range(1, 7))
def test_faithful_on_truncated_words(k):
    rep = baumslag.build_sigma(FP, k)
    r = baumslag.faithfulness_report(rep, k)
    assert r.passed and r.checked == len(rep.words)


@pytest.mark.parametrize("k", range(1, 7))
def test_injective_on_half_ball(k):
    rep = baumslag.build_sigma(FP, k)
    ok, pair = check_injective_on(FP.words_up_to(k // 2), rep.word_permutation)
    assert ok, pair


def test_sigma_is_a_homomorphism_on_factors():
    rep = baumslag.build_sigma(FP, 4)
    for side in (A_SIDE, B_SIDE):
        grp = FP.factors[side]
        for x in grp.elements():
            for y in grp.elements():
                composed = rep.perm(side, x)[rep.perm(side, y)]
                assert np.array_equal(composed, rep.perm(side, grp.m(x, y)))


@pytest.mark.parametrize("fp, k", [(FP, 1), (FP, 2), (FreeProduct(cyclic(3), cyclic(3)), 1)])
def test_order_matches_closure(fp, k):
    rep = baumslag.build_sigma(fp, k)
    assert baumslag.quotient_order(rep) == baumslag.closure_order(rep)


def test_known_orders():
    # degree 4 and 8 images of Z/2*Z/3: S4 and PGL(2,7)
    assert [baumslag.quotient_order(baumslag.build_sigma(FP, k)) for k in (1, 2)] == [24, 336]


def test_quotient_group_images():
    rep = baumslag.build_sigma(FP, 2)
    table, elems, images = baumslag.quotient_group(rep)
    assert table.order == baumslag.quotient_order(rep)
    assert images[(A_SIDE, 0)] == 0


def test_schreier_graph_degree():
    rep = baumslag.build_sigma(FP, 3)
    gens = FP.full_generating_set()
    g = baumslag.schreier_graph(rep, gens)
    assert g.regular_degree() == baumslag.effective_generator_count(FP, gens) == 4
    assert g.is_connected()
    with pytest.raises(InputError):
        baumslag.schreier_graph(rep, GeneratingSet(((A_SIDE, 5),)))


def test_cap_and_bad_k():
    with pytest.raises(CapExceeded, match="cap"):
        baumslag.build_sigma(FP, 8, cap=10)
    with pytest.raises(InputError):
        baumslag.build_sigma(FP, 0)
