import math
from fractions import Fraction

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from boxlab import treepartition as tp
from boxlab.errors import InputError
from boxlab.graphs import LabeledMultigraph, cycle_graph, path_graph
from boxlab.metric import MetricComponent


def to_nx(t):
    g = nx.Graph()
    g.add_nodes_from(range(t.vertex_count))
    g.add_edges_from((u, v) for u, v, _ in t.edges)
    return g


trees = st.builds(tp.random_bounded_tree, st.integers(1, 120), st.integers(2, 5), st.integers(0, 10**6))


@settings(max_examples=40, deadline=None)
@given(trees)
def test_distance_matrix_matches_networkx(t):
    d = tp.tree_distance_matrix(t)
    ref = dict(nx.all_pairs_shortest_path_length(to_nx(t)))
    assert all(d[u, v] == ref[u][v] for u in range(t.vertex_count) for v in range(t.vertex_count))


@settings(max_examples=30, deadline=None)
@given(trees, st.data())
def test_gromov_product_is_lca_depth(t, data):
    n = t.vertex_count
    d = tp.tree_distance_matrix(t)
    rooted = nx.bfs_tree(to_nx(t), 0)
    for _ in range(10):
        x, y = data.draw(st.integers(0, n - 1)), data.draw(st.integers(0, n - 1))
        lca = nx.lowest_common_ancestor(rooted, x, y)
        assert tp.gromov_product(d, 0, x, y) == d[0, lca]


def test_random_tree_shape():
    t = tp.random_bounded_tree(500, 3, 7)
    assert t.edge_count == 499 and t.is_connected() and max(t.degrees()) <= 3
    assert t.edges == tp.random_bounded_tree(500, 3, 7).edges
    with pytest.raises(InputError):
        tp.random_bounded_tree(10, 1, 0)


def test_non_tree_rejected():
    with pytest.raises(InputError):
        tp.tree_distance_matrix(cycle_graph(5))


def test_annulus_index():
    depth = np.arange(11)
    assert tp.annulus_index(depth, 2).tolist() == [0, 0, 0, 1, 1, 2, 2, 3, 3, 4, 4]


def test_path_clusters():
    dec = tp.cluster_decomposition(path_graph(11), 2)
    assert dec.clusters == ((0, 1, 2), (3, 4), (5, 6), (7, 8), (9, 10))
    assert dec.neighborhoods[1] == (2, 3, 4, 5)


def test_star_clusters_split_by_branch():
    # three long legs from the root: annulus 1 splits into one cluster per leg
    edges = [(0, 1, 0), (0, 5, 0), (0, 9, 0)] + [(i, i + 1, 0) for i in (1, 2, 3, 5, 6, 7, 9, 10, 11)]
    t = LabeledMultigraph.from_edges(13, edges)
    dec = tp.cluster_decomposition(t, 1)
    ann1 = [c for c, k in zip(dec.clusters, dec.cluster_annulus) if k == 1]
    assert sorted(ann1) == [(2,), (6,), (10,)]


@settings(max_examples=25, deadline=None)
@given(trees, st.integers(1, 8))
def test_decomposition_invariants(t, L):
    d = tp.tree_distance_matrix(t)
    dec = tp.cluster_decomposition(t, L)
    chk = tp.check_decomposition(dec, d)
    assert chk.passed(L), chk
    assert sorted(x for c in dec.clusters for x in c) == list(range(t.vertex_count))


@settings(max_examples=25, deadline=None)
@given(trees, st.sampled_from([2, 4, 8]), st.data())
def test_partition_of_unity_lipschitz(t, L, data):
    pou = tp.partition_of_unity(t, L)
    d = tp.tree_distance_matrix(t)
    for w in pou.weights:
        assert sum(w.values()) == 1 and all(v >= 0 for v in w.values())
    assert pou.edge_ratios(t) <= Fraction(40, L)
    n = t.vertex_count
    for _ in range(20):
        x, y = data.draw(st.integers(0, n - 1)), data.draw(st.integers(0, n - 1))
        assert pou.l1(x, y) <= Fraction(40, L) * int(d[x, y])


def test_measured_ratios():
    worst = {}
    for s in range(5):
        t = tp.random_bounded_tree(600, 5, s)
        for L in (2, 4, 8):
            worst[L] = max(worst.get(L, Fraction(0)), tp.partition_of_unity(t, L).edge_ratios(t))
    assert worst[2] <= Fraction(2, 3) and worst[4] <= Fraction(2, 5) and worst[8] <= Fraction(2, 9)


def test_l1_on_pairs_matches_exact():
    t = tp.random_bounded_tree(80, 4, 1)
    pou = tp.partition_of_unity(t, 3)
    xs, ys = np.arange(0, 79), np.arange(1, 80)
    approx = tp.l1_on_pairs(pou, xs, ys)
    assert np.allclose(approx, [float(pou.l1(x, y)) for x, y in zip(xs, ys)])


def test_equi_exact_certificate(tmp_path):
    ts = [tp.random_bounded_tree(300, 5, s) for s in range(3)]
    cert = tp.equi_exact_certificate(ts, 2, Fraction(1))
    assert cert["L"] == 80 and cert["C"] == 320
    for c in cert["trees"]:
        assert Fraction(c["max_l1_within_R"]) <= 1 and c["max_support_diam"] <= 320
    tp.write_certificate(cert, tmp_path / "c.json")
    assert '"schema_version": 1' in (tmp_path / "c.json").read_text()
    with pytest.raises(InputError):
        tp.equi_exact_certificate(ts, 0, 1)


def test_certify_small_L():
    t = tp.random_bounded_tree(200, 3, 4)
    c = tp.certify_tree(t, 4, 1, Fraction(10, 4))
    assert c.max_l1_within_R <= Fraction(10, 4) and c.max_l1_ratio == c.max_l1_within_R


def test_partition_csv(tmp_path):
    pou = tp.partition_of_unity(path_graph(5), 2)
    pou.write_csv(tmp_path / "p.csv")
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "vertex,piece,weight" and len(lines) > 5


def test_separated_cover_partition():
    g = path_graph(30)
    space = MetricComponent.from_graph(g)
    core = range(10, 20)
    pou = tp.separated_cover_partition(space, g, core, [range(0, 12), range(18, 30)], 4)
    assert all(sum(w.values()) == 1 for w in pou.weights)
    assert pou.edge_ratios(g) <= Fraction(40, 4)
    with pytest.raises(InputError, match="apart"):
        tp.separated_cover_partition(space, g, range(5, 7), [range(0, 6), range(6, 30)], 4)
    with pytest.raises(InputError, match="cover"):
        tp.separated_cover_partition(space, g, core, [range(0, 5)], 4)
