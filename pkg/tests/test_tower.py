import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from boxlab import tower
from boxlab.errors import CapExceeded, InputError
from boxlab.graphs import LabeledMultigraph, cycle_graph, girth


def multigraph_to_nx(g):
    h = nx.MultiGraph()
    h.add_nodes_from(range(g.vertex_count))
    h.add_edges_from((u, v) for u, v, _ in g.edges)
    return h


def assert_covering(level, base):
    """Every cover vertex sees the incident edges of its image exactly once."""
    n = base.vertex_count
    for x in range(level.vertex_count):
        up = sorted(int(level.projection[e]) for _, e in level.graph.adjacency[x])
        down = sorted(e for _, e in base.adjacency[x % n])
        assert up == down
    for idx, (u, v, _) in enumerate(level.graph.edges):
        bu, bv, _ = base.edges[int(level.projection[idx])]
        assert {u % n, v % n} == {bu, bv}


def test_rank1_levels_are_cycles():
    tw = tower.build_tower(1, 10)
    for lv in tw.levels:
        n = 2 ** lv.level
        assert tower.is_cycle_of_length(lv.graph, n)
        assert nx.is_isomorphic(multigraph_to_nx(lv.graph), multigraph_to_nx(cycle_graph(n)))


def test_rank2_sizes_and_girth():
    tw = tower.build_tower(2, 2)
    assert [lv.vertex_count for lv in tw.levels] == [4, 128]
    assert [lv.girth_simple for lv in tw.levels] == [4, 4]
    assert tower.next_level_size(tw.levels[1]) == 128 * 2 ** 129
    assert_covering(tw.levels[1], tw.levels[0].graph)


def test_truncation_is_reported():
    tw = tower.build_tower(2, 3, size_cap_=10_000)
    assert tw.truncated and len(tw.levels) == 2 and "cap" in tw.truncation_reason


def test_wall_metric_rank2():
    lv = tower.build_tower(2, 2).levels[1]
    r = tower.girth_scale_report(lv)
    assert r["dw_le_d_violations"] == 0
    assert r["equal_below_half_girth_violations"] == 0
    assert set(tower.wall_separation_counts(lv)) == {2}
    emb = tower.wall_embedding(lv)
    sq = ((emb[:, None, :] - emb[None, :, :]) ** 2).sum(axis=2)
    assert np.array_equal(sq.astype(int), tower.wall_distance_matrix(lv))
    assert tower.wall_metric(lv, 0, 5) == tower.wall_distance_matrix(lv)[0, 5]


def test_level_one_has_no_walls():
    lv = tower.build_tower(2, 1).levels[0]
    assert not lv.has_walls
    with pytest.raises(InputError):
        tower.wall_distance_matrix(lv)


def test_is_cycle_rejects_other_graphs():
    g = LabeledMultigraph.from_edges(4, [(0, 1, 0), (1, 0, 0), (2, 3, 0), (3, 2, 0)])
    assert not tower.is_cycle_of_length(g, 4)


@st.composite
def connected_graphs(draw):
    n = draw(st.integers(1, 6))
    edges = [(draw(st.integers(0, v - 1)), v, 0) for v in range(1, n)]
    extra = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=4))
    edges += [(u, v, 1) for u, v in extra]
    return LabeledMultigraph.from_edges(n, edges)


@settings(max_examples=60, deadline=None)
@given(connected_graphs())
def test_homology_cover_properties(base):
    lv = tower.homology_cover(base)
    assert lv.vertex_count == base.vertex_count * 2 ** base.cycle_rank()
    assert lv.graph.edge_count == base.edge_count * 2 ** base.cycle_rank()
    assert_covering(lv, base)
    if len(base.simple_edges()) == base.edge_count:
        # cycles of a simple base lift to open paths, so the cover cannot have shorter cycles
        assert girth(lv.graph) >= girth(base)
    d = lv.graph.distance_matrix()
    dw = tower.wall_distance_matrix(lv)
    assert (dw <= d).all()


def test_cover_cap():
    with pytest.raises(CapExceeded):
        tower.homology_cover(tower.build_tower(2, 2).levels[1].graph, cap=1000)
