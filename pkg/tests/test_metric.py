import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from boxlab import metric, tower
from boxlab.errors import InputError, VerificationError
from boxlab.graphs import cycle_graph, path_graph
from boxlab.groups import cyclic, dihedral, symmetric


@pytest.mark.parametrize("d, msg", [
    (np.array([[0, 1], [2, 0]]), "symmetric"),
    (np.array([[1, 1], [1, 0]]), "diagonal"),
    (np.array([[0, -1], [-1, 0]]), "negative"),
    (np.array([[0, 1, 5], [1, 0, 1], [5, 1, 0]]), "triangle"),
])
def test_component_validation(d, msg):
    with pytest.raises(InputError, match=msg):
        metric.MetricComponent(d)


def rank1_union(depth):
    tw = tower.build_tower(1, depth)
    return metric.coarse_union([metric.MetricComponent.from_graph(lv.graph) for lv in tw.levels])


def test_offsets_on_cycles():
    u = rank1_union(10)
    assert u.offsets == tuple(3 * 2 ** (n - 1) for n in range(1, 11))
    assert u.offsets[-1] == 1536


def test_axioms_on_cycle_union():
    r = metric.check_coarse_axioms(rank1_union(10), [1, 10, 100])
    assert r.passed and r.axiom1_violations == 0
    assert r.axiom1_checked == sum(2 ** n * 2 ** m for n in range(1, 11) for m in range(1, 11) if n != m)
    assert r.radii[1]["nonempty"] == []


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(1, 7), min_size=1, max_size=4))
def test_union_is_a_metric(sizes):
    comps = [metric.MetricComponent.from_graph(path_graph(n) if n < 3 else cycle_graph(n)) for n in sizes]
    u = metric.coarse_union(comps)
    d = u.distance_matrix()
    metric.MetricComponent(d)  # symmetric, zero diagonal, triangle inequality
    assert d.shape[0] == u.size
    assert metric.check_coarse_axioms(u, [1, 5, 50]).passed


def test_hilbert_union_separates_levels():
    u = rank1_union(4)
    tables = [np.eye(c.point_count) for c in u.components]
    emb = metric.hilbert_union_embedding(u, tables)
    assert emb[0].shape[1] == sum(t.shape[1] for t in tables) + 1
    gap = np.linalg.norm(emb[0][0] - emb[2][0])
    assert gap >= abs(2 - 8)


def brute_profile(d, e):
    ts = sorted(set(d.ravel().tolist()))
    lo = [min(ev for dv, ev in zip(d.ravel(), e.ravel()) if dv >= t) for t in ts]
    hi = [max(ev for dv, ev in zip(d.ravel(), e.ravel()) if dv <= t) for t in ts]
    return ts, lo, hi


@given(arrays(np.int64, 20, elements=st.integers(0, 6)), arrays(float, 20, elements=st.floats(0, 10)))
def test_profile_matches_brute_force(d, e):
    p = metric.profile_from_pairs(d, e)
    ts, lo, hi = brute_profile(d, e)
    assert p.t.tolist() == ts
    assert p.rho_minus.tolist() == lo and p.rho_plus.tolist() == hi


def test_profile_of_isometry():
    d = cycle_graph(6).distance_matrix()
    vecs = metric.gaussian_family(t=0.3, sqdist=d.astype(float)).vectors()
    p = metric.profile(vecs, metric.MetricComponent(d))
    assert (p.rho_minus <= p.rho_plus + 1e-12).all()
    with pytest.raises(InputError):
        metric.profile(vecs[:3], metric.MetricComponent(d))


@settings(max_examples=40, deadline=None)
@given(arrays(float, (8, 3), elements=st.floats(-5, 5)), st.floats(0.01, 5))
def test_gaussian_gram_is_psd(points, t):
    fam = metric.gaussian_family(points, t=t)
    assert fam.min_eigenvalue >= -metric.PSD_TOL
    assert np.allclose(np.diagonal(fam.gram), 1)
    v = fam.vectors()
    assert np.allclose(np.linalg.norm(v, axis=1), 1, atol=1e-12)


def test_family_vectors_realise_distances():
    sq = tower.wall_distance_matrix(tower.build_tower(2, 2).levels[1]).astype(float)
    fam = metric.gaussian_family(t=0.2, sqdist=sq)
    v = fam.vectors()
    assert np.allclose(metric.pair_distances(v), fam.distances, atol=1e-6)


def test_gaussian_family_input_errors():
    with pytest.raises(InputError):
        metric.gaussian_family(t=0)
    with pytest.raises(InputError):
        metric.gaussian_family(t=1)
    with pytest.raises(VerificationError):
        metric.gaussian_family(t=1, sqdist=np.array([[1.0, 0.0], [0.0, 0.0]]))


def test_direct_sum_bounds_on_tower_level():
    lv = tower.build_tower(2, 2).levels[1]
    d = lv.graph.distance_matrix()
    ds = metric.gaussian_direct_sum(d, tower.wall_distance_matrix(lv).astype(float), L_max=8)
    assert ds.upper_violations == 0 and ds.lower_violations == 0
    e = metric.pair_distances(ds.vectors)
    assert (e <= d + 1 + 1e-9).all()
    assert ds.M_running == sorted(ds.M_running)
    assert ds.staircase(-1) == 0


def test_direct_sum_contract_breach():
    d = cycle_graph(8).distance_matrix().astype(float)
    fam = metric.gaussian_family(t=50.0, sqdist=d ** 2)
    with pytest.raises(VerificationError) as exc:
        metric.assemble_direct_sum(d, [fam])
    assert exc.value.witness[0] == 1


def order_two_subgroup(g):
    return next(sorted(h) for h in g.subgroups() if len(h) == 2)


@pytest.mark.parametrize("group, sub", [
    (cyclic(6), [0, 2, 4]),
    (dihedral(4), order_two_subgroup(dihedral(4))),
    (symmetric(3), order_two_subgroup(symmetric(3))),
])
def test_induced_embedding(group, sub):
    h = sorted(sub)
    phi = np.eye(len(h))
    ind = metric.induced_embedding(group, h, phi)
    assert ind.vectors.shape == (group.order, len(h) * group.order // len(h))
    assert ind.same_coset_max_error < 1e-12 and ind.cross_inner_max < 1e-12
    assert np.allclose(ind.cross_distances, math.sqrt(2), atol=1e-12)
    assert np.allclose(np.linalg.norm(ind.vectors, axis=1), 1)


def test_induced_section_checks():
    g = cyclic(6)
    with pytest.raises(InputError):
        metric.induced_embedding(g, [0, 3], np.eye(2), section=[0, 0, 1])
    with pytest.raises(InputError):
        metric.induced_embedding(g, [0, 1], np.eye(2))
    _, cosets = metric.left_cosets(g, [0, 3])
    assert metric.minimal_section(g, cosets, [1, 5]) == [0, 1, 5]


def path_partition(n, width):
    """Tent-shaped weights on a path, overlapping pieces of the given width."""
    centers = list(range(0, n, width))
    raw = np.array([[max(0.0, width - abs(x - c)) for c in centers] for x in range(n)])
    return raw / raw.sum(axis=1, keepdims=True)


def test_glue_embeddings_bound():
    n, R = 40, 2
    d = path_graph(n).distance_matrix()
    w = path_partition(n, 8)
    locals_ = []
    for i in range(w.shape[1]):
        dom = list(range(n))
        xi = np.zeros((n, 2))
        ang = np.arange(n) * 0.05 + i
        xi[:, 0], xi[:, 1] = np.cos(ang), np.sin(ang)
        locals_.append((dom, xi))
    r = metric.glue_embeddings(w, locals_, d, R)
    assert r.passed and r.max_norm_error <= 1e-12
    assert r.max_pair <= r.eps_local + math.sqrt(r.eps_partition) + 1e-12


def test_glue_input_errors():
    d = path_graph(4).distance_matrix()
    w = np.array([[1.0, 0], [0.5, 0.5], [0, 1], [0, 1]])
    good = [(range(4), np.tile([[1.0]], (4, 1))), (range(4), np.tile([[1.0]], (4, 1)))]
    with pytest.raises(InputError):
        metric.glue_embeddings(w * 2, good, d, 1)
    with pytest.raises(InputError):
        metric.glue_embeddings(w, good[:1], d, 1)
    with pytest.raises(InputError):
        metric.glue_embeddings(w, [(range(2), np.ones((2, 1))), good[1]], d, 1)


def test_embedding_csv(tmp_path):
    metric.write_embedding_csv([np.eye(2), np.ones((1, 3))], tmp_path / "e.csv")
    lines = (tmp_path / "e.csv").read_text().splitlines()
    assert lines[0] == "component,point,coord_0,coord_1,coord_2"
    assert lines[1] == "1,0,1,0," and lines[3] == "2,0,1,1,1"
