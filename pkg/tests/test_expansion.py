import itertools
from fractions import Fraction

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from boxlab import expansion
from boxlab.errors import InputError, VerificationError
from boxlab.graphs import LabeledMultigraph, cayley_multigraph, complete_graph, cycle_graph, path_graph
from boxlab.groups import A_SIDE, B_SIDE, FreeProduct, cyclic, small_group_library

FP = FreeProduct(cyclic(2), cyclic(3))


def brute_cheeger(g: LabeledMultigraph) -> Fraction:
    n = g.vertex_count
    best = None
    for size in range(1, n // 2 + 1):
        for subset in itertools.combinations(range(n), size):
            s = set(subset)
            b = sum(1 for u, v, _ in g.edges if (u in s) != (v in s))
            r = Fraction(b, size)
            best = r if best is None or r < best else best
    return best


@pytest.mark.parametrize("g, h", [
    (complete_graph(2), Fraction(1)),
    (cycle_graph(4), Fraction(1)),
    (cycle_graph(8), Fraction(1, 2)),
    (complete_graph(6), Fraction(3)),
    (path_graph(6), Fraction(1, 3)),
])
def test_known_cheeger_constants(g, h):
    r = expansion.cheeger_exact(g)
    assert r.value == h == brute_cheeger(g)
    assert Fraction(expansion.boundary_size(g, r.witness_set), len(r.witness_set)) == h


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 11), st.floats(0.15, 0.8), st.integers(0, 10**6))
def test_exact_matches_brute_force(n, p, seed):
    h = nx.gnp_random_graph(n, p, seed=seed)
    g = LabeledMultigraph.from_edges(n, [(u, v, 0) for u, v in h.edges] + [(0, 0, 1)])
    assert expansion.cheeger_exact(g).value == brute_cheeger(g)


def small_cayley_graphs(max_order):
    for grp in small_group_library(max_order):
        if grp.order < 2:
            continue
        for gens in (expansion.greedy_generating_set(grp), grp.non_identity()):
            yield cayley_multigraph(grp, grp.symmetric_closure(gens))


def test_spectral_interval_contains_exact():
    # the 17..24 vertex cases run in the acceptance suite
    graphs = list(small_cayley_graphs(16)) + [cycle_graph(n) for n in range(3, 17)] + [complete_graph(n) for n in range(2, 12)]
    for g in graphs:
        exact = expansion.cheeger_exact(g).value
        spec = expansion.cheeger_spectral(g)
        assert spec.contains(exact), (g.vertex_count, exact, spec.interval)


def test_spectral_gap_of_cycle():
    _, lam = expansion.normalized_gap(cycle_graph(10))
    assert lam == pytest.approx(1 - np.cos(2 * np.pi / 10), abs=1e-12)


def test_sparse_path_agrees_with_dense():
    g = cycle_graph(3001)
    _, lam = expansion.normalized_gap(g)
    assert lam == pytest.approx(1 - np.cos(2 * np.pi / 3001), rel=1e-6)


def test_cheeger_input_errors():
    with pytest.raises(InputError):
        expansion.cheeger_exact(cycle_graph(25))
    with pytest.raises(InputError):
        expansion.cheeger_spectral(path_graph(4))
    with pytest.raises(InputError):
        expansion.CheegerResult(value=Fraction(1)).contains(1)


def test_monotonicity_sweep():
    reps = expansion.monotonicity_sweep(small_group_library(8))
    assert reps and all(r.holds for r in reps)


def test_coset_graph_shape():
    g = cyclic(6)
    quotient, cosets = expansion.coset_schreier_graph(g, [0, 3], [1, 5])
    assert quotient.vertex_count == 3 and sorted(map(sorted, cosets)) == [[0, 3], [1, 4], [2, 5]]
    with pytest.raises(InputError):
        expansion.coset_schreier_graph(g, [0, 1], [1, 5])


def test_monotonicity_violation_is_reported():
    with pytest.raises(VerificationError):
        expansion.quotient_monotonicity_check(cyclic(4), [0, 2], [1, 3], h_group=Fraction(100))


P_SIZES = {2: 4, 3: 6, 4: 10, 5: 14, 6: 22, 7: 30, 8: 46}


@pytest.mark.parametrize("k", range(2, 9))
def test_folner_witness(k):
    a = expansion.folner_witness(FP, k, A_SIDE)
    b = expansion.folner_witness(FP, k, B_SIDE, exact_cheeger=False)
    assert len(a.P) == P_SIZES[k]
    assert a.boundary <= a.generator_count == 4 and b.boundary <= 4
    assert len(a.P) + len(b.P) == a.words + 1
    if a.h_exact is not None:
        assert a.h_exact <= a.ratio


def test_folner_ratio_decreases():
    ratios = [expansion.folner_witness(FP, k, exact_cheeger=False).ratio for k in range(2, 9)]
    assert all(x > y for x, y in zip(ratios, ratios[1:]))
    assert ratios[-1] < Fraction(1, 20)


def test_folner_table_csv(tmp_path):
    rows = expansion.folner_table(FP, [2, 3])
    expansion.write_folner_csv(rows, tmp_path / "f.csv")
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert lines[0] == "k,|U(k)|,|P|,boundary,ratio,h_upper"
    assert lines[1].startswith("2,8,4,2,1/2")
