"""The invariant suite behind ``boxlab verify``: named checks returning (passed, detail)."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable

import numpy as np

from . import bassserre, baumslag, expansion, extension, metric, tower, treepartition
from .errors import BoxlabError
from .graphs import complete_graph, cycle_graph
from .groups import A_SIDE, B_SIDE, FreeProduct, cyclic, read_group_table, small_group_library

Check = Callable[[bool], tuple[bool, str]]


def check_group_library(full: bool) -> tuple[bool, str]:
    groups = small_group_library(16 if full else 8)
    for g in groups:
        g.check_associativity()
    return True, f"{len(groups)} groups satisfy the axioms"


def check_faithfulness(full: bool) -> tuple[bool, str]:
    fp = FreeProduct(cyclic(2), cyclic(3))
    kmax = 6 if full else 4
    for k in range(1, kmax + 1):
        rep = baumslag.build_sigma(fp, k)
        r = baumslag.faithfulness_report(rep, k)
        if not r.passed:
            return False, f"k={k}: {len(r.failures)} words move e incorrectly"
    return True, f"sigma(k)(g)(e) = g for k <= {kmax}"


def check_rank1_tower(full: bool) -> tuple[bool, str]:
    depth = 10 if full else 8
    tw = tower.build_tower(1, depth)
    bad = [lv.level for lv in tw.levels if not tower.is_cycle_of_length(lv.graph, 2 ** lv.level)]
    ok = not bad and len(tw.levels) == depth
    return ok, f"levels 1..{depth} are C_(2^k)" if ok else f"levels {bad} are not cycles"


def check_rank2_tower(full: bool) -> tuple[bool, str]:
    tw = tower.build_tower(2, 2)
    sizes = [lv.vertex_count for lv in tw.levels]
    girths = [lv.girth_simple for lv in tw.levels]
    ranks_ok = all(lv.graph.cycle_rank() == 1 + lv.vertex_count * (4 // 2 - 1) for lv in tw.levels)
    ok = sizes == [4, 128] and girths == [4, 4] and ranks_ok
    return ok, f"sizes {sizes}, girths {girths}, cycle ranks consistent: {ranks_ok}"


def check_wall_metric(full: bool) -> tuple[bool, str]:
    lv = tower.build_tower(2, 2).levels[1]
    r = tower.girth_scale_report(lv)
    seps = tower.wall_separation_counts(lv)
    ok = r["dw_le_d_violations"] == 0 and r["equal_below_half_girth_violations"] == 0 and set(seps) == {2}
    return ok, (f"d_W <= d violations {r['dw_le_d_violations']}, below half girth {r['equal_below_half_girth_violations']}, "
                f"walls separating into 2: {seps.count(2)}/{len(seps)}")


def check_tree_qi(full: bool) -> tuple[bool, str]:
    fp = FreeProduct(cyclic(2), cyclic(3))
    r = bassserre.qi_report(fp, 5 if full else 3)
    return r.passed, f"{r.checked} elements, {len(r.violations)} violations, basis d_T {sorted(set(r.basis_distances))}"


def check_folner(full: bool) -> tuple[bool, str]:
    fp = FreeProduct(cyclic(2), cyclic(3))
    ks = range(2, 9 if full else 7)
    ratios = []
    for k in ks:
        a = expansion.folner_witness(fp, k, A_SIDE)
        b = expansion.folner_witness(fp, k, B_SIDE, exact_cheeger=False)
        if len(a.P) + len(b.P) != a.words + 1:
            return False, f"|P_A| + |P_B| != |U(k)| + 1 at k={k}"
        ratios.append(a.ratio)
    decreasing = all(x > y for x, y in zip(ratios, ratios[1:]))
    return decreasing, "ratios " + ", ".join(map(str, ratios))


def check_cheeger(full: bool) -> tuple[bool, str]:
    expected = {"K2": (complete_graph(2), Fraction(1)), "C4": (cycle_graph(4), Fraction(1)), "C8": (cycle_graph(8), Fraction(1, 2))}
    for name, (g, h) in expected.items():
        r = expansion.cheeger_exact(g)
        if r.value != h or not expansion.cheeger_spectral(g).contains(h):
            return False, f"{name}: h = {r.value}"
    return True, "h(K2) = 1, h(C4) = 1, h(C8) = 1/2, spectral intervals contain them"


def check_monotonicity(full: bool) -> tuple[bool, str]:
    reps = expansion.monotonicity_sweep(small_group_library(16 if full else 8))
    return all(r.holds for r in reps), f"{len(reps)} (G, H, S) cases"


def check_extension(full: bool) -> tuple[bool, str]:
    out = []
    for k in ((1, 2) if full else (1,)):
        r = extension.extension_experiment(cyclic(2), cyclic(3), k)
        if not r.passed:
            return False, f"k={k}: {r.to_json()['checks']}"
        out.append(f"|G/M_{k}| = {r.order}")
    return True, ", ".join(out)


def check_embeddings(full: bool) -> tuple[bool, str]:
    lv = tower.build_tower(2, 2).levels[1]
    d = lv.graph.distance_matrix()
    sq = tower.wall_distance_matrix(lv).astype(float)
    fam = metric.gaussian_family(t=0.1, sqdist=sq)
    ds = metric.gaussian_direct_sum(d, sq, L_max=16 if full else 6)
    q = cyclic(6)
    phi = metric.gaussian_family(t=0.5, sqdist=np.array([[0, 1, 1], [1, 0, 1], [1, 1, 0]], float)).vectors()
    ind = metric.induced_embedding(q, [0, 2, 4], phi, gens=[1, 5])
    cross_ok = np.allclose(ind.cross_distances, math.sqrt(2), atol=1e-12) and ind.cross_inner_max < 1e-12
    ok = fam.min_eigenvalue >= -1e-9 and ds.upper_violations == 0 and ds.lower_violations == 0 and cross_ok
    return ok, (f"min eig {fam.min_eigenvalue:.3g}, direct-sum violations {ds.upper_violations}/{ds.lower_violations}, "
                f"induced cross distance sqrt(2): {cross_ok}")


def check_coarse_union(full: bool) -> tuple[bool, str]:
    tw = tower.build_tower(1, 10 if full else 6)
    u = metric.coarse_union([metric.MetricComponent.from_graph(lv.graph) for lv in tw.levels])
    r = metric.check_coarse_axioms(u, [1, 10, 100])
    return r.passed, f"{r.axiom1_checked} cross pairs, axiom (1) violations {r.axiom1_violations}"


def check_tree_partitions(full: bool) -> tuple[bool, str]:
    count, size = (50, 2000) if full else (5, 300)
    worst = {}
    for s in range(count):
        t = treepartition.random_bounded_tree(size, 5, s)
        dist = treepartition.tree_distance_matrix(t)
        for L in (2, 4, 8):
            dec = treepartition.cluster_decomposition(t, L)
            if not treepartition.check_decomposition(dec, dist).passed(L):
                return False, f"tree {s}, L={L}: decomposition invariants fail"
            ratio = treepartition.partition_of_unity(t, L, decomposition=dec).edge_ratios(t)
            if ratio > Fraction(40, L):
                return False, f"tree {s}, L={L}: Lipschitz ratio {ratio}"
            worst[L] = max(worst.get(L, Fraction(0)), ratio)
    return True, "max l1 ratios " + ", ".join(f"L={L}: {v}" for L, v in sorted(worst.items()))


SUITE: list[tuple[str, Check]] = [
    ("group_axioms", check_group_library),
    ("baumslag_faithfulness", check_faithfulness),
    ("tower_rank1_cycles", check_rank1_tower),
    ("tower_rank2_levels", check_rank2_tower),
    ("wall_metric", check_wall_metric),
    ("tree_quasi_isometry", check_tree_qi),
    ("folner_witness", check_folner),
    ("cheeger_examples", check_cheeger),
    ("cheeger_monotonicity", check_monotonicity),
    ("extension_lengths", check_extension),
    ("embedding_assembly", check_embeddings),
    ("coarse_union_axioms", check_coarse_union),
    ("tree_partitions", check_tree_partitions),
]


def group_table_check(path: str) -> Check:
    def run(full: bool) -> tuple[bool, str]:
        g = read_group_table(path)
        return True, f"{path}: valid group of order {g.order}"
    return run


def run_suite(checks: list[tuple[str, Check]], full: bool, out=print) -> bool:
    all_ok = True
    for name, fn in checks:
        try:
            ok, detail = fn(full)
        except BoxlabError as exc:
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        all_ok &= ok
        out(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return all_ok
