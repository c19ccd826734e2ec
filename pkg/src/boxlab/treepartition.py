"""Lipschitz partitions of unity on trees (annulus clusters) and on separated covers.

Annulus k is [0, L] for k = 0 and (kL, (k+1)L] for k >= 1. Inside annulus k,
x ~ y when (x|y) >= L(k - 1/2); in a rooted tree this means x and y share
their ancestor at depth ceil((2k-1)L/2), which is how clusters are found.
"""

from __future__ import annotations

import json
import math
import random
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InputError, VerificationError
from .graphs import LabeledMultigraph
from .metric import MetricComponent

SCHEMA_VERSION = 1


def _rooted(tree: LabeledMultigraph, base: int) -> tuple[np.ndarray, np.ndarray]:
    if tree.edge_count != tree.vertex_count - 1 or not tree.is_connected():
        raise InputError("expected a tree (connected, |E| = |V| - 1)")
    depth = np.full(tree.vertex_count, -1, dtype=np.int64)
    parent = np.full(tree.vertex_count, -1, dtype=np.int64)
    depth[base] = 0
    queue = deque([base])
    while queue:
        x = queue.popleft()
        for y in tree.neighbors(x):
            if depth[y] < 0:
                depth[y] = depth[x] + 1
                parent[y] = x
                queue.append(y)
    return depth, parent


def tree_distance_matrix(tree: LabeledMultigraph, base: int = 0) -> np.ndarray:
    """All-pairs distances, each row derived from the parent's row.

    In DFS preorder a subtree is a contiguous block, so d(v, .) = d(p, .) + 1
    outside the subtree of v and d(p, .) - 1 inside it.
    """
    n = tree.vertex_count
    _rooted(tree, base)
    order: list[int] = []
    parent = [-1] * n
    stack = [base]
    seen = [False] * n
    seen[base] = True
    while stack:
        x = stack.pop()
        order.append(x)
        for y in reversed(tree.neighbors(x)):
            if not seen[y]:
                seen[y] = True
                parent[y] = x
                stack.append(y)
    pos = np.empty(n, dtype=np.int64)
    pos[order] = np.arange(n)
    size = [1] * n
    for x in reversed(order[1:]):
        size[parent[x]] += size[x]
    out = np.empty((n, n), dtype=np.int64)  # indexed by preorder position on both axes
    depth = np.zeros(n, dtype=np.int64)
    for x in order[1:]:
        depth[pos[x]] = depth[pos[parent[x]]] + 1
    out[0] = depth
    for x in order[1:]:
        i, j = pos[x], pos[parent[x]]
        row = out[j] + 1
        row[i:i + size[x]] -= 2
        out[i] = row
    return out[np.ix_(pos, pos)]


def gromov_product(dist: np.ndarray, base: int, x: int, y: int) -> Fraction:
    """(x|y) = (|x| + |y| - d(x, y)) / 2 from a distance table."""
    return Fraction(int(dist[x, base]) + int(dist[y, base]) - int(dist[x, y]), 2)


def annulus_index(depth: np.ndarray, L: int) -> np.ndarray:
    k = -(-depth // L) - 1  # ceil(|x| / L) - 1
    return np.where(depth <= L, 0, k)


@dataclass(frozen=True, eq=False)
class ClusterDecomposition:
    L: int
    base: int
    depth: np.ndarray
    annulus: np.ndarray
    cluster: np.ndarray  # cluster id per vertex
    clusters: tuple[tuple[int, ...], ...]
    cluster_annulus: tuple[int, ...]
    neighborhoods: tuple[tuple[int, ...], ...]  # W_i = C_i(floor(L/2))

    def parity(self, i: int) -> int:
        return self.cluster_annulus[i] % 2


def ball_around(graph: LabeledMultigraph, sources: Sequence[int], radius: int) -> dict[int, int]:
    dist = {s: 0 for s in sources}
    queue = deque(sources)
    while queue:
        x = queue.popleft()
        if dist[x] == radius:
            continue
        for y in graph.neighbors(x):
            if y not in dist:
                dist[y] = dist[x] + 1
                queue.append(y)
    return dist


def cluster_decomposition(tree: LabeledMultigraph, L: int, base: int = 0) -> ClusterDecomposition:
    if L < 1 or int(L) != L:
        raise InputError("L must be an integer >= 1")
    depth, parent = _rooted(tree, base)
    ann = annulus_index(depth, L)
    n = tree.vertex_count
    # ancestor of x at depth m, by walking up; each vertex walks at most 2L steps
    key = np.empty(n, dtype=np.int64)
    for x in range(n):
        k = int(ann[x])
        if k == 0:
            key[x] = base
            continue
        m = -(-(2 * k - 1) * L // 2)
        a = x
        while depth[a] > m:
            a = int(parent[a])
        key[x] = a
    ids: dict[tuple[int, int], int] = {}
    cluster = np.empty(n, dtype=np.int64)
    members: list[list[int]] = []
    c_ann = []
    for x in range(n):
        kk = (int(ann[x]), int(key[x]))
        if kk not in ids:
            ids[kk] = len(members)
            members.append([])
            c_ann.append(kk[0])
        cluster[x] = ids[kk]
        members[ids[kk]].append(x)
    r = L // 2
    hoods = tuple(tuple(sorted(ball_around(tree, c, r))) for c in members)
    return ClusterDecomposition(L, base, depth, ann, cluster, tuple(tuple(c) for c in members), tuple(c_ann), hoods)


@dataclass
class PartitionOfUnity:
    """weights[x] maps piece index -> Fraction; pieces[i] is the support neighbourhood."""

    weights: list[dict[int, Fraction]]
    pieces: tuple[tuple[int, ...], ...]
    L: int

    def matrix(self) -> np.ndarray:
        out = np.zeros((len(self.weights), len(self.pieces)))
        for x, w in enumerate(self.weights):
            for i, v in w.items():
                out[x, i] = float(v)
        return out

    def l1(self, x: int, y: int) -> Fraction:
        wx, wy = self.weights[x], self.weights[y]
        return sum((abs(wx.get(i, 0) - wy.get(i, 0)) for i in set(wx) | set(wy)), Fraction(0))

    def edge_ratios(self, graph: LabeledMultigraph) -> Fraction:
        """max over edges of the l1 difference (edges have length 1)."""
        return max((self.l1(u, v) for u, v in graph.simple_edges()), default=Fraction(0))

    def write_csv(self, path: str | Path) -> None:
        lines = ["vertex,piece,weight"]
        for x, w in enumerate(self.weights):
            lines += [f"{x},{i},{v}" for i, v in sorted(w.items())]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def complement_distances(graph: LabeledMultigraph, piece: Sequence[int], empty_value: int) -> dict[int, int]:
    """d(x, V \\ W) for x in W, by BFS inward from the vertices just outside W."""
    inside = set(piece)
    dist: dict[int, int] = {}
    queue = deque()
    for x in piece:
        if any(y not in inside for y in graph.neighbors(x)):
            dist[x] = 1
            queue.append(x)
    if not queue:
        return {x: empty_value for x in piece}
    while queue:
        x = queue.popleft()
        for y in graph.neighbors(x):
            if y in inside and y not in dist:
                dist[y] = dist[x] + 1
                queue.append(y)
    return dist


def distance_partition(graph: LabeledMultigraph, pieces: Sequence[Sequence[int]], L: int) -> PartitionOfUnity:
    """phi_i(x) = d(x, V \\ W_i) / sum_j d(x, V \\ W_j); an empty complement counts as 4L + 1."""
    n = graph.vertex_count
    raw: list[dict[int, int]] = [dict() for _ in range(n)]
    for i, w in enumerate(pieces):
        for x, d in complement_distances(graph, w, 4 * L + 1).items():
            raw[x][i] = d
    weights = []
    for x in range(n):
        total = sum(raw[x].values())
        if total <= 0:
            raise VerificationError(f"vertex {x} has zero denominator: no neighbourhood contains it", x)
        weights.append({i: Fraction(d, total) for i, d in raw[x].items()})
    return PartitionOfUnity(weights, tuple(tuple(p) for p in pieces), L)


def partition_of_unity(tree: LabeledMultigraph, L: int, base: int = 0, decomposition: ClusterDecomposition | None = None) -> PartitionOfUnity:
    dec = cluster_decomposition(tree, L, base) if decomposition is None else decomposition
    return distance_partition(tree, dec.neighborhoods, L)


@dataclass
class DecompositionCheck:
    max_cluster_diam: int
    min_same_annulus_gap: float  # inf when no annulus has two clusters
    max_support_diam: int
    max_cover_multiplicity: int
    parity_overlaps: int

    def passed(self, L: int) -> bool:
        return (self.max_cluster_diam <= 3 * L and self.min_same_annulus_gap >= L
                and self.max_support_diam <= 4 * L and self.max_cover_multiplicity <= 2 and self.parity_overlaps == 0)


def _diam(dist: np.ndarray, S: Sequence[int]) -> int:
    idx = np.asarray(S)
    return int(dist[np.ix_(idx, idx)].max())


def check_decomposition(dec: ClusterDecomposition, dist: np.ndarray) -> DecompositionCheck:
    diam_c = max(_diam(dist, c) for c in dec.clusters)
    gap = math.inf
    for k in np.unique(dec.annulus):
        A = np.flatnonzero(dec.annulus == k)
        cl = dec.cluster[A]
        if len(np.unique(cl)) < 2:
            continue
        sub = dist[np.ix_(A, A)]
        gap = min(gap, int(sub[cl[:, None] != cl[None, :]].min()))
    diam_w = max(_diam(dist, w) for w in dec.neighborhoods)
    mult = np.zeros(len(dec.cluster), dtype=np.int64)
    overlaps = 0
    for p in (0, 1):
        seen = np.zeros(len(dec.cluster), dtype=np.int64)
        for i, w in enumerate(dec.neighborhoods):
            if dec.parity(i) == p:
                seen[list(w)] += 1
        overlaps += int(np.count_nonzero(seen > 1))
        mult += seen
    return DecompositionCheck(diam_c, gap, diam_w, int(mult.max()), overlaps)


def l1_on_pairs(pou: PartitionOfUnity, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Float l1 differences for many pairs (each vertex has at most a few active pieces)."""
    w = pou.matrix()
    return np.abs(w[xs] - w[ys]).sum(axis=1)


@dataclass
class TreeCertificate:
    L: int
    C: int
    max_l1_ratio: Fraction  # max over edges of the l1 difference, i.e. the Lipschitz constant
    max_l1_within_R: Fraction
    verified_pairs: int
    max_support_diam: int

    def to_json(self) -> dict:
        return {
            "L": self.L, "C": self.C, "max_l1_ratio": str(self.max_l1_ratio),
            "max_l1_within_R": str(self.max_l1_within_R), "verified_pairs": self.verified_pairs,
            "max_support_diam": self.max_support_diam,
        }


def certify_tree(tree: LabeledMultigraph, L: int, R: int, eps: Fraction, dist: np.ndarray | None = None) -> TreeCertificate:
    dist = tree_distance_matrix(tree) if dist is None else dist
    pou = partition_of_unity(tree, L)
    support = max(_diam(dist, p) for p in pou.pieces)
    if support > 4 * L:
        raise VerificationError(f"support diameter {support} exceeds 4L = {4 * L}")
    xs, ys = np.nonzero((dist <= R) & (dist > 0))
    keep = xs < ys
    xs, ys = xs[keep], ys[keep]
    approx = l1_on_pairs(pou, xs, ys)
    # exact recheck of every pair the float sweep cannot clear with a margin
    worst = Fraction(0)
    for j in np.flatnonzero(approx > float(eps) - 1e-9):
        v = pou.l1(int(xs[j]), int(ys[j]))
        if v > eps:
            raise VerificationError(f"pair {(int(xs[j]), int(ys[j]))} has l1 difference {v} > {eps}", (int(xs[j]), int(ys[j])))
        worst = max(worst, v)
    if len(approx):
        j = int(np.argmax(approx))
        worst = max(worst, pou.l1(int(xs[j]), int(ys[j])))
    ratio = pou.edge_ratios(tree)
    return TreeCertificate(L, 4 * L, ratio, worst, len(xs), support)


def equi_exact_certificate(trees: Sequence[LabeledMultigraph], R: int, eps: Fraction | float) -> dict:
    """L = ceil(40R/eps) works for every tree at once; C = 4L bounds every support."""
    eps = Fraction(eps).limit_denominator(10**9) if not isinstance(eps, Fraction) else eps
    if R <= 0 or eps <= 0:
        raise InputError("R and eps must be positive")
    L = math.ceil(40 * R / eps)
    certs = [certify_tree(t, L, R, eps) for t in trees]
    return {
        "schema_version": SCHEMA_VERSION, "R": R, "epsilon": str(eps), "L": L, "C": 4 * L,
        "trees": [c.to_json() for c in certs],
    }


def write_certificate(cert: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(cert, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n")


def random_bounded_tree(n: int, max_degree: int, seed: int) -> LabeledMultigraph:
    """Random recursive tree: each new vertex attaches to a uniform vertex with spare degree."""
    if n < 1 or max_degree < 2 and n > 2:
        raise InputError("need n >= 1 and max_degree >= 2")
    rng = random.Random(seed)
    deg = [0] * n
    open_: list[int] = [0]
    edges = []
    for v in range(1, n):
        i = rng.randrange(len(open_))
        u = open_[i]
        edges.append((u, v, 0))
        deg[u] += 1
        deg[v] = 1
        if deg[u] >= max_degree:
            open_[i] = open_[-1]
            open_.pop()
        if max_degree > 1:
            open_.append(v)
    return LabeledMultigraph.from_edges(n, edges)


def separated_cover_partition(
    space: MetricComponent,
    graph: LabeledMultigraph,
    core: Sequence[int],
    pieces: Sequence[Sequence[int]],
    L: int,
) -> PartitionOfUnity:
    """Pieces are core(r) and (U \\ core)(r) with r = floor((L-1)/2); weights by distance to complement."""
    d = space.dist
    core_set = set(core)
    rems = [sorted(set(p) - core_set) for p in pieces]
    rems = [r for r in rems if r]
    for i in range(len(rems)):
        for j in range(i + 1, len(rems)):
            gap = int(d[np.ix_(rems[i], rems[j])].min())
            if gap < L:
                raise InputError(f"pieces {i} and {j} minus the core are only {gap} apart (need >= {L})")
    covered = core_set.union(*map(set, rems)) if rems else core_set
    if len(covered) != space.point_count:
        missing = sorted(set(range(space.point_count)) - covered)[:5]
        raise InputError(f"core and pieces do not cover the space (missing {missing})")
    r = (L - 1) // 2
    hoods = []
    if core_set:
        hoods.append(tuple(sorted(ball_around(graph, sorted(core_set), r))))
    hoods += [tuple(sorted(ball_around(graph, rem, r))) for rem in rems]
    return distance_partition(graph, hoods, L)
