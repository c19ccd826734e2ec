"""The square-quotient tower of a free group, realised by iterated F2-homology covers.

Level 1 is the Cayley multigraph of (Z/2)^rank on the basis letters. Each
further level is the maximal elementary-abelian-2 cover of the previous one,
which is the quotient by the subgroup generated by squares of the previous
kernel. Edge labels are basis-letter indices at every level, so each level
is also the right regular action of the free group on its quotient.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import CapExceeded, InputError, VerificationError
from .graphs import UNBOUNDED, LabeledMultigraph, cayley_multigraph, girth, size_cap
from .groups import cyclic, direct_product, FiniteGroupTable

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TowerLevel:
    graph: LabeledMultigraph
    level: int
    base_edge_count: int = 0
    projection: np.ndarray | None = field(default=None, repr=False)
    signatures: np.ndarray | None = field(default=None, repr=False)  # bool, vertices x base edges

    @cached_property
    def girth_simple(self) -> float:
        return girth(self.graph)

    @property
    def vertex_count(self) -> int:
        return self.graph.vertex_count

    @property
    def has_walls(self) -> bool:
        return self.signatures is not None

    def wall(self, base_edge: int) -> np.ndarray:
        if self.projection is None:
            raise InputError("level 1 has no wall structure")
        return np.flatnonzero(self.projection == base_edge)


@dataclass
class Tower:
    rank: int
    levels: list[TowerLevel]
    truncated: bool = False
    truncation_reason: str = ""


def free_quotient_level_one(rank: int) -> LabeledMultigraph:
    """Cayley multigraph of (Z/2)^rank with the basis letters as generators."""
    if rank < 1:
        raise InputError("rank must be >= 1")
    z2 = cyclic(2)
    g: FiniteGroupTable = z2
    for _ in range(rank - 1):
        g = direct_product(g, z2)
    # element x*2 + bit packing: the j-th letter flips the j-th binary digit from the top
    letters = [1 << (rank - 1 - j) for j in range(rank)]
    return cayley_multigraph(g, letters)


def homology_cover(base: LabeledMultigraph, cap: int | None = None, level: int = 0) -> TowerLevel:
    """Maximal F2-homology cover with projection and wall signatures.

    Cover vertex ``(v, c)`` has index ``c * |V| + v`` where ``c`` is a bitmask
    over the non-tree edges of the BFS spanning tree from vertex 0. Cover
    edge ``c * |E| + e`` lifts base edge ``e`` at sheet ``c``.
    """
    cap = size_cap() if cap is None else cap
    if not base.is_connected():
        raise InputError("homology cover needs a connected base graph")
    n, m = base.vertex_count, base.edge_count
    parent_edge, order = base.bfs_tree(0)
    tree = set(int(e) for e in parent_edge if e >= 0)
    non_tree = [e for e in range(m) if e not in tree]
    d = len(non_tree)
    if d > 62 or n * (1 << d) > cap:
        raise CapExceeded(f"cover would have {n} * 2^{d} vertices, above cap {cap}")
    sheets = 1 << d
    flip = np.zeros(m, dtype=np.int64)
    for j, e in enumerate(non_tree):
        flip[e] = 1 << j

    us = np.array([e[0] for e in base.edges], dtype=np.int64)
    vs = np.array([e[1] for e in base.edges], dtype=np.int64)
    labels = [e[2] for e in base.edges]
    c = np.arange(sheets, dtype=np.int64)[:, None]
    cu = (c * n + us[None, :]).ravel()
    cv = ((c ^ flip[None, :]) * n + vs[None, :]).ravel()
    edges = tuple(zip(cu.tolist(), cv.tolist(), labels * sheets))
    graph = LabeledMultigraph(n * sheets, edges)
    projection = np.tile(np.arange(m, dtype=np.int64), sheets)

    # crossing parity of every base edge along the tree path from vertex 0
    tree_parity = np.zeros((n, m), dtype=bool)
    for v in order[1:]:
        e = int(parent_edge[v])
        u = base.edges[e][0] if base.edges[e][1] == v else base.edges[e][1]
        tree_parity[v] = tree_parity[u]
        tree_parity[v, e] ^= True
    cycles = np.zeros((d, m), dtype=bool)
    for j, e in enumerate(non_tree):
        u, v, _ = base.edges[e]
        cycles[j] = tree_parity[u] ^ tree_parity[v]
        cycles[j, e] ^= True
    bits = ((np.arange(sheets)[:, None] >> np.arange(d)[None, :]) & 1).astype(np.int64)
    sheet_sig = (bits @ cycles.astype(np.int64)) % 2 if d else np.zeros((sheets, m), dtype=np.int64)
    signatures = (sheet_sig.astype(bool)[:, None, :] ^ tree_parity[None, :, :]).reshape(n * sheets, m)

    # each cover edge must flip exactly the coordinate of its base edge
    diff = signatures[cu] ^ signatures[cv]
    expected = np.zeros_like(diff)
    expected[np.arange(len(projection)), projection] = True
    if not np.array_equal(diff, expected):
        bad = int(np.flatnonzero((diff != expected).any(axis=1))[0])
        raise VerificationError(f"signature inconsistency on cover edge {bad}", bad)
    return TowerLevel(graph, level, m, projection, signatures)


def build_tower(rank: int, depth: int, size_cap_: int | None = None) -> Tower:
    """Levels 1..depth, stopping early (truncated) when the next cover exceeds the cap."""
    cap = size_cap() if size_cap_ is None else size_cap_
    g1 = free_quotient_level_one(rank)
    levels = [TowerLevel(g1, 1)]
    tower = Tower(rank, levels)
    while len(levels) < depth:
        prev = levels[-1].graph
        try:
            levels.append(homology_cover(prev, cap, level=len(levels) + 1))
        except CapExceeded as exc:
            tower.truncated = True
            tower.truncation_reason = str(exc)
            log.info("tower truncated at level %d: %s", len(levels) + 1, exc)
            break
    return tower


def next_level_size(level: TowerLevel) -> int:
    g = level.graph
    return g.vertex_count * 2 ** g.cycle_rank()


def wall_metric(level: TowerLevel, x: int, y: int) -> int:
    if level.signatures is None:
        raise InputError("no wall structure on level 1")
    return int(np.count_nonzero(level.signatures[x] ^ level.signatures[y]))


def wall_distance_matrix(level: TowerLevel) -> np.ndarray:
    if level.signatures is None:
        raise InputError("no wall structure on level 1")
    s = level.signatures.astype(np.int64)
    ones = s.sum(axis=1)
    return ones[:, None] + ones[None, :] - 2 * (s @ s.T)


def wall_embedding(level: TowerLevel) -> np.ndarray:
    """Vertex -> 0/1 signature vector; squared Euclidean distance equals the wall metric."""
    if level.signatures is None:
        raise InputError("no wall structure on level 1")
    return level.signatures.astype(float)


def wall_separation_counts(level: TowerLevel) -> list[int]:
    """Number of components left after deleting each wall's edges."""
    if level.projection is None:
        raise InputError("no wall structure on level 1")
    out = []
    for e in range(level.base_edge_count):
        removed = set(level.wall(e).tolist())
        out.append(int(level.graph.components(removed).max()) + 1)
    return out


def is_cycle_of_length(graph: LabeledMultigraph, n: int) -> bool:
    """Exact isomorphism with Cay(Z/n, {1}): one label, a single n-cycle, i -> i+1."""
    if graph.vertex_count != n or graph.edge_count != n:
        return False
    perms = graph.label_permutations()
    if len(perms) != 1:
        return False
    (p,) = perms.values()
    # walk the permutation from 0 and read off the isomorphism onto Z/n
    phi = np.full(n, -1, dtype=np.int64)
    x = 0
    for i in range(n):
        if phi[x] >= 0:
            return False
        phi[x] = i
        x = int(p[x])
    if x != 0:
        return False
    return all((phi[v] - phi[u]) % n == 1 for u, v, _ in graph.edges)


def write_signatures_csv(level: TowerLevel, path: str | Path) -> None:
    if level.signatures is None:
        raise InputError("no wall structure on level 1")
    m = level.base_edge_count
    lines = ["vertex," + ",".join(f"bit_{i}" for i in range(m))]
    for v, row in enumerate(level.signatures):
        lines.append(f"{v}," + ",".join("1" if b else "0" for b in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def girth_scale_report(level: TowerLevel, dist: np.ndarray | None = None) -> dict:
    """Evaluate the wall/graph metric comparisons on every pair of a level."""
    d = level.graph.distance_matrix() if dist is None else dist
    dw = wall_distance_matrix(level)
    g = level.girth_simple
    below = d < (g / 2 if g != UNBOUNDED else np.inf)
    iff_scale = g if g != UNBOUNDED else np.inf
    iff_fail = int(np.count_nonzero((d <= iff_scale) != (dw <= iff_scale)))
    return {
        "level": level.level,
        "vertices": level.vertex_count,
        "girth": g,
        "dw_le_d_violations": int(np.count_nonzero(dw > d)),
        "equal_below_half_girth_violations": int(np.count_nonzero(below & (dw != d))),
        "girth_iff_violations": iff_fail,
        "equal_pairs": int(np.count_nonzero(dw == d)),
        "pairs": int(d.size),
    }
