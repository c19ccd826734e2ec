"""Labelled multigraphs shared by the Cayley, Schreier, tower and tree constructions."""

from __future__ import annotations

import math
import os
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .errors import CapExceeded, InputError
from .groups import FiniteGroupTable

DEFAULT_CAP = 1_000_000

UNBOUNDED = math.inf


def size_cap(default: int = DEFAULT_CAP) -> int:
    """Size cap, overridable by the ``BOXLAB_CAP`` environment variable."""
    raw = os.environ.get("BOXLAB_CAP")
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"BOXLAB_CAP must be an integer, got {raw!r}") from None


@dataclass(frozen=True, eq=False)
class LabeledMultigraph:
    """Undirected multigraph; each edge is stored once as ``(u, v, label)``.

    Parallel edges and loops are allowed. A loop adds 2 to the degree of its
    vertex and 1 to the edge count.
    """

    vertex_count: int
    edges: tuple[tuple[int, int, Hashable], ...]
    adjacency: tuple[tuple[tuple[int, int], ...], ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        n = self.vertex_count
        adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for idx, (u, v, _) in enumerate(self.edges):
            if not (0 <= u < n and 0 <= v < n):
                raise InputError(f"edge {idx} endpoint out of range")
            adj[u].append((v, idx))
            adj[v].append((u, idx))
        object.__setattr__(self, "adjacency", tuple(tuple(a) for a in adj))

    @classmethod
    def from_edges(cls, n: int, edges: Sequence[tuple[int, int, Hashable]]) -> "LabeledMultigraph":
        return cls(n, tuple((int(u), int(v), lab) for u, v, lab in edges))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def degrees(self) -> list[int]:
        return [len(a) for a in self.adjacency]

    def regular_degree(self) -> int | None:
        degs = set(self.degrees())
        return degs.pop() if len(degs) == 1 else None

    def cycle_rank(self) -> int:
        return self.edge_count - self.vertex_count + self.component_count()

    def neighbors(self, v: int) -> list[int]:
        return [w for w, _ in self.adjacency[v]]

    def bfs(self, source: int, allowed: np.ndarray | None = None) -> np.ndarray:
        dist = np.full(self.vertex_count, -1, dtype=np.int64)
        dist[source] = 0
        queue = deque([source])
        adj = self.adjacency
        while queue:
            x = queue.popleft()
            for y, _ in adj[x]:
                if dist[y] < 0 and (allowed is None or allowed[y]):
                    dist[y] = dist[x] + 1
                    queue.append(y)
        return dist

    def bfs_tree(self, source: int = 0) -> tuple[np.ndarray, list[int]]:
        """Parent-edge array and visit order of the BFS tree (edges in index order)."""
        parent_edge = np.full(self.vertex_count, -1, dtype=np.int64)
        seen = np.zeros(self.vertex_count, dtype=bool)
        seen[source] = True
        order = [source]
        queue = deque([source])
        while queue:
            x = queue.popleft()
            for y, idx in sorted(self.adjacency[x], key=lambda t: t[1]):
                if not seen[y]:
                    seen[y] = True
                    parent_edge[y] = idx
                    order.append(y)
                    queue.append(y)
        return parent_edge, order

    def components(self, removed_edges: set[int] | None = None) -> np.ndarray:
        comp = np.full(self.vertex_count, -1, dtype=np.int64)
        c = 0
        for s in range(self.vertex_count):
            if comp[s] >= 0:
                continue
            comp[s] = c
            stack = [s]
            while stack:
                x = stack.pop()
                for y, idx in self.adjacency[x]:
                    if comp[y] < 0 and (removed_edges is None or idx not in removed_edges):
                        comp[y] = c
                        stack.append(y)
            c += 1
        return comp

    def component_count(self) -> int:
        if self.vertex_count == 0:
            return 0
        return int(self.components().max()) + 1

    def is_connected(self) -> bool:
        return self.vertex_count > 0 and self.component_count() == 1

    def sparse_adjacency(self) -> csr_matrix:
        """Adjacency matrix with multiplicities; a loop contributes 2 on the diagonal."""
        n = self.vertex_count
        if not self.edges:
            return csr_matrix((n, n))
        u = np.array([e[0] for e in self.edges])
        v = np.array([e[1] for e in self.edges])
        rows = np.concatenate([u, v])
        cols = np.concatenate([v, u])
        return csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))

    def distance_matrix(self) -> np.ndarray:
        """All-pairs shortest path lengths as int64; -1 for disconnected pairs."""
        d = shortest_path(self.sparse_adjacency(), method="D", unweighted=True, directed=False)
        out = np.where(np.isinf(d), -1, d).astype(np.int64)
        return out

    def simple_edges(self) -> set[tuple[int, int]]:
        return {(min(u, v), max(u, v)) for u, v, _ in self.edges if u != v}

    def label_permutations(self) -> dict[Hashable, np.ndarray]:
        """For graphs where every label is a permutation ``u -> v``, return those permutations."""
        perms: dict[Hashable, np.ndarray] = {}
        for u, v, lab in self.edges:
            p = perms.setdefault(lab, np.full(self.vertex_count, -1, dtype=np.int64))
            if p[u] >= 0:
                raise InputError(f"label {lab!r} has two edges out of vertex {u}")
            p[u] = v
        for lab, p in perms.items():
            if (p < 0).any() or len(np.unique(p)) != self.vertex_count:
                raise InputError(f"label {lab!r} is not a permutation of the vertices")
        return perms

    def to_text(self) -> str:
        lines = [f"graph {self.vertex_count} {self.edge_count}"]
        lines += [f"{u} {v} {lab}" for u, v, lab in self.edges]
        return "\n".join(lines) + "\n"

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8", newline="\n")


def parse_graph(text: str) -> LabeledMultigraph:
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0][0] != "graph":
        raise InputError("graph file must start with 'graph <vertex_count> <edge_count>'")
    n, m = int(lines[0][1]), int(lines[0][2])
    if len(lines) - 1 != m:
        raise InputError(f"expected {m} edge lines, found {len(lines) - 1}")
    edges = []
    for parts in lines[1:]:
        lab: Hashable = parts[2] if len(parts) > 2 else ""
        if isinstance(lab, str) and lab.lstrip("-").isdigit():
            lab = int(lab)
        edges.append((int(parts[0]), int(parts[1]), lab))
    return LabeledMultigraph.from_edges(n, edges)


def read_graph(path: str | Path) -> LabeledMultigraph:
    return parse_graph(Path(path).read_text(encoding="utf-8"))


def inverse_classes(group: FiniteGroupTable, gens: Sequence[int]) -> list[int]:
    """One representative per class {s, s^-1}, in order of first appearance; identity dropped."""
    reps: list[int] = []
    for s in gens:
        if s == group.identity:
            continue
        if s not in reps and group.i(s) not in reps:
            reps.append(s)
    return reps


def cayley_multigraph(group: FiniteGroupTable, gens: Sequence[int], side: str = "right") -> LabeledMultigraph:
    """Cayley multigraph: for each class {s, s^-1} one edge ``v -> v*s`` per vertex.

    Edge labels are class indices. ``side="left"`` uses ``v -> s*v`` instead.
    """
    gset = set(gens)
    if any(group.i(s) not in gset for s in gens):
        raise InputError("generating set is not symmetric")
    reps = inverse_classes(group, gens)
    edges = []
    for j, s in enumerate(reps):
        for v in range(group.order):
            w = group.m(v, s) if side == "right" else group.m(s, v)
            edges.append((v, w, j))
    return LabeledMultigraph.from_edges(group.order, edges)


def girth(graph: LabeledMultigraph) -> float:
    """Shortest cycle of the simple underlying graph (loops and parallel edges ignored).

    Returns ``UNBOUNDED`` (``math.inf``) for forests.
    """
    n = graph.vertex_count
    nbrs: list[list[int]] = [[] for _ in range(n)]
    for u, v in sorted(graph.simple_edges()):
        nbrs[u].append(v)
        nbrs[v].append(u)
    best = UNBOUNDED
    dist = np.full(n, -1, dtype=np.int64)
    parent = np.full(n, -1, dtype=np.int64)
    for root in range(n):
        dist.fill(-1)
        dist[root] = 0
        parent[root] = -1
        queue = deque([root])
        while queue:
            x = queue.popleft()
            # a cycle through root found at this depth is at least 2*dist[x]+1 long
            if 2 * dist[x] + 1 >= best:
                break
            for y in nbrs[x]:
                if dist[y] < 0:
                    dist[y] = dist[x] + 1
                    parent[y] = x
                    queue.append(y)
                elif parent[x] != y:
                    best = min(best, int(dist[x] + dist[y] + 1))
    return best


def path_graph(n: int) -> LabeledMultigraph:
    return LabeledMultigraph.from_edges(n, [(i, i + 1, 0) for i in range(n - 1)])


def cycle_graph(n: int) -> LabeledMultigraph:
    return LabeledMultigraph.from_edges(n, [(i, (i + 1) % n, 0) for i in range(n)])


def complete_graph(n: int) -> LabeledMultigraph:
    return LabeledMultigraph.from_edges(n, [(i, j, 0) for i in range(n) for j in range(i + 1, n)])


def check_cap(count: int, cap: int, what: str) -> None:
    if count > cap:
        raise CapExceeded(f"{what}: size {count} exceeds cap {cap}")
