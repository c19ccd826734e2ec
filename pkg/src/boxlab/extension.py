"""The extension 1 -> D/N_k -> G/N_k -> A x B -> 1 realised on (A x B) x (tower level k).

An element s(q) d of G/N_k, with s(alpha, beta) = alpha beta and d in D/N_k,
is stored as (q, v) where v is the tower vertex of d. Right multiplication
by a factor letter g sends (q, d) to (qg, c(q, g) phi_g(d)), where
c(q, g) = s(qg)^-1 s(q) g lies in D and phi_g is conjugation by g.
"""

from __future__ import annotations

import heapq
import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bassserre import BasisRewriter
from .errors import InputError, VerificationError
from .graphs import LabeledMultigraph, size_cap
from .groups import A_SIDE, B_SIDE, FiniteGroupTable, FreeProduct, Word
from .tower import build_tower

SCHEMA_VERSION = 1


class TowerGroup:
    """D/N_k acting on the vertices of a tower level; vertex 0 is the identity."""

    def __init__(self, graph: LabeledMultigraph, rank: int) -> None:
        perms = graph.label_permutations()
        if sorted(perms) != list(range(rank)):
            raise InputError("tower level labels must be the basis indices 0..rank-1")
        self.n = graph.vertex_count
        self.graph = graph
        self.right = [perms[j] for j in range(rank)]
        self.right_inv = [np.argsort(p) for p in self.right]
        self._left: dict[tuple[int, int], np.ndarray] = {}

    def walk(self, v: int, letters) -> int:
        """v . x_{j1}^{s1} ... x_{jn}^{sn}"""
        for j, s in letters:
            v = int(self.right[j][v] if s > 0 else self.right_inv[j][v])
        return v

    def extend_hom(self, images: list[list[tuple[int, int]]], start: int = 0) -> np.ndarray:
        """The map u -> f(u) with f(0) = start and f(u x_j) = f(u) . images[j], checked on every edge."""
        f = np.full(self.n, -1, dtype=np.int64)
        f[0] = start
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for j, p in enumerate(self.right):
                for v, fv in ((int(p[u]), self.walk(int(f[u]), images[j])),
                              (int(self.right_inv[j][u]), self.walk(int(f[u]), [(i, -s) for i, s in reversed(images[j])]))):
                    if f[v] < 0:
                        f[v] = fv
                        queue.append(v)
                    elif f[v] != fv:
                        raise VerificationError(f"map is not well defined on the tower level at vertex {v}", v)
        if len(np.unique(f)) != self.n:
            raise VerificationError("induced map on the tower level is not a bijection")
        return f

    def left(self, j: int, s: int) -> np.ndarray:
        """Left multiplication by x_j^s: the right-equivariant map sending 0 to 0 . x_j^s."""
        key = (j, s)
        if key not in self._left:
            ident = [[(i, 1)] for i in range(len(self.right))]
            self._left[key] = self.extend_hom(ident, self.walk(0, [(j, s)]))
        return self._left[key]

    def left_mult(self, letters, v: int) -> int:
        for j, s in reversed(letters):
            v = int(self.left(j, s)[v])
        return v

    def distances(self) -> np.ndarray:
        return self.graph.bfs(0)


@dataclass
class ExtensionReport:
    A: str
    B: str
    k: int
    rank: int
    tau: int
    tower_size: int
    order: int
    expected_order: int
    connected: bool
    relations_hold: bool
    commutators_hit_letters: bool
    fiber_checked: int
    lower_violations: list = field(default_factory=list)  # (vertex, ell_comb, ell_bar)
    upper_violations: list = field(default_factory=list)
    max_ratio: float = 0.0  # max ell_bar / ell_comb on the fiber
    weighted_checked: int = 0
    weighted_violations: int = 0
    lengths: np.ndarray | None = field(default=None, repr=False)
    fiber_comb: np.ndarray | None = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return (self.order == self.expected_order and self.connected and self.relations_hold
                and self.commutators_hit_letters and not self.lower_violations
                and not self.upper_violations and not self.weighted_violations)

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "A": self.A, "B": self.B, "k": self.k, "rank": self.rank, "tau": self.tau,
            "tower_size": self.tower_size, "order": self.order, "expected_order": self.expected_order,
            "checks": {
                "order": self.order == self.expected_order,
                "connected": self.connected,
                "factor_relations": self.relations_hold,
                "commutators_act_as_basis_letters": self.commutators_hit_letters,
                "comb_minus_one_le_quotient": not self.lower_violations,
                "quotient_le_4tau_comb": not self.upper_violations,
                "weighted_length_bounds": not self.weighted_violations,
            },
            "fiber_checked": self.fiber_checked,
            "lower_violations": self.lower_violations[:20],
            "upper_violations": self.upper_violations[:20],
            "max_quotient_over_comb": self.max_ratio,
            "weighted_checked": self.weighted_checked,
            "passed": self.passed,
        }

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n")


class Extension:
    """Right action of factor letters on (A x B) x (tower vertices)."""

    def __init__(self, A: FiniteGroupTable, B: FiniteGroupTable, k: int, cap: int | None = None) -> None:
        cap = size_cap() if cap is None else cap
        self.fp = FreeProduct(A, B)
        self.rewriter = BasisRewriter(self.fp)
        self.rank = len(self.rewriter.basis)
        if self.rank == 0:
            raise InputError("both factors must be non-trivial")
        tower = build_tower(self.rank, k, max(1, cap // (A.order * B.order)))
        if tower.truncated or len(tower.levels) < k:
            raise InputError(f"tower level {k} exceeds the size cap ({tower.truncation_reason})")
        self.k = k
        self.level = tower.levels[k - 1].graph
        self.D = TowerGroup(self.level, self.rank)
        self.nq = A.order * B.order
        self.size = self.nq * self.D.n
        self.letters = [(A_SIDE, a) for a in A.non_identity()] + [(B_SIDE, b) for b in B.non_identity()]
        self.actions = {g: self._letter_action(*g) for g in self.letters}

    def q_index(self, alpha: int, beta: int) -> int:
        return alpha * self.fp.B.order + beta

    def section(self, alpha: int, beta: int) -> Word:
        return self.fp.multiply(self.fp.letter(A_SIDE, alpha), self.fp.letter(B_SIDE, beta))

    def conjugation(self, g: Word) -> np.ndarray:
        """d -> g^-1 d g on the tower level."""
        fp = self.fp
        images = [self.rewriter.express(fp.multiply(fp.inverse(g), s.word, g)) for s in self.rewriter.basis]
        return self.D.extend_hom(images)

    def _letter_action(self, side: int, x: int) -> np.ndarray:
        """Permutation of element indices q * |V| + v for right multiplication by the letter."""
        fp = self.fp
        g = fp.letter(side, x)
        phi = self.conjugation(g)
        n = self.D.n
        out = np.empty(self.size, dtype=np.int64)
        for alpha in fp.A.elements():
            for beta in fp.B.elements():
                q = self.q_index(alpha, beta)
                a2, b2 = (fp.A.m(alpha, x), beta) if side == A_SIDE else (alpha, fp.B.m(beta, x))
                q2 = self.q_index(a2, b2)
                c = fp.multiply(fp.inverse(self.section(a2, b2)), self.section(alpha, beta), g)
                letters = self.rewriter.express(c)
                targets = np.array([self.D.left_mult(letters, int(phi[v])) for v in range(n)]) if letters else phi
                out[q * n:(q + 1) * n] = q2 * n + targets
        return out

    def word_action(self, w: Word, element: int) -> int:
        for side, x in w:
            element = int(self.actions[(side, x)][element])
        return element

    def relations_hold(self) -> bool:
        fp = self.fp
        for side in (A_SIDE, B_SIDE):
            grp = fp.factors[side]
            for x in grp.non_identity():
                for y in grp.non_identity():
                    xy = grp.m(x, y)
                    lhs = self.actions[(side, y)][self.actions[(side, x)]]
                    rhs = np.arange(self.size) if xy == grp.identity else self.actions[(side, xy)]
                    if not np.array_equal(lhs, rhs):
                        return False
        return True

    def commutators_hit_letters(self) -> bool:
        for j, s in enumerate(self.rewriter.basis):
            if self.word_action(s.word, 0) != self.D.walk(0, [(j, 1)]):
                return False
        return True

    def cayley_distances(self, weights: dict[int, int] | None = None) -> np.ndarray:
        """Word lengths from the identity; ``weights`` by factor side turns BFS into Dijkstra."""
        dist = np.full(self.size, -1, dtype=np.int64)
        dist[0] = 0
        perms = [(self.actions[g], 1 if weights is None else weights[g[0]]) for g in self.letters]
        if weights is None:
            queue = deque([0])
            while queue:
                x = queue.popleft()
                for p, _ in perms:
                    y = int(p[x])
                    if dist[y] < 0:
                        dist[y] = dist[x] + 1
                        queue.append(y)
            return dist
        heap = [(0, 0)]
        best = np.full(self.size, np.iinfo(np.int64).max, dtype=np.int64)
        best[0] = 0
        while heap:
            d, x = heapq.heappop(heap)
            if d > best[x]:
                continue
            for p, w in perms:
                y = int(p[x])
                if d + w < best[y]:
                    best[y] = d + w
                    heapq.heappush(heap, (d + w, y))
        best[best == np.iinfo(np.int64).max] = -1
        return best


def extension_experiment(A: FiniteGroupTable, B: FiniteGroupTable, k: int, cap: int | None = None) -> ExtensionReport:
    """Build G/N_k, compare quotient word length with the tower word length on the fiber D/N_k."""
    ext = Extension(A, B, k, cap)
    tau = 1  # full factor generating sets: every basis commutator has factor lengths 1
    ell = ext.cayley_distances()
    comb = ext.D.distances()
    fiber = ell[: ext.D.n]  # q = (e, e) block
    report = ExtensionReport(
        A=A.name, B=B.name, k=k, rank=ext.rank, tau=tau, tower_size=ext.D.n, order=int(np.count_nonzero(ell >= 0)),
        expected_order=A.order * B.order * ext.D.n, connected=bool((ell >= 0).all()),
        relations_hold=ext.relations_hold(), commutators_hit_letters=ext.commutators_hit_letters(),
        fiber_checked=ext.D.n, lengths=ell, fiber_comb=comb,
    )
    for v in range(ext.D.n):
        lc, lq = int(comb[v]), int(fiber[v])
        if lc - 1 > lq:
            report.lower_violations.append((v, lc, lq))
        if lq > 4 * tau * lc:
            report.upper_violations.append((v, lc, lq))
    nz = comb > 0
    report.max_ratio = float((fiber[nz] / comb[nz]).max()) if nz.any() else 0.0
    # second proper length: A-letters weight 1, B-letters weight 2, so ell <= ell_w <= 2 ell
    weighted = ext.cayley_distances({A_SIDE: 1, B_SIDE: 2})
    report.weighted_checked = ext.size
    report.weighted_violations = int(np.count_nonzero((weighted < ell) | (weighted > 2 * ell)))
    return report
