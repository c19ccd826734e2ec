"""Balls of the Bass-Serre tree of A*B, the commutator basis, and the tree quasi-isometry check.

Tree vertices are cosets ``wA`` / ``wB``, stored as ``(word, side)`` with the
trailing syllable stripped when it lies in the coset's own factor. Edges are
group elements: ``g`` joins ``gA`` and ``gB``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .errors import CapExceeded, InputError
from .graphs import LabeledMultigraph, size_cap
from .groups import A_SIDE, B_SIDE, IDENTITY_WORD, SIDE_NAMES, FreeProduct, Word, cayley_distances

Coset = tuple[Word, int]


def canonical_coset(w: Word, side: int) -> Coset:
    if w and w[-1][0] == side:
        return w[:-1], side
    return w, side


@dataclass(frozen=True, eq=False)
class TreeBall:
    radius: int
    vertices: tuple[Coset, ...]
    graph: LabeledMultigraph  # edge labels are the edge words
    root: int = 0

    def index(self) -> dict[Coset, int]:
        return {c: i for i, c in enumerate(self.vertices)}


def tree_ball(fp: FreeProduct, radius: int, cap: int | None = None) -> TreeBall:
    """All cosets within tree distance ``radius`` of the vertex A."""
    if radius < 0:
        raise InputError("radius must be >= 0")
    cap = size_cap() if cap is None else cap
    root: Coset = (IDENTITY_WORD, A_SIDE)
    index = {root: 0}
    verts = [root]
    depth = [0]
    edges: dict[Word, tuple[int, int]] = {}
    queue = deque([0])
    while queue:
        i = queue.popleft()
        w, side = verts[i]
        grp = fp.factors[side]
        for x in grp.elements():
            edge = fp.multiply(w, fp.letter(side, x))
            nbr = canonical_coset(edge, 1 - side)
            j = index.get(nbr)
            if j is None:
                if depth[i] == radius:
                    continue
                j = len(verts)
                if j >= cap:
                    raise CapExceeded(f"tree ball of radius {radius} exceeds cap {cap}")
                index[nbr] = j
                verts.append(nbr)
                depth.append(depth[i] + 1)
                queue.append(j)
            if edge not in edges:
                a_end, b_end = (i, j) if side == A_SIDE else (j, i)
                edges[edge] = (a_end, b_end)
    graph = LabeledMultigraph.from_edges(len(verts), [(u, v, fp.format(e)) for e, (u, v) in edges.items()])
    return TreeBall(radius, tuple(verts), graph)


def coset_geodesic(fp: FreeProduct, w: Word, source_side: int, target_side: int) -> list[Coset]:
    """Vertices of the tree geodesic from the coset ``source_side`` to ``w * target_side``."""
    verts: list[Coset] = [(IDENTITY_WORD, source_side)]
    for i in range(len(w)):
        verts.append(canonical_coset(w[:i + 1], w[i][0]))
    verts.append(canonical_coset(w, target_side))
    out: list[Coset] = []
    for c in verts:
        if not out or out[-1] != c:
            out.append(c)
    return out


def tree_distance(fp: FreeProduct, g: Word, side1: int, h: Word, side2: int) -> int:
    """Distance between ``g.side1`` and ``h.side2`` via the prefix walk of ``g^-1 h``."""
    w = fp.multiply(fp.inverse(g), h)
    return len(coset_geodesic(fp, w, side1, side2)) - 1


@dataclass(frozen=True)
class BasisElement:
    a: int
    b: int
    word: Word


def commutator_basis(
    fp: FreeProduct,
    tau: int | None = None,
    gens_a: Sequence[int] | None = None,
    gens_b: Sequence[int] | None = None,
) -> list[BasisElement]:
    """[a, b] = a b a^-1 b^-1 for non-identity a, b; with ``tau`` only factor lengths <= tau."""
    len_a = len_b = None
    if tau is not None:
        gens_a = fp.A.non_identity() if gens_a is None else gens_a
        gens_b = fp.B.non_identity() if gens_b is None else gens_b
        len_a = cayley_distances(fp.A, gens_a)
        len_b = cayley_distances(fp.B, gens_b)
    out = []
    for a in fp.A.non_identity():
        if len_a is not None and not 0 <= len_a[a] <= tau:
            continue
        for b in fp.B.non_identity():
            if len_b is not None and not 0 <= len_b[b] <= tau:
                continue
            word = fp.commutator(fp.letter(A_SIDE, a), fp.letter(B_SIDE, b))
            out.append(BasisElement(a, b, word))
    return out


def kernel_membership(fp: FreeProduct, w: Word) -> bool:
    return fp.in_commutator_subgroup(w)


def fundamental_domain_translate(fp: FreeProduct, h: Word, side: int) -> Word:
    """The unique g in D with the coset ``h.side`` inside ``g.T_r``.

    T_r has vertices {aB} and {bA}; for hA the answer is h alpha^-1 beta^-1,
    for hB it is h beta^-1 alpha^-1, where (alpha, beta) is the image of h in A x B.
    """
    alpha, beta = fp.project(h)
    ia = fp.letter(A_SIDE, fp.A.i(alpha))
    ib = fp.letter(B_SIDE, fp.B.i(beta))
    if side == A_SIDE:
        return fp.multiply(h, ia, ib)
    return fp.multiply(h, ib, ia)


class BasisRewriter:
    """Rewrites elements of D as words over the commutator basis and its inverses."""

    def __init__(self, fp: FreeProduct, basis: Sequence[BasisElement] | None = None) -> None:
        self.fp = fp
        self.basis = list(commutator_basis(fp) if basis is None else basis)
        self.letters: dict[Word, tuple[int, int]] = {}
        for j, s in enumerate(self.basis):
            self.letters[s.word] = (j, 1)
            self.letters.setdefault(fp.inverse(s.word), (j, -1))

    def letter_word(self, j: int, sign: int) -> Word:
        w = self.basis[j].word
        return w if sign > 0 else self.fp.inverse(w)

    def evaluate(self, letters: Sequence[tuple[int, int]]) -> Word:
        return self.fp.multiply(*(self.letter_word(j, s) for j, s in letters))

    def express(self, w: Word) -> list[tuple[int, int]]:
        """Decompose along the geodesic from A to wA through translates of T_r."""
        fp = self.fp
        if not fp.in_commutator_subgroup(w):
            raise InputError(f"{fp.format(w)} is not in the commutator subgroup")
        path = coset_geodesic(fp, w, A_SIDE, A_SIDE)
        out: list[tuple[int, int]] = []
        prev = IDENTITY_WORD
        for h, side in path[1:]:
            g = fundamental_domain_translate(fp, h, side)
            step = fp.multiply(fp.inverse(prev), g)
            if step:
                letter = self.letters.get(step)
                if letter is None:
                    raise AssertionError(f"translate step {fp.format(step)} is not a basis letter")
                out.append(letter)
            prev = g
        if prev != w:
            raise AssertionError("geodesic decomposition did not end at w")
        return out


def express_in_basis(fp: FreeProduct, w: Word, basis: Sequence[BasisElement] | None = None) -> list[tuple[int, int]]:
    return BasisRewriter(fp, basis).express(w)


def basis_ball(fp: FreeProduct, radius: int, basis: Sequence[BasisElement] | None = None, cap: int | None = None) -> dict[Word, int]:
    """Word length over basis letters, by BFS inside A*B, for every element within ``radius``."""
    cap = size_cap() if cap is None else cap
    basis = commutator_basis(fp) if basis is None else basis
    steps = [s.word for s in basis] + [fp.inverse(s.word) for s in basis]
    dist = {IDENTITY_WORD: 0}
    frontier = [IDENTITY_WORD]
    for r in range(1, radius + 1):
        nxt = []
        for g in frontier:
            for s in steps:
                h = fp.multiply(g, s)
                if h not in dist:
                    dist[h] = r
                    nxt.append(h)
                    if len(dist) > cap:
                        raise CapExceeded(f"basis ball of radius {radius} exceeds cap {cap}")
        frontier = nxt
    return dist


@dataclass
class QIReport:
    radius: int
    checked: int
    violations: list[tuple[str, int, int]]
    basis_distances: list[int]
    best_multiplicative: Fraction  # max d_T / ell over ell > 0
    best_additive: int  # max ell - d_T
    rewrite_mismatches: int

    @property
    def passed(self) -> bool:
        return not self.violations and all(d == 4 for d in self.basis_distances) and not self.rewrite_mismatches


def qi_report(fp: FreeProduct, radius: int, cap: int | None = None) -> QIReport:
    """Check d_T(gA, A)/4 <= ell(g) <= d_T(gA, A) + 1 on the whole basis ball."""
    rewriter = BasisRewriter(fp)
    ball = basis_ball(fp, radius, rewriter.basis, cap)
    violations = []
    best_mul = Fraction(0)
    best_add = -(10**9)
    mismatches = 0
    for g, ell in ball.items():
        dt = tree_distance(fp, g, A_SIDE, IDENTITY_WORD, A_SIDE)
        if not (dt <= 4 * ell and ell <= dt + 1):
            violations.append((fp.format(g), ell, dt))
        if ell:
            best_mul = max(best_mul, Fraction(dt, ell))
        best_add = max(best_add, ell - dt)
        expressed = rewriter.express(g)
        if rewriter.evaluate(expressed) != g or len(expressed) < ell or len(expressed) > dt:
            mismatches += 1
    basis_d = [tree_distance(fp, s.word, A_SIDE, IDENTITY_WORD, A_SIDE) for s in rewriter.basis]
    return QIReport(radius, len(ball), violations, basis_d, best_mul, best_add, mismatches)


def reduced_basis_words(rank: int, length: int) -> list[tuple[tuple[int, int], ...]]:
    """All freely reduced words of exactly ``length`` letters (j, +-1) in ``rank`` generators."""
    words: list[tuple[tuple[int, int], ...]] = [()]
    for _ in range(length):
        nxt = []
        for w in words:
            for j in range(rank):
                for s in (1, -1):
                    if w and w[-1] == (j, -s):
                        continue
                    nxt.append(w + ((j, s),))
        words = nxt
    return words


def free_basis_check(fp: FreeProduct, max_length: int) -> list[tuple[tuple[int, int], ...]]:
    """Non-empty reduced basis words of length <= max_length that evaluate to e (expected none)."""
    rewriter = BasisRewriter(fp)
    bad = []
    for n in range(1, max_length + 1):
        for w in reduced_basis_words(len(rewriter.basis), n):
            if not rewriter.evaluate(w):
                bad.append(w)
    return bad


def write_tree_ball(fp: FreeProduct, ball: TreeBall, graph_path: str | Path, csv_path: str | Path) -> None:
    ball.graph.write(graph_path)
    lines = ["vertex,coset_word,side"]
    lines += [f"{i},{fp.format(w)},{SIDE_NAMES[s]}" for i, (w, s) in enumerate(ball.vertices)]
    Path(csv_path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
