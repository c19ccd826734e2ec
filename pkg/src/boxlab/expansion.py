"""Cheeger constants of finite multigraphs and the non-expansion witness for the Baumslag quotients."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import eigvalsh
from scipy.sparse import identity as sparse_identity
from scipy.sparse.linalg import eigsh

from .baumslag import build_sigma, effective_generator_count, schreier_graph
from .errors import InputError, VerificationError
from .graphs import LabeledMultigraph, cayley_multigraph, inverse_classes
from .groups import A_SIDE, B_SIDE, FiniteGroupTable, FreeProduct

EXACT_MAX_VERTICES = 24
DENSE_MAX_VERTICES = 3000
EIG_TOL = 1e-9
_CHUNK_BITS = 20


@dataclass(frozen=True)
class CheegerResult:
    value: Fraction | None = None  # exact mode
    interval: tuple[float, float] | None = None  # spectral mode
    witness_set: tuple[int, ...] = ()
    eigenvalue: float | None = None

    @property
    def exact(self) -> bool:
        return self.value is not None

    def contains(self, h: Fraction | float, tol: float = EIG_TOL) -> bool:
        if self.interval is None:
            raise InputError("not a spectral result")
        lo, hi = self.interval
        return lo - tol <= float(h) <= hi + tol


def boundary_size(graph: LabeledMultigraph, subset: Iterable[int]) -> int:
    """Edges with exactly one endpoint in ``subset``, counted with multiplicity."""
    s = set(subset)
    return sum(1 for u, v, _ in graph.edges if (u in s) != (v in s))


def cheeger_exact(graph: LabeledMultigraph) -> CheegerResult:
    """Exhaustive minimum of |dA|/|A| over nonempty A with |A| <= |V|/2."""
    n = graph.vertex_count
    if n > EXACT_MAX_VERTICES:
        raise InputError(f"exact Cheeger limited to {EXACT_MAX_VERTICES} vertices (got {n}); use cheeger_spectral")
    if n < 2:
        raise InputError("Cheeger constant needs at least 2 vertices")
    half = n // 2
    pairs = np.array([(u, v) for u, v, _ in graph.edges if u != v], dtype=np.uint32).reshape(-1, 2)
    best_b = [math.inf] * (half + 1)
    best_m = [0] * (half + 1)
    total = 1 << n
    chunk = 1 << min(_CHUNK_BITS, n)
    for start in range(1, total, chunk):
        masks = np.arange(start, min(start + chunk, total), dtype=np.uint32)
        sizes = np.bitwise_count(masks)
        keep = sizes <= half
        masks, sizes = masks[keep], sizes[keep]
        bnd = np.zeros(len(masks), dtype=np.int32)
        for u, v in pairs:
            bnd += ((masks >> u) ^ (masks >> v)) & 1
        for s in range(1, half + 1):
            sel = np.flatnonzero(sizes == s)
            if not len(sel):
                continue
            j = sel[np.argmin(bnd[sel])]
            if bnd[j] < best_b[s]:
                best_b[s], best_m[s] = int(bnd[j]), int(masks[j])
    value, mask = min((Fraction(best_b[s], s), best_m[s]) for s in range(1, half + 1))
    witness = tuple(v for v in range(n) if mask >> v & 1)
    if Fraction(boundary_size(graph, witness), len(witness)) != value:
        raise AssertionError("Cheeger witness does not reproduce the minimum")
    return CheegerResult(value=value, witness_set=witness)


def normalized_gap(graph: LabeledMultigraph) -> tuple[int, float]:
    """(d, lambda): regular degree and second-smallest eigenvalue of I - A/d."""
    d = graph.regular_degree()
    if d is None or d == 0:
        raise InputError("spectral estimator needs a regular graph of positive degree")
    if not graph.is_connected():
        raise InputError("spectral estimator needs a connected graph")
    n = graph.vertex_count
    adj = graph.sparse_adjacency()
    if n <= DENSE_MAX_VERTICES:
        lap = np.eye(n) - adj.toarray() / d
        vals = eigvalsh(lap)
        lam = float(vals[1]) if n > 1 else 0.0
    else:
        lap = (sparse_identity(n, format="csr") - adj / d).tocsc()
        v0 = np.ones(n) + np.arange(n) / n
        # shift-invert near 0 picks out the bottom of the spectrum
        vals = eigsh(lap, k=2, sigma=-1e-3, which="LM", v0=v0, tol=EIG_TOL, return_eigenvectors=False)
        lam = float(np.sort(vals)[1])
    return d, max(lam, 0.0)


def cheeger_spectral(graph: LabeledMultigraph) -> CheegerResult:
    """Discrete Cheeger interval [d*lam/2, d*sqrt(2*lam)]."""
    d, lam = normalized_gap(graph)
    return CheegerResult(interval=(d * lam / 2, d * math.sqrt(2 * lam)), eigenvalue=lam)


# -- subgroup monotonicity ---------------------------------------------------


def coset_schreier_graph(group: FiniteGroupTable, subgroup: Sequence[int], gens: Sequence[int]) -> tuple[LabeledMultigraph, list[frozenset[int]]]:
    """Graph on right cosets Hg with edges Hg -> Hgs, one per coset per inverse class."""
    if not group.is_subgroup(subgroup):
        raise InputError("H is not a subgroup (not closed under the group law)")
    h = sorted(set(subgroup))
    coset_of = np.full(group.order, -1, dtype=np.int64)
    cosets: list[frozenset[int]] = []
    for g in group.elements():
        if coset_of[g] < 0:
            c = frozenset(group.m(x, g) for x in h)
            for y in c:
                coset_of[y] = len(cosets)
            cosets.append(c)
    reps = [min(c) for c in cosets]
    edges = []
    for j, s in enumerate(inverse_classes(group, gens)):
        for i, r in enumerate(reps):
            edges.append((i, int(coset_of[group.m(r, s)]), j))
    return LabeledMultigraph.from_edges(len(cosets), edges), cosets


@dataclass
class MonotonicityReport:
    group: str
    subgroup: tuple[int, ...]
    h_group: Fraction
    h_quotient: Fraction | None  # None when the quotient has one vertex (no admissible set)

    @property
    def holds(self) -> bool:
        return self.h_quotient is None or self.h_group <= self.h_quotient


def quotient_monotonicity_check(
    group: FiniteGroupTable,
    subgroup: Sequence[int],
    gens: Sequence[int],
    h_group: Fraction | None = None,
) -> MonotonicityReport:
    """h(Cay(G, S)) <= h(Schreier(H\\G, S)), both computed exactly."""
    quotient, _ = coset_schreier_graph(group, subgroup, gens)
    if h_group is None:
        h_group = cheeger_exact(cayley_multigraph(group, group.symmetric_closure(gens))).value
    hq = cheeger_exact(quotient).value if quotient.vertex_count >= 2 else None
    rep = MonotonicityReport(group.name, tuple(sorted(subgroup)), h_group, hq)
    if not rep.holds:
        raise VerificationError(f"monotonicity fails for {group.name}, H={rep.subgroup}: {h_group} > {hq}", rep)
    return rep


def greedy_generating_set(group: FiniteGroupTable) -> list[int]:
    gens: list[int] = []
    span = frozenset([group.identity])
    for x in group.elements():
        if x not in span:
            gens.append(x)
            span = group.generated_subgroup(gens)
    return gens


def monotonicity_sweep(groups: Sequence[FiniteGroupTable]) -> list[MonotonicityReport]:
    """Every subgroup of every group, with a greedy generating set and with all non-identity elements."""
    out = []
    for g in groups:
        if g.order < 2:
            continue
        for gens in (greedy_generating_set(g), g.non_identity()):
            sym = g.symmetric_closure(gens)
            hg = cheeger_exact(cayley_multigraph(g, sym)).value
            for sub in g.subgroups():
                out.append(quotient_monotonicity_check(g, sorted(sub), sym, hg))
    return out


# -- Folner witness on U(k) --------------------------------------------------


@dataclass(frozen=True)
class FolnerWitness:
    k: int
    side: int
    words: int  # |U(k)|
    P: tuple[int, ...]
    boundary: int
    ratio: Fraction
    generator_count: int  # |S|, two per inverse class
    lower_bound: int  # (|A|-1)^floor(k/2) (|B|-1)^floor(k/2)
    h_exact: Fraction | None = None

    @property
    def lower_bound_holds(self) -> bool:
        return len(self.P) >= self.lower_bound


def folner_set(fp: FreeProduct, words, side: int) -> list[int]:
    """Words whose rightmost syllable lies in ``side``; the identity belongs to both sides."""
    return [i for i, w in enumerate(words.words) if not w or w[-1][0] == side]


def folner_witness(fp: FreeProduct, k: int, side: int = A_SIDE, exact_cheeger: bool = True) -> FolnerWitness:
    rep = build_sigma(fp, k)
    gens = fp.full_generating_set()
    graph = schreier_graph(rep, gens)
    P = folner_set(fp, rep.words, side)
    bnd = boundary_size(graph, P)
    s = effective_generator_count(fp, gens)
    if bnd > s:
        raise VerificationError(f"|dP| = {bnd} exceeds |S| = {s} at k={k}", P)
    half = k // 2
    lower = (fp.A.order - 1) ** half * (fp.B.order - 1) ** half
    ratio = Fraction(bnd, len(P))
    h = None
    if exact_cheeger and graph.vertex_count <= EXACT_MAX_VERTICES:
        h = cheeger_exact(graph).value
        if 2 * len(P) <= graph.vertex_count and h > ratio:
            raise VerificationError(f"h = {h} exceeds witness ratio {ratio} at k={k}", P)
    return FolnerWitness(k, side, len(rep.words), tuple(P), bnd, ratio, s, lower, h)


def folner_table(fp: FreeProduct, ks: Sequence[int], side: int = A_SIDE) -> list[dict]:
    """Rows ``k,|U(k)|,|P|,boundary,ratio,h_upper``; h_upper is the best admissible witness ratio."""
    rows = []
    for k in ks:
        w = folner_witness(fp, k, side, exact_cheeger=False)
        other = folner_witness(fp, k, 1 - side, exact_cheeger=False)
        admissible = [x.ratio for x in (w, other) if 2 * len(x.P) <= x.words]
        rows.append({
            "k": k,
            "|U(k)|": w.words,
            "|P|": len(w.P),
            "boundary": w.boundary,
            "ratio": w.ratio,
            "h_upper": min(admissible) if admissible else None,
        })
    return rows


def write_folner_csv(rows: Sequence[dict], path: str | Path) -> None:
    cols = ["k", "|U(k)|", "|P|", "boundary", "ratio", "h_upper"]
    lines = [",".join(cols)]
    for r in rows:
        lines.append(",".join("" if r[c] is None else str(r[c]) for c in cols))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
