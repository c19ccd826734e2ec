"""Baumslag's permutation quotients of A*B acting on truncated word sets."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import InputError
from .graphs import LabeledMultigraph, check_cap, size_cap
from .groups import A_SIDE, B_SIDE, FreeProduct, GeneratingSet, Word, from_permutations

NOT_COMPUTED = None
EXACT_ORDER_MAX_DEGREE = 5000


@dataclass(frozen=True, eq=False)
class TruncatedWordSet:
    """U(k): reduced words of syllable length <= k, with position 0 the identity."""

    product: FreeProduct
    k: int
    words: tuple[Word, ...]
    index: Mapping[Word, int] = field(repr=False)

    def __len__(self) -> int:
        return len(self.words)

    def layer(self, length: int) -> list[Word]:
        return [w for w in self.words if len(w) == length]


def count_truncated_words(na: int, nb: int, k: int) -> int:
    """|U(k)| from the closed count of alternating words (na, nb = factor orders)."""
    a, b = na - 1, nb - 1
    total = 1
    for length in range(1, k + 1):
        half, odd = divmod(length, 2)
        if odd:
            total += a ** (half + 1) * b ** half + b ** (half + 1) * a ** half
        else:
            total += 2 * a ** half * b ** half
    return total


def build_truncated_words(product: FreeProduct, k: int, cap: int | None = None) -> TruncatedWordSet:
    if k < 0:
        raise InputError("truncation depth must be >= 0")
    cap = size_cap() if cap is None else cap
    check_cap(count_truncated_words(product.A.order, product.B.order, k), cap, f"U({k})")
    words = tuple(product.words_up_to(k))
    return TruncatedWordSet(product, k, words, {w: i for i, w in enumerate(words)})


@dataclass(frozen=True, eq=False)
class PermutationRep:
    """sigma(k): each factor element acts on U(k) by a permutation of word indices."""

    words: TruncatedWordSet
    perms: tuple[np.ndarray, np.ndarray]  # perms[side][element] -> image array

    @property
    def degree(self) -> int:
        return len(self.words)

    def perm(self, side: int, element: int) -> np.ndarray:
        return self.perms[side][element]

    def act(self, g: Word, point: int) -> int:
        """sigma(k)(g) applied to a point; the rightmost syllable acts first."""
        for side, elem in reversed(g):
            point = int(self.perms[side][elem][point])
        return point

    def word_permutation(self, g: Word) -> tuple[int, ...]:
        p = np.arange(self.degree)
        for side, elem in reversed(g):
            p = self.perms[side][elem][p]
        return tuple(int(x) for x in p)


def sigma(words: TruncatedWordSet) -> PermutationRep:
    """Left multiplication by factor elements, truncated: if g*w leaves U(k), w is fixed."""
    fp = words.product
    k = words.k
    if k < 1:
        raise InputError("sigma(k) needs k >= 1")
    perms = []
    for side in (A_SIDE, B_SIDE):
        grp = fp.factors[side]
        table = np.empty((grp.order, len(words)), dtype=np.int64)
        for g in grp.elements():
            gw = fp.letter(side, g)
            for i, w in enumerate(words.words):
                image = fp.multiply(gw, w)
                table[g, i] = words.index[image] if len(image) <= k else i
            if len(np.unique(table[g])) != len(words):
                raise AssertionError(f"sigma image of {side}:{g} is not a bijection")
        perms.append(table)
    return PermutationRep(words, (perms[0], perms[1]))


def build_sigma(product: FreeProduct, k: int, cap: int | None = None) -> PermutationRep:
    return sigma(build_truncated_words(product, k, cap))


def factor_generators(rep: PermutationRep) -> list[list[int]]:
    out = []
    for side in (A_SIDE, B_SIDE):
        grp = rep.words.product.factors[side]
        for g in grp.non_identity():
            p = rep.perms[side][g]
            out.append(p.tolist())
    return out


def quotient_order(rep: PermutationRep) -> int | None:
    """Order of the image of sigma(k) (Schreier-Sims); ``None`` when the degree is too large."""
    gens = factor_generators(rep)
    if not gens:
        return 1
    if rep.degree > EXACT_ORDER_MAX_DEGREE:
        return NOT_COMPUTED
    from sympy.combinatorics import Permutation, PermutationGroup

    return int(PermutationGroup([Permutation(g) for g in gens]).order())


def closure_order(rep: PermutationRep, cap: int = 2_000_000) -> int:
    """Order by brute-force closure; the independent check for small degree."""
    gens = factor_generators(rep)
    if not gens:
        return 1
    seen = {tuple(range(rep.degree))}
    frontier = list(seen)
    while frontier:
        nxt = []
        for p in frontier:
            for g in gens:
                q = tuple(g[i] for i in p)
                if q not in seen:
                    seen.add(q)
                    nxt.append(q)
                    if len(seen) > cap:
                        raise InputError("closure exceeds cap")
        frontier = nxt
    return len(seen)


def quotient_group(rep: PermutationRep, cap: int = 100000):
    """The image group as a table, plus (side, element) -> table index for factor elements."""
    fp = rep.words.product
    gens = factor_generators(rep)
    table, elems = from_permutations(gens or [list(range(rep.degree))], name=f"sigma({rep.words.k})", cap=cap)
    index = {p: i for i, p in enumerate(elems)}
    images = {}
    for side in (A_SIDE, B_SIDE):
        for g in fp.factors[side].elements():
            images[(side, g)] = index[tuple(int(x) for x in rep.perms[side][g])]
    return table, elems, images


@dataclass
class FaithfulnessReport:
    k: int
    L: int
    checked: int
    failures: list[Word]

    @property
    def passed(self) -> bool:
        return not self.failures


def faithfulness_report(rep: PermutationRep, L: int) -> FaithfulnessReport:
    """Check sigma(k)(g)(e) = g for all reduced g of syllable length <= L."""
    fp = rep.words.product
    idx = rep.words.index
    failures = []
    words = fp.words_up_to(L)
    for g in words:
        image = rep.act(g, 0)
        if idx.get(g) != image:
            failures.append(g)
    return FaithfulnessReport(rep.words.k, L, len(words), failures)


def schreier_graph(rep: PermutationRep, gens: GeneratingSet) -> LabeledMultigraph:
    """Edges ``(w, s.w)``, one per vertex per class {s, s^-1}; fixed points give loops."""
    fp = rep.words.product
    edges = []
    label = 0
    for side in (A_SIDE, B_SIDE):
        grp = fp.factors[side]
        reps: list[int] = []
        for s in gens.for_factor(side):
            if not 0 <= s < grp.order:
                raise InputError(f"generator {s} not in factor {side}")
            if s != grp.identity and s not in reps and grp.i(s) not in reps:
                reps.append(s)
        for s in reps:
            p = rep.perms[side][s]
            edges.extend((w, int(p[w]), label) for w in range(rep.degree))
            label += 1
    return LabeledMultigraph.from_edges(rep.degree, edges)


def effective_generator_count(product: FreeProduct, gens: GeneratingSet) -> int:
    """|S| counted as the regular degree: 2 per inverse class (involutions counted twice)."""
    count = 0
    for side in (A_SIDE, B_SIDE):
        grp = product.factors[side]
        reps: list[int] = []
        for s in gens.for_factor(side):
            if s != grp.identity and s not in reps and grp.i(s) not in reps:
                reps.append(s)
        count += 2 * len(reps)
    return count
