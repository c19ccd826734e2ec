"""Finite groups as multiplication tables, free products of two of them, word lengths."""

from __future__ import annotations

import itertools
import random
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np

from .errors import GroupError, InputError

A_SIDE = 0
B_SIDE = 1
SIDE_NAMES = ("A", "B")

# A syllable is (factor, element); a word is a tuple of syllables read left to right.
Syllable = tuple[int, int]
Word = tuple[Syllable, ...]

IDENTITY_WORD: Word = ()

EXHAUSTIVE_ASSOCIATIVITY_LIMIT = 64


@dataclass(frozen=True, eq=False)
class FiniteGroupTable:
    """A finite group given by its Cayley table on indices ``0..order-1``."""

    mul: np.ndarray
    identity: int = 0
    element_names: tuple[str, ...] = ()
    name: str = "G"
    inv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        table = np.asarray(self.mul, dtype=np.int64)
        if table.ndim != 2 or table.shape[0] != table.shape[1] or table.shape[0] == 0:
            raise GroupError("multiplication table must be a non-empty square array")
        n = table.shape[0]
        if table.min() < 0 or table.max() >= n:
            raise GroupError("table entries out of range")
        table.setflags(write=False)
        object.__setattr__(self, "mul", table)
        if not 0 <= self.identity < n:
            raise GroupError(f"identity index {self.identity} out of range")
        if not self.element_names:
            object.__setattr__(self, "element_names", tuple(str(i) for i in range(n)))
        elif len(self.element_names) != n:
            raise GroupError("element_names length does not match order")
        e = self.identity
        idx = np.arange(n)
        if not (np.array_equal(table[e], idx) and np.array_equal(table[:, e], idx)):
            raise GroupError("identity row/column does not act as identity")
        inv = np.full(n, -1, dtype=np.int64)
        for x in range(n):
            hits = np.flatnonzero(table[x] == e)
            if len(hits) != 1 or table[hits[0], x] != e:
                raise GroupError(f"element {x} has no two-sided inverse")
            inv[x] = hits[0]
        inv.setflags(write=False)
        object.__setattr__(self, "inv", inv)
        srt = np.arange(n)[None, :]
        if not (np.array_equal(np.sort(table, axis=1), np.broadcast_to(srt, (n, n)))
                and np.array_equal(np.sort(table, axis=0).T, np.broadcast_to(srt, (n, n)))):
            raise GroupError("table is not a Latin square (some row or column repeats an element)")
        self.check_associativity()

    @property
    def order(self) -> int:
        return int(self.mul.shape[0])

    def __len__(self) -> int:
        return self.order

    def __repr__(self) -> str:
        return f"FiniteGroupTable({self.name}, order={self.order})"

    def m(self, x: int, y: int) -> int:
        return int(self.mul[x, y])

    def i(self, x: int) -> int:
        return int(self.inv[x])

    def elements(self) -> range:
        return range(self.order)

    def non_identity(self) -> list[int]:
        return [x for x in range(self.order) if x != self.identity]

    def element_order(self, x: int) -> int:
        k, y = 1, x
        while y != self.identity:
            y = self.m(y, x)
            k += 1
        return k

    def check_associativity(self, samples: int = 20000, seed: int = 0) -> None:
        """Raise :class:`GroupError` on a non-associative triple.

        Exhaustive up to order 64, randomly sampled above that.
        """
        t = self.mul
        n = self.order
        if n <= EXHAUSTIVE_ASSOCIATIVITY_LIMIT:
            # (xy)z == x(yz) for all triples, vectorised over z
            for x in range(n):
                left = t[t[x]]  # left[y, z] = (x y) z
                right = t[x][t]  # right[y, z] = x (y z)
                if not np.array_equal(left, right):
                    y, z = np.argwhere(left != right)[0]
                    raise GroupError(f"associativity fails on ({x}, {y}, {z})")
            return
        rng = random.Random(seed)
        for _ in range(samples):
            x, y, z = rng.randrange(n), rng.randrange(n), rng.randrange(n)
            if t[t[x, y], z] != t[x, t[y, z]]:
                raise GroupError(f"associativity fails on ({x}, {y}, {z})")

    def is_subgroup(self, elements: Iterable[int]) -> bool:
        h = set(elements)
        if self.identity not in h:
            return False
        return all(self.m(x, self.i(y)) in h for x in h for y in h)

    def generated_subgroup(self, gens: Iterable[int]) -> frozenset[int]:
        seen = {self.identity}
        frontier = [self.identity]
        gens = list(gens)
        while frontier:
            nxt = []
            for x in frontier:
                for g in gens:
                    y = self.m(x, g)
                    if y not in seen:
                        seen.add(y)
                        nxt.append(y)
            frontier = nxt
        return frozenset(seen)

    def subgroups(self) -> list[frozenset[int]]:
        """All subgroups, found by joining cyclic subgroups to a fixpoint."""
        cyclic = {self.generated_subgroup([x]) for x in self.elements()}
        found = set(cyclic)
        frontier = set(cyclic)
        while frontier:
            nxt = set()
            for h in frontier:
                for c in cyclic:
                    if c <= h:
                        continue
                    j = self.generated_subgroup(h | c)
                    if j not in found:
                        found.add(j)
                        nxt.add(j)
            frontier = nxt
        return sorted(found, key=lambda s: (len(s), sorted(s)))

    def symmetric_closure(self, gens: Iterable[int]) -> list[int]:
        out: list[int] = []
        for g in gens:
            for x in (g, self.i(g)):
                if x not in out:
                    out.append(x)
        return out

    def to_text(self) -> str:
        lines = [f"order {self.order}"]
        lines += [" ".join(str(int(v)) for v in row) for row in self.mul]
        lines.append(f"identity {self.identity}")
        return "\n".join(lines) + "\n"


# -- constructors ------------------------------------------------------------


def cyclic(n: int) -> FiniteGroupTable:
    if n < 1:
        raise InputError(f"cyclic group order must be positive, got {n}")
    idx = np.arange(n)
    return FiniteGroupTable((idx[:, None] + idx[None, :]) % n, 0, name=f"Z{n}")


def direct_product(g: FiniteGroupTable, h: FiniteGroupTable) -> FiniteGroupTable:
    """Elements are packed as ``x * |h| + y``."""
    n, m = g.order, h.order
    gx = np.repeat(np.arange(n), m)
    hy = np.tile(np.arange(m), n)
    table = g.mul[gx[:, None], gx[None, :]] * m + h.mul[hy[:, None], hy[None, :]]
    names = tuple(f"({a},{b})" for a in g.element_names for b in h.element_names)
    return FiniteGroupTable(table, g.identity * m + h.identity, names, name=f"{g.name}x{h.name}")


def from_permutations(gens: Sequence[Sequence[int]], name: str = "P", cap: int = 100000) -> tuple[FiniteGroupTable, list[tuple[int, ...]]]:
    """Close a set of permutations under composition.

    Returns the table and the element list (element ``i`` is ``perms[i]``;
    the product ``x*y`` means "apply y, then x").
    """
    if not gens:
        raise InputError("need at least one permutation")
    degree = len(gens[0])
    ident = tuple(range(degree))
    elems = [ident]
    index = {ident: 0}
    gens = [tuple(p) for p in gens]
    frontier = [ident]
    while frontier:
        nxt = []
        for p in frontier:
            for g in gens:
                q = tuple(g[p[i]] for i in range(degree))
                if q not in index:
                    if len(elems) >= cap:
                        raise InputError(f"permutation group exceeds cap {cap}")
                    index[q] = len(elems)
                    elems.append(q)
                    nxt.append(q)
        frontier = nxt
    n = len(elems)
    table = np.empty((n, n), dtype=np.int64)
    for i, x in enumerate(elems):
        for j, y in enumerate(elems):
            table[i, j] = index[tuple(x[y[t]] for t in range(degree))]
    return FiniteGroupTable(table, 0, name=name), elems


def dihedral(n: int) -> FiniteGroupTable:
    """Symmetries of an n-gon (order 2n)."""
    if n < 1:
        raise InputError("dihedral parameter must be positive")
    if n == 1:
        return FiniteGroupTable(cyclic(2).mul, 0, name="D1")
    if n == 2:
        g = direct_product(cyclic(2), cyclic(2))
        return FiniteGroupTable(g.mul, g.identity, name="D2")
    rot = [(i + 1) % n for i in range(n)]
    ref = [(-i) % n for i in range(n)]
    g, _ = from_permutations([rot, ref], name=f"D{n}")
    return g


def quaternion() -> FiniteGroupTable:
    # 1, i, j, k, -1, -i, -j, -k as 0..7
    base = {(0, 0): (0, 1), (0, 1): (1, 1), (0, 2): (2, 1), (0, 3): (3, 1),
            (1, 0): (1, 1), (1, 1): (0, -1), (1, 2): (3, 1), (1, 3): (2, -1),
            (2, 0): (2, 1), (2, 1): (3, -1), (2, 2): (0, -1), (2, 3): (1, 1),
            (3, 0): (3, 1), (3, 1): (2, 1), (3, 2): (1, -1), (3, 3): (0, -1)}
    table = np.empty((8, 8), dtype=np.int64)
    for x in range(8):
        for y in range(8):
            u, su = x % 4, (-1 if x >= 4 else 1)
            v, sv = y % 4, (-1 if y >= 4 else 1)
            w, s = base[(u, v)]
            s *= su * sv
            table[x, y] = w + (4 if s < 0 else 0)
    names = ("1", "i", "j", "k", "-1", "-i", "-j", "-k")
    return FiniteGroupTable(table, 0, names, name="Q8")


def symmetric(n: int) -> FiniteGroupTable:
    perms = list(itertools.permutations(range(n)))
    index = {p: i for i, p in enumerate(perms)}
    table = np.array([[index[tuple(p[q[t]] for t in range(n))] for q in perms] for p in perms])
    return FiniteGroupTable(table, 0, name=f"S{n}")


def parse_group_table(text: str) -> FiniteGroupTable:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("order"):
        raise InputError("group table file must start with 'order N'")
    try:
        n = int(lines[0].split()[1])
        rows = [[int(v) for v in ln.split()] for ln in lines[1:1 + n]]
        tail = lines[1 + n].split()
    except (IndexError, ValueError) as exc:
        raise InputError(f"malformed group table: {exc}") from None
    if tail[0] != "identity" or any(len(r) != n for r in rows) or len(rows) != n:
        raise InputError("malformed group table (row count/width or identity line)")
    return FiniteGroupTable(np.array(rows), int(tail[1]), name="table")


def read_group_table(path: str | Path) -> FiniteGroupTable:
    return parse_group_table(Path(path).read_text(encoding="utf-8"))


def group_from_spec(spec: str) -> FiniteGroupTable:
    """Build a factor group from a CLI spec.

    ``cyclic:N``, ``dihedral:N``, ``quaternion``, ``symmetric:N``,
    ``table:PATH`` and products joined by ``*`` (``cyclic:2*cyclic:2``).
    """
    parts = spec.split("*")
    if len(parts) > 1:
        g = group_from_spec(parts[0])
        for p in parts[1:]:
            g = direct_product(g, group_from_spec(p))
        return g
    kind, _, arg = spec.partition(":")
    try:
        if kind == "cyclic":
            return cyclic(int(arg))
        if kind == "dihedral":
            return dihedral(int(arg))
        if kind == "symmetric":
            return symmetric(int(arg))
        if kind == "quaternion":
            return quaternion()
        if kind == "table":
            return read_group_table(arg)
    except ValueError:
        raise InputError(f"bad group spec {spec!r}") from None
    raise InputError(f"unknown group spec {spec!r}")


def small_group_library(max_order: int = 16) -> list[FiniteGroupTable]:
    """The groups of order <= ``max_order`` shipped for sweeps (not a full census)."""
    out = [cyclic(n) for n in range(1, max_order + 1)]
    out += [dihedral(n) for n in range(3, max_order // 2 + 1)]
    z2 = cyclic(2)
    products = [
        (z2, z2), (z2, cyclic(4)), (z2, cyclic(6)), (z2, cyclic(8)), (cyclic(3), cyclic(3)),
        (cyclic(4), cyclic(4)), (z2, dihedral(4)),
    ]
    out += [direct_product(a, b) for a, b in products]
    out.append(direct_product(direct_product(z2, z2), z2))
    out.append(direct_product(direct_product(z2, z2), direct_product(z2, z2)))
    out.append(quaternion())
    return [g for g in out if g.order <= max_order]


# -- word lengths in finite groups -------------------------------------------


def cayley_distances(group: FiniteGroupTable, gens: Sequence[int]) -> np.ndarray:
    """BFS word length of every element; -1 where unreachable."""
    dist = np.full(group.order, -1, dtype=np.int64)
    dist[group.identity] = 0
    queue = deque([group.identity])
    while queue:
        x = queue.popleft()
        for g in gens:
            y = group.m(x, g)
            if dist[y] < 0:
                dist[y] = dist[x] + 1
                queue.append(y)
    return dist


def cayley_word_length(group: FiniteGroupTable, gens: Sequence[int], x: int) -> int:
    dist = cayley_distances(group, gens)
    missing = np.flatnonzero(dist < 0)
    if len(missing):
        raise GroupError(f"not generating: unreached elements {missing.tolist()}")
    return int(dist[x])


# -- free products ------------------------------------------------------------


@dataclass(frozen=True)
class GeneratingSet:
    """Generators of A*B as (factor, element) pairs."""

    generators: tuple[Syllable, ...]
    symmetric: bool = True

    def for_factor(self, side: int) -> list[int]:
        return [e for f, e in self.generators if f == side]

    def __len__(self) -> int:
        return len(self.generators)


class FreeProduct:
    """The free product A*B of two finite groups, elements as reduced words."""

    def __init__(self, a: FiniteGroupTable, b: FiniteGroupTable) -> None:
        self.factors = (a, b)

    @property
    def A(self) -> FiniteGroupTable:
        return self.factors[0]

    @property
    def B(self) -> FiniteGroupTable:
        return self.factors[1]

    def __repr__(self) -> str:
        return f"FreeProduct({self.A.name}, {self.B.name})"

    def letter(self, side: int, element: int) -> Word:
        if element == self.factors[side].identity:
            return IDENTITY_WORD
        return ((side, element),)

    def reduce(self, raw: Iterable[Syllable]) -> Word:
        """Normal form of an arbitrary syllable sequence (identity syllables allowed)."""
        out: list[list[int]] = []
        for side, elem in raw:
            if side not in (A_SIDE, B_SIDE):
                raise InputError(f"bad factor tag {side!r}")
            grp = self.factors[side]
            if not 0 <= elem < grp.order:
                raise InputError(f"element index {elem} invalid for factor {SIDE_NAMES[side]}")
            if elem == grp.identity:
                continue
            if out and out[-1][0] == side:
                merged = grp.m(out[-1][1], elem)
                if merged == grp.identity:
                    out.pop()
                else:
                    out[-1][1] = merged
            else:
                out.append([side, elem])
        return tuple((s, e) for s, e in out)

    def is_reduced(self, w: Word) -> bool:
        for j, (side, elem) in enumerate(w):
            if elem == self.factors[side].identity:
                return False
            if j and w[j - 1][0] == side:
                return False
        return True

    def multiply(self, *words: Word) -> Word:
        out: list[Syllable] = []
        for w in words:
            for side, elem in w:
                if out and out[-1][0] == side:
                    grp = self.factors[side]
                    merged = grp.m(out[-1][1], elem)
                    if merged == grp.identity:
                        out.pop()
                    else:
                        out[-1] = (side, merged)
                else:
                    out.append((side, elem))
        return tuple(out)

    def inverse(self, w: Word) -> Word:
        return tuple((s, self.factors[s].i(e)) for s, e in reversed(w))

    def commutator(self, x: Word, y: Word) -> Word:
        return self.multiply(x, y, self.inverse(x), self.inverse(y))

    def project(self, w: Word) -> tuple[int, int]:
        """Image under A*B -> A x B."""
        acc = [self.A.identity, self.B.identity]
        for side, elem in w:
            acc[side] = self.factors[side].m(acc[side], elem)
        return acc[0], acc[1]

    def in_commutator_subgroup(self, w: Word) -> bool:
        return self.project(w) == (self.A.identity, self.B.identity)

    def format(self, w: Word) -> str:
        if not w:
            return "e"
        return ".".join(f"{SIDE_NAMES[s].lower()}{self.factors[s].element_names[e]}" for s, e in w)

    def parse(self, text: str) -> Word:
        """Inverse of :meth:`format` (``e`` or dot-separated ``a<name>``/``b<name>``)."""
        text = text.strip()
        if text in ("", "e"):
            return IDENTITY_WORD
        raw = []
        for tok in text.split("."):
            side = {"a": A_SIDE, "b": B_SIDE}.get(tok[:1])
            if side is None:
                raise InputError(f"bad syllable {tok!r}")
            names = self.factors[side].element_names
            try:
                raw.append((side, names.index(tok[1:])))
            except ValueError:
                raise InputError(f"unknown element {tok!r}") from None
        return self.reduce(raw)

    def full_generating_set(self) -> GeneratingSet:
        gens = [(A_SIDE, x) for x in self.A.non_identity()]
        gens += [(B_SIDE, x) for x in self.B.non_identity()]
        return GeneratingSet(tuple(gens))

    def words_up_to(self, k: int) -> list[Word]:
        """All reduced words of syllable length <= k, by length then lexicographically."""
        layers: list[list[Word]] = [[IDENTITY_WORD]]
        nonid = [self.A.non_identity(), self.B.non_identity()]
        for _ in range(k):
            layer = []
            for w in layers[-1]:
                sides = (A_SIDE, B_SIDE) if not w else (1 - w[-1][0],)
                for s in sides:
                    layer.extend(w + ((s, e),) for e in nonid[s])
            layers.append(layer)
        return [w for layer in layers for w in layer]

    def random_word(self, rng: random.Random, max_len: int) -> Word:
        n = rng.randint(0, max_len)
        raw = []
        for _ in range(n):
            side = rng.randrange(2)
            raw.append((side, rng.randrange(self.factors[side].order)))
        return self.reduce(raw)


def check_injective_on(
    elements: Sequence[Word], quotient_map: Callable[[Word], Hashable]
) -> tuple[bool, tuple[Word, Word] | None]:
    """Is ``quotient_map`` injective on ``elements``? Returns the first colliding pair if not."""
    seen: dict[Hashable, Word] = {}
    for w in elements:
        img = quotient_map(w)
        if img in seen and seen[img] != w:
            return False, (seen[img], w)
        seen.setdefault(img, w)
    return True, None
