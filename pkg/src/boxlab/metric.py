"""Finite metric components, coarse disjoint unions, and Hilbert-space embedding assembly.

Embeddings are plain float arrays (one row per point). Gaussian families are
handled through their Gram matrices and, when vectors are needed, realised by
an eigendecomposition of the Gram matrix.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InputError, VerificationError
from .graphs import LabeledMultigraph
from .groups import FiniteGroupTable, cayley_distances

PSD_TOL = 1e-9
NORM_TOL = 1e-12
EXHAUSTIVE_TRIANGLE_MAX = 200
SAMPLED_TRIANGLE_MAX = 2000


@dataclass(frozen=True, eq=False)
class MetricComponent:
    dist: np.ndarray  # integer (or object/Fraction) square table
    basepoint: int = 0
    label: str = ""

    def __post_init__(self) -> None:
        d = self.dist
        if d.ndim != 2 or d.shape[0] != d.shape[1] or d.shape[0] == 0:
            raise InputError("metric must be a non-empty square table")
        if not 0 <= self.basepoint < d.shape[0]:
            raise InputError("basepoint out of range")
        if (d != d.T).any():
            raise InputError(f"metric {self.label!r} is not symmetric")
        if (np.diagonal(d) != 0).any():
            raise InputError(f"metric {self.label!r} has a non-zero diagonal")
        if (d < 0).any():
            raise InputError(f"metric {self.label!r} has a negative entry")
        _check_triangle(d, self.label)

    @property
    def point_count(self) -> int:
        return self.dist.shape[0]

    @property
    def diameter(self):
        return self.dist.max()

    @classmethod
    def from_graph(cls, graph: LabeledMultigraph, basepoint: int = 0, label: str = "") -> "MetricComponent":
        d = graph.distance_matrix()
        if (d < 0).any():
            raise InputError("graph metric needs a connected graph")
        return cls(d, basepoint, label)


def _check_triangle(d: np.ndarray, label: str) -> None:
    n = d.shape[0]
    if n <= EXHAUSTIVE_TRIANGLE_MAX and d.dtype != object:
        for y in range(n):
            if (d > d[:, y][:, None] + d[y, :][None, :]).any():
                raise InputError(f"metric {label!r} violates the triangle inequality through point {y}")
        return
    if n > SAMPLED_TRIANGLE_MAX:
        return
    rng = random.Random(0)
    triples = itertools.product(range(n), repeat=3) if n <= 20 else (
        (rng.randrange(n), rng.randrange(n), rng.randrange(n)) for _ in range(20000))
    for x, y, z in triples:
        if d[x, z] > d[x, y] + d[y, z]:
            raise InputError(f"metric {label!r} violates the triangle inequality at {(x, y, z)}")


# -- coarse disjoint unions ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class CoarseUnion:
    """Components indexed n = 1..N; cross distance d_n(x,b_n) + K_n + K_m + d_m(y,b_m)."""

    components: tuple[MetricComponent, ...]
    offsets: tuple[int, ...]  # K_n for n = 1..N

    @property
    def size(self) -> int:
        return sum(c.point_count for c in self.components)

    def base_distance(self, n: int, x: int) -> int:
        c = self.components[n - 1]
        return c.dist[x, c.basepoint]

    def distance(self, n: int, x: int, m: int, y: int):
        if n == m:
            return self.components[n - 1].dist[x, y]
        return self.base_distance(n, x) + self.offsets[n - 1] + self.offsets[m - 1] + self.base_distance(m, y)

    def points(self) -> list[tuple[int, int]]:
        return [(n, x) for n, c in enumerate(self.components, 1) for x in range(c.point_count)]

    def cross_block(self, n: int, m: int) -> np.ndarray:
        """Distance table between all of X_n and all of X_m."""
        if n == m:
            return self.components[n - 1].dist
        cn, cm = self.components[n - 1], self.components[m - 1]
        return (cn.dist[:, cn.basepoint][:, None] + (self.offsets[n - 1] + self.offsets[m - 1])
                + cm.dist[:, cm.basepoint][None, :])

    def distance_matrix(self) -> np.ndarray:
        n = len(self.components)
        rows = [np.hstack([self.cross_block(i, j) for j in range(1, n + 1)]) for i in range(1, n + 1)]
        return np.vstack(rows)

    def near_set(self, n: int, m: int, R) -> np.ndarray:
        """U_{n,m}(R) = points of X_n within distance R of X_m (n != m), by brute force."""
        block = self.cross_block(n, m)
        return np.flatnonzero(block.min(axis=1) <= R)


def coarse_union(components: Sequence[MetricComponent]) -> CoarseUnion:
    if not components:
        raise InputError("coarse union needs at least one component")
    offsets = []
    running = 0
    for n, c in enumerate(components, 1):
        running = max(running, int(c.diameter))
        offsets.append(2 ** n + running)
    return CoarseUnion(tuple(components), tuple(offsets))


@dataclass
class CoarseAxiomReport:
    axiom1_checked: int
    axiom1_violations: int
    radii: dict  # R -> {"nonempty": [(n, m, size, diam)], "violations": count}

    @property
    def passed(self) -> bool:
        return self.axiom1_violations == 0 and all(v["violations"] == 0 for v in self.radii.values())


def check_coarse_axioms(u: CoarseUnion, radii: Sequence[int]) -> CoarseAxiomReport:
    """Axiom (1): |2^n - 2^m| <= d for cross pairs. Axiom (2): each U_{n,m}(R) bounded, nonempty for finitely many pairs."""
    N = len(u.components)
    checked = violations = 0
    for n in range(1, N + 1):
        for m in range(1, N + 1):
            if n == m:
                continue
            block = u.cross_block(n, m)
            checked += block.size
            violations += int(np.count_nonzero(block < abs(2 ** n - 2 ** m)))
    out = {}
    for R in radii:
        nonempty = []
        bad = 0
        for n in range(1, N + 1):
            for m in range(1, N + 1):
                if n == m:
                    continue
                S = u.near_set(n, m, R)
                if not len(S):
                    continue
                d = u.components[n - 1].dist
                diam = int(d[np.ix_(S, S)].max())
                nonempty.append((n, m, len(S), diam))
                # nonempty forces K_n + K_m <= R, and S sits in a ball of radius R around the basepoint
                if u.offsets[n - 1] + u.offsets[m - 1] > R or diam > 2 * R:
                    bad += 1
        out[R] = {"nonempty": nonempty, "violations": bad}
    return CoarseAxiomReport(checked, violations, out)


def hilbert_union_embedding(u: CoarseUnion, tables: Sequence[np.ndarray]) -> list[np.ndarray]:
    """F(v, n) = v (+) 2^n in a common direct sum, one block per component plus a scalar slot."""
    dims = [t.shape[1] for t in tables]
    total = sum(dims) + 1
    out = []
    start = 0
    for n, t in enumerate(tables, 1):
        emb = np.zeros((t.shape[0], total))
        emb[:, start:start + t.shape[1]] = t
        emb[:, -1] = 2.0 ** n
        out.append(emb)
        start += t.shape[1]
    return out


# -- profiles ------------------------------------------------------------------


@dataclass(frozen=True)
class CompressionProfile:
    t: np.ndarray
    rho_minus: np.ndarray
    rho_plus: np.ndarray

    def rows(self) -> list[tuple[float, float, float]]:
        return list(zip(self.t.tolist(), self.rho_minus.tolist(), self.rho_plus.tolist()))

    def write_csv(self, path: str | Path) -> None:
        lines = ["t,rho_minus,rho_plus"] + [f"{t:g},{a:.12g},{b:.12g}" for t, a, b in self.rows()]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def pair_distances(vectors: np.ndarray) -> np.ndarray:
    sq = (vectors ** 2).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2 * vectors @ vectors.T
    return np.sqrt(np.clip(d2, 0, None))


def profile_from_pairs(d: np.ndarray, e: np.ndarray) -> CompressionProfile:
    """rho_-(t) = min ||dF|| over pairs with d >= t; rho_+(t) = max over pairs with d <= t."""
    d = np.asarray(d, dtype=float).ravel()
    e = np.asarray(e, dtype=float).ravel()
    ts, inv = np.unique(d, return_inverse=True)
    mins = np.full(len(ts), np.inf)
    maxs = np.full(len(ts), -np.inf)
    np.minimum.at(mins, inv, e)
    np.maximum.at(maxs, inv, e)
    rho_minus = np.minimum.accumulate(mins[::-1])[::-1]
    rho_plus = np.maximum.accumulate(maxs)
    return CompressionProfile(ts, rho_minus, rho_plus)


def profile(vectors: np.ndarray | Sequence[np.ndarray], space: MetricComponent | CoarseUnion) -> CompressionProfile:
    if isinstance(space, CoarseUnion):
        vecs = np.vstack(list(vectors)) if not isinstance(vectors, np.ndarray) else vectors
        d = space.distance_matrix()
    else:
        vecs = np.asarray(vectors)
        d = space.dist
    if vecs.shape[0] != d.shape[0]:
        raise InputError("embedding does not cover every point")
    return profile_from_pairs(d, pair_distances(vecs))


# -- Gaussian families ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GaussianFamily:
    t: float
    gram: np.ndarray
    min_eigenvalue: float

    @property
    def distances(self) -> np.ndarray:
        """||phi(x) - phi(y)|| = sqrt(2 - 2 G_xy)."""
        return np.sqrt(np.clip(2 - 2 * self.gram, 0, None))

    def vectors(self) -> np.ndarray:
        """Unit vectors realising the Gram matrix (rows), via its eigendecomposition."""
        w, v = np.linalg.eigh(self.gram)
        keep = w > PSD_TOL
        x = v[:, keep] * np.sqrt(w[keep])
        return x / np.linalg.norm(x, axis=1, keepdims=True)


def gaussian_family(vectors: np.ndarray | None = None, t: float = 1.0, sqdist: np.ndarray | None = None) -> GaussianFamily:
    """G_xy = exp(-t ||F(x) - F(y)||^2); checks unit diagonal and PSD to 1e-9."""
    if t <= 0:
        raise InputError("t must be positive")
    if sqdist is None:
        if vectors is None:
            raise InputError("give vectors or squared distances")
        sqdist = pair_distances(np.asarray(vectors, dtype=float)) ** 2
    gram = np.exp(-t * np.asarray(sqdist, dtype=float))
    if not np.allclose(np.diagonal(gram), 1.0, atol=NORM_TOL, rtol=0):
        raise VerificationError("Gram matrix diagonal is not 1")
    lam = float(np.linalg.eigvalsh(gram)[0])
    if lam < -PSD_TOL:
        raise VerificationError(f"Gram matrix not PSD: min eigenvalue {lam}", lam)
    return GaussianFamily(t, gram, lam)


# -- direct sums ---------------------------------------------------------------


@dataclass
class DirectSum:
    vectors: np.ndarray
    epsilons: list[float]
    radii: list[float]
    M: list[float]  # minimal valid M_l per family (inf when never reached)
    M_running: list[float]
    validity: float  # staircase lower bound asserted for d < validity
    upper_violations: int
    lower_violations: int

    def staircase(self, d: float) -> float:
        """1/2 sqrt(l - 1) on [M_{l-1}, M_l), with M_0 = 0 and the running max of M_l."""
        steps = sum(1 for m in self.M_running if m <= d)
        return 0.5 * math.sqrt(steps)


def gaussian_parameter(sq_base: np.ndarray, dist: np.ndarray, eps: float, R: float) -> float:
    """Largest t with 2 - 2 exp(-t s) <= eps^2 for every pair with d <= R (s = squared base distance)."""
    near = sq_base[(dist <= R)]
    worst = float(near.max()) if near.size else 0.0
    if worst == 0:
        return 1.0
    return -math.log(1 - eps * eps / 2) / worst


def minimal_M(family_dist: np.ndarray, dist: np.ndarray) -> float:
    """Smallest realised t such that every pair with d >= t has ||dphi|| >= 1."""
    bad = dist[family_dist < 1 - NORM_TOL]
    return float(bad.max()) + 1 if bad.size else 0.0


def assemble_direct_sum(
    dist: np.ndarray,
    families: Sequence[GaussianFamily],
    epsilons: Sequence[float] | None = None,
    radii: Sequence[float] | None = None,
    basepoint: int = 0,
) -> DirectSum:
    """F(x) = 1/2 (+)_l (phi_l(x) - phi_l(x0)); checks the family contracts and both bounds."""
    L = len(families)
    epsilons = [1 / l for l in range(1, L + 1)] if epsilons is None else list(epsilons)
    radii = [math.sqrt(l) for l in range(1, L + 1)] if radii is None else list(radii)
    dist = np.asarray(dist, dtype=float)
    n = dist.shape[0]
    blocks = []
    M = []
    for l, fam in enumerate(families, 1):
        fd = fam.distances
        near = dist <= radii[l - 1]
        over = near & (fd > epsilons[l - 1] + PSD_TOL)
        if over.any():
            x, y = map(int, np.argwhere(over)[0])
            raise VerificationError(f"family {l} breaks its (R, eps) contract at pair {(x, y)}", (l, x, y))
        M.append(minimal_M(fd, dist))
        v = fam.vectors()
        blocks.append(v - v[basepoint])
    F = 0.5 * np.hstack(blocks) if blocks else np.zeros((n, 0))
    running = list(np.maximum.accumulate(M)) if M else []
    ds = DirectSum(F, epsilons, radii, M, [float(m) for m in running], math.inf, 0, 0)
    ds.validity = float(running[-1]) if running else 0.0
    e = pair_distances(F)
    ds.upper_violations = int(np.count_nonzero(e > dist + 1 + PSD_TOL))
    lower = np.vectorize(ds.staircase)(dist)
    ds.lower_violations = int(np.count_nonzero(e < lower - PSD_TOL))
    return ds


def gaussian_direct_sum(dist: np.ndarray, base_sqdist: np.ndarray, L_max: int = 16, basepoint: int = 0) -> DirectSum:
    """Direct sum built from Gaussian families of a base embedding, t_l tuned to (sqrt(l), 1/l)."""
    fams = []
    for l in range(1, L_max + 1):
        t = gaussian_parameter(base_sqdist, dist, 1 / l, math.sqrt(l))
        fams.append(gaussian_family(t=t, sqdist=base_sqdist))
    return assemble_direct_sum(dist, fams, basepoint=basepoint)


# -- induced and glued embeddings ---------------------------------------------


def left_cosets(group: FiniteGroupTable, subgroup: Sequence[int]) -> tuple[np.ndarray, list[list[int]]]:
    if not group.is_subgroup(subgroup):
        raise InputError("H is not a subgroup")
    h = sorted(set(subgroup))
    coset_of = np.full(group.order, -1, dtype=np.int64)
    cosets = []
    for g in group.elements():
        if coset_of[g] < 0:
            c = sorted(group.m(g, x) for x in h)
            coset_of[c] = len(cosets)
            cosets.append(c)
    return coset_of, cosets


def minimal_section(group: FiniteGroupTable, cosets: Sequence[Sequence[int]], gens: Sequence[int] | None = None) -> list[int]:
    """Per coset the representative of least word length, ties broken by index."""
    if gens is None:
        return [min(c) for c in cosets]
    lengths = cayley_distances(group, gens)
    return [min(c, key=lambda x: (lengths[x], x)) for c in cosets]


@dataclass
class InducedEmbedding:
    vectors: np.ndarray
    coset_of: np.ndarray
    section: list[int]
    same_coset_max_error: float
    cross_distances: np.ndarray  # all cross-coset pair distances
    cross_inner_max: float


def induced_embedding(
    group: FiniteGroupTable,
    subgroup: Sequence[int],
    phi: np.ndarray,
    section: Sequence[int] | None = None,
    gens: Sequence[int] | None = None,
) -> InducedEmbedding:
    """phi_hat(x) = phi(sigma(xH)^-1 x) (x) delta_{xH}; ``phi`` has one row per element of sorted(H)."""
    h = sorted(set(subgroup))
    coset_of, cosets = left_cosets(group, h)
    sec = list(section) if section is not None else minimal_section(group, cosets, gens)
    if len(sec) != len(cosets) or any(coset_of[s] != i for i, s in enumerate(sec)):
        raise InputError("section does not pick one representative from each coset")
    phi = np.asarray(phi, dtype=float)
    if phi.shape[0] != len(h):
        raise InputError("phi needs one row per subgroup element")
    pos = {x: i for i, x in enumerate(h)}
    dim = phi.shape[1]
    out = np.zeros((group.order, dim * len(cosets)))
    inner = np.empty(group.order, dtype=np.int64)
    for x in group.elements():
        c = int(coset_of[x])
        xp = group.m(group.i(sec[c]), x)
        inner[x] = pos[xp]
        out[x, c * dim:(c + 1) * dim] = phi[pos[xp]]
    e = pair_distances(out)
    sub_e = pair_distances(phi)
    same = coset_of[:, None] == coset_of[None, :]
    err = float(np.abs(e - sub_e[np.ix_(inner, inner)])[same].max())
    gram = out @ out.T
    cross = ~same
    return InducedEmbedding(out, coset_of, sec, err, e[cross], float(np.abs(gram[cross]).max()) if cross.any() else 0.0)


@dataclass
class GlueReport:
    vectors: np.ndarray
    eps_partition: float  # max over R-pairs of sum_i |w_i(x) - w_i(y)|
    eps_local: float  # max over R-pairs and active pieces of ||xi_i(x) - xi_i(y)||
    max_pair: float  # max over R-pairs of ||glued(x) - glued(y)||
    max_norm_error: float

    @property
    def bound(self) -> float:
        return self.eps_local + math.sqrt(self.eps_partition)

    @property
    def passed(self) -> bool:
        return self.max_pair <= self.bound + NORM_TOL and self.max_norm_error <= NORM_TOL


def glue_embeddings(
    weights: np.ndarray,
    locals_: Sequence[tuple[Sequence[int], np.ndarray]],
    dist: np.ndarray,
    R: float,
) -> GlueReport:
    """glued(x) = (sqrt(w_i(x)) xi_i(x))_i.

    ``weights`` is points x pieces; ``locals_[i]`` is (domain points, unit vectors on them),
    where the domain must contain every point within R of the support of piece i.
    """
    w = np.asarray(weights, dtype=float)
    n, k = w.shape
    if (w < 0).any():
        raise InputError("weights must be non-negative")
    if not np.allclose(w.sum(axis=1), 1.0, atol=NORM_TOL, rtol=0):
        raise InputError("weights must sum to 1 at every point")
    if len(locals_) != k:
        raise InputError("one local embedding per piece is required")
    dist = np.asarray(dist)
    full = []
    for i, (dom, xi) in enumerate(locals_):
        xi = np.asarray(xi, dtype=float)
        table = np.full((n, xi.shape[1]), np.nan)
        table[list(dom)] = xi
        support = np.flatnonzero(w[:, i] > 0)
        need = np.flatnonzero((dist[support] <= R).any(axis=0)) if len(support) else support
        if np.isnan(table[need]).any():
            raise InputError(f"local embedding {i} is not defined on the R-enlargement of its support")
        full.append(table)
    glued = np.hstack([np.sqrt(w[:, [i]]) * np.nan_to_num(full[i]) for i in range(k)])
    norm_err = float(np.abs(np.linalg.norm(glued, axis=1) - 1).max())
    xs, ys = np.nonzero(dist <= R)
    eps_p = float(np.abs(w[xs] - w[ys]).sum(axis=1).max()) if len(xs) else 0.0
    eps_l = 0.0
    for i in range(k):
        active = (w[xs, i] > 0) | (w[ys, i] > 0)
        if active.any():
            diff = full[i][xs[active]] - full[i][ys[active]]
            eps_l = max(eps_l, float(np.linalg.norm(diff, axis=1).max()))
    max_pair = float(np.linalg.norm(glued[xs] - glued[ys], axis=1).max()) if len(xs) else 0.0
    return GlueReport(glued, eps_p, eps_l, max_pair, norm_err)


def write_embedding_csv(tables: Sequence[np.ndarray], path: str | Path) -> None:
    dim = max(t.shape[1] for t in tables)
    lines = ["component,point," + ",".join(f"coord_{i}" for i in range(dim))]
    for c, t in enumerate(tables, 1):
        for p, row in enumerate(t):
            vals = [f"{x:.12g}" for x in row] + [""] * (dim - len(row))
            lines.append(f"{c},{p}," + ",".join(vals))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
