"""Facing triples, well-separation degrees, the d_L metric and chain profiles.

Pairwise hyperplane relations are derived once per skeleton and cached on it
(write-once), as are the well-separation degrees.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Hashable, Sequence

import numpy as np

from coarsegeom import caps
from coarsegeom.cube_complex import CubeSkeleton, is_geodesic, path_hyperplanes, separates
from coarsegeom.errors import ValidationError
from coarsegeom.metric_core import (
    DeltaCertificate,
    FiniteMetricSpace,
    SublinearFn,
    hyperbolicity,
    leq,
    scale_number,
    to_fraction,
)


@dataclass(frozen=True)
class _Relations:
    cross: np.ndarray  # [h, k] hyperplanes cross (all four quadrants non-empty)
    side_of: np.ndarray  # [h, k] +1/-1: side of h holding k (only meaningful when disjoint)


def relations(s: CubeSkeleton) -> _Relations:
    rel = s.cache.get("relations")
    if rel is None:
        plus = s.side_matrix.astype(np.int64)
        minus = 1 - plus
        pp, pm, mp, mm = plus @ plus.T, plus @ minus.T, minus @ plus.T, minus @ minus.T
        cross = (pp > 0) & (pm > 0) & (mp > 0) & (mm > 0)
        H = len(s.hyperplanes)
        rep = np.array([min(h.edge_class)[0] for h in s.hyperplanes], dtype=np.int64)
        side_of = np.where(s.side_matrix[:, rep] if H else np.zeros((0, 0), bool), 1, -1)
        rel = _Relations(cross, side_of)
        s.cache["relations"] = rel
    return rel


def crosses(s: CubeSkeleton, h: Any, k: Any) -> bool:
    return bool(relations(s).cross[s.hid(h), s.hid(k)])


def is_facing_triple(s: CubeSkeleton, h1: Any, h2: Any, h3: Any) -> bool:
    """Pairwise disjoint hyperplanes none of which separates the other two."""
    a, b, c = s.hid(h1), s.hid(h2), s.hid(h3)
    if len({a, b, c}) != 3:
        raise ValidationError("duplicate-hyperplane", "a triple needs three distinct hyperplanes", [a, b, c])
    return _facing(relations(s), a, b, c)


def _facing(rel: _Relations, a: int, b: int, c: int) -> bool:
    cr, so = rel.cross, rel.side_of
    if cr[a, b] or cr[a, c] or cr[b, c]:
        return False
    return so[a, b] == so[a, c] and so[b, a] == so[b, c] and so[c, a] == so[c, b]


# --------------------------------------------------------------------------
# Well-separation degree
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SeparationReport:
    """Degree of a hyperplane pair: the largest facing-triple-free set crossing both."""

    pair: tuple[str, str]
    disjoint: bool
    degree: int
    witness: tuple[str, ...]

    def well_separated(self, L: int) -> bool:
        return self.disjoint and self.degree <= L

    def to_json(self) -> dict[str, Any]:
        return {"pair": list(self.pair), "disjoint": self.disjoint, "degree": self.degree, "witness": list(self.witness)}


def max_facing_free(s: CubeSkeleton, members: Sequence[int]) -> tuple[int, ...]:
    """Largest subset of ``members`` containing no facing triple.

    Branch-and-bound over the 3-uniform facing hypergraph.  The lower bound
    starts from a greedy solution; the upper bound covers the candidates by
    groups in which every triple faces (each group contributes at most two).
    """
    members = list(members)
    rel = relations(s)
    m = len(members)
    forb = [[0] * m for _ in range(m)]
    any_facing = False
    for i in range(m):
        for j in range(i + 1, m):
            mask = 0
            for k in range(j + 1, m):
                if _facing(rel, members[i], members[j], members[k]):
                    mask |= 1 << k
                    forb[i][k] |= 1 << j
                    forb[j][k] |= 1 << i
                    any_facing = True
            forb[i][j] |= mask
    for i in range(m):
        for j in range(i):
            forb[i][j] = forb[j][i]
    if not any_facing:
        return tuple(members)

    def greedy(order: list[int]) -> list[int]:
        chosen: list[int] = []
        blocked = 0
        for v in order:
            if not (blocked >> v) & 1:
                for w in chosen:
                    blocked |= forb[v][w]
                chosen.append(v)
        return chosen

    best = greedy(list(range(m)))

    def cover_bound(cand: int) -> int:
        groups: list[list[int]] = []
        c = cand
        while c:
            v = (c & -c).bit_length() - 1
            c &= c - 1
            for g in groups:
                if len(g) == 1 or all((forb[g[a]][g[b]] >> v) & 1 for a in range(len(g)) for b in range(a + 1, len(g))):
                    g.append(v)
                    break
            else:
                groups.append([v])
        return sum(min(len(g), 2) for g in groups)

    def search(chosen: list[int], cand: int) -> None:
        nonlocal best
        if len(chosen) + cand.bit_count() <= len(best):
            return
        if not cand:
            best = list(chosen)
            return
        if len(chosen) + cover_bound(cand) <= len(best):
            return
        v = (cand & -cand).bit_length() - 1
        rest = cand & ~(1 << v)
        blocked = 0
        for w in chosen:
            blocked |= forb[v][w]
        chosen.append(v)
        search(chosen, rest & ~blocked)
        chosen.pop()
        search(chosen, rest)

    search([], (1 << m) - 1)
    out = tuple(sorted(members[i] for i in best))
    if any(_facing(rel, a, b, c) for i, a in enumerate(out) for j, b in enumerate(out[i + 1 :], i + 1) for c in out[j + 1 :]):
        raise RuntimeError("well-separation witness contains a facing triple")
    return out


def crossing_both(s: CubeSkeleton, h: int, k: int) -> tuple[int, ...]:
    cr = relations(s).cross
    return tuple(int(i) for i in np.flatnonzero(cr[h] & cr[k]))


def _degree_record(s: CubeSkeleton, h: int, k: int) -> tuple[int, tuple[int, ...]]:
    cache = s.cache.setdefault("degree", {})
    key = (min(h, k), max(h, k))
    if key not in cache:
        both = crossing_both(s, h, k)
        by_set = s.cache.setdefault("degree_by_set", {})
        if both not in by_set:
            by_set[both] = max_facing_free(s, both)
        cache[key] = (len(by_set[both]), by_set[both])
    return cache[key]


def well_separation_degree(s: CubeSkeleton, h: Any, hp: Any) -> SeparationReport:
    a, b = s.hid(h), s.hid(hp)
    if a == b:
        raise ValidationError("same-hyperplane", "well-separation needs two distinct hyperplanes", a)
    degree, wit = _degree_record(s, a, b)
    hs = s.hyperplanes
    return SeparationReport(
        (hs[a].id, hs[b].id),
        not bool(relations(s).cross[a, b]),
        degree,
        tuple(hs[i].id for i in wit),
    )


def degree_matrix(s: CubeSkeleton) -> np.ndarray:
    """Well-separation degree of every pair (``-1`` on the diagonal)."""
    H = len(s.hyperplanes)
    out = np.full((H, H), -1, dtype=np.int64)
    for a in range(H):
        for b in range(a + 1, H):
            out[a, b] = out[b, a] = _degree_record(s, a, b)[0]
    return out


def well_separated_matrix(s: CubeSkeleton, L: int) -> np.ndarray:
    deg = degree_matrix(s)
    ws = (~relations(s).cross) & (deg >= 0) & (deg <= L)
    np.fill_diagonal(ws, False)
    return ws


# --------------------------------------------------------------------------
# d_L
# --------------------------------------------------------------------------


def _xside_sizes(s: CubeSkeleton, x: int) -> np.ndarray:
    side = s.side_matrix
    plus = side.sum(axis=1)
    return np.where(side[:, x], plus, len(s.vertices) - plus)


def _longest_chain(order: Sequence[int], ws: np.ndarray) -> list[int]:
    """Longest path in the DAG on ``order`` whose edges are well-separated pairs."""
    best = [1] * len(order)
    prev = [-1] * len(order)
    for j, k in enumerate(order):
        for i in range(j):
            if ws[order[i], k] and best[i] + 1 > best[j]:
                best[j], prev[j] = best[i] + 1, i
    if not order:
        return []
    j = max(range(len(order)), key=lambda t: (best[t], -t))
    out = []
    while j >= 0:
        out.append(order[j])
        j = prev[j]
    return out[::-1]


def _max_clique(nodes: Sequence[int], adj: np.ndarray) -> list[int]:
    nodes = list(nodes)
    m = len(nodes)
    nb = [sum(1 << j for j in range(m) if j != i and adj[nodes[i], nodes[j]]) for i in range(m)]
    best: list[int] = []

    def colour_bound(cand: int) -> int:
        colours = 0
        c = cand
        while c:
            colours += 1
            avail = c
            while avail:
                v = (avail & -avail).bit_length() - 1
                avail &= ~nb[v] & ~(1 << v)
                c &= ~(1 << v)
        return colours

    def search(chosen: list[int], cand: int) -> None:
        nonlocal best
        if not cand:
            if len(chosen) > len(best):
                best = list(chosen)
            return
        if len(chosen) + colour_bound(cand) <= len(best):
            return
        v = (cand & -cand).bit_length() - 1
        chosen.append(v)
        search(chosen, cand & nb[v])
        chosen.pop()
        search(chosen, cand & ~(1 << v))

    search([], (1 << m) - 1)
    return [nodes[i] for i in best]


def dl_chain(s: CubeSkeleton, L: int, x: Hashable, y: Hashable, pairwise: bool = False) -> list[str]:
    """A maximum L-well-separated family separating ``x`` from ``y``, nearest ``x`` first."""
    if L < 0:
        raise ValidationError("bad-L", "L must be a non-negative integer", L)
    i, j = s.idx(x), s.idx(y)
    if i == j:
        return []
    sizes = _xside_sizes(s, i)
    seps = sorted((h for h in range(len(s.hyperplanes)) if separates(s, h, i, j)), key=lambda h: (sizes[h], h))
    ws = well_separated_matrix(s, L)
    chain = _max_clique(seps, ws) if pairwise else _longest_chain(seps, ws)
    chain.sort(key=lambda h: (sizes[h], h))
    return [s.hyperplanes[h].id for h in chain]


def dl_distance(s: CubeSkeleton, L: int, x: Hashable, y: Hashable, pairwise: bool = False) -> int:
    """Length of the longest chain of separating hyperplanes with L-well-separated consecutive pairs.

    With ``pairwise=True`` every pair of the family must be L-well-separated.
    """
    return len(dl_chain(s, L, x, y, pairwise))


def dl_matrix(s: CubeSkeleton, L: int, pairwise: bool = False) -> np.ndarray:
    """All-pairs d_L, vectorised over targets for each source."""
    if L < 0:
        raise ValidationError("bad-L", "L must be a non-negative integer", L)
    n, H = len(s.vertices), len(s.hyperplanes)
    out = np.zeros((n, n), dtype=np.int64)
    if H == 0:
        return out
    ws = well_separated_matrix(s, L)
    side = s.side_matrix
    if pairwise:
        for a in range(n):
            for b in range(a + 1, n):
                seps = [h for h in range(H) if side[h, a] != side[h, b]]
                out[a, b] = out[b, a] = len(_max_clique(seps, ws))
        return out
    for x in range(n):
        order = np.argsort(_xside_sizes(s, x), kind="stable")
        sep = (side != side[:, x : x + 1]).T  # [y, h]
        best = np.zeros((n, H), dtype=np.int64)
        for pos, k in enumerate(order):
            if pos:
                prev = order[:pos]
                reach = (best[:, prev] * ws[prev, k][None, :]).max(axis=1)
            else:
                reach = 0
            best[:, k] = sep[:, k] * (1 + reach)
        out[x] = best.max(axis=1)
    return out


@dataclass(frozen=True)
class DLSpace:
    """The vertex set of a skeleton with the d_L metric and its verification report."""

    base: CubeSkeleton
    L: int
    dl: np.ndarray
    pairwise: bool = False
    report: dict[str, Any] = field(default_factory=dict, compare=False)

    def metric_space(self, basepoint: Hashable = None) -> FiniteMetricSpace:
        return FiniteMetricSpace(self.base.vertices, self.dl.tolist(), basepoint)

    def d(self, x: Hashable, y: Hashable) -> int:
        return int(self.dl[self.base.idx(x), self.base.idx(y)])

    def gromov_product(self, x: Hashable, y: Hashable, o: Hashable) -> Fraction:
        return Fraction(self.d(o, x) + self.d(o, y) - self.d(x, y), 2)

    def to_json(self) -> dict[str, Any]:
        return {
            "L": self.L,
            "convention": "pairwise" if self.pairwise else "consecutive",
            "vertices": list(self.base.vertices),
            "dl": self.dl.tolist(),
            "report": self.report,
        }


def build_dl_space(s: CubeSkeleton, L: int, pairwise: bool = False, verify: bool = True, jobs: int = 1) -> DLSpace:
    """Full d_L matrix; with ``verify`` the triangle inequality and the 9(L+2) bound are checked."""
    caps.enforce("dl_vertices", len(s.vertices))
    dl = dl_matrix(s, L, pairwise)
    dl.setflags(write=False)
    n = len(s.vertices)
    report: dict[str, Any] = {"vertices": n, "hyperplanes": len(s.hyperplanes)}
    zero = [[s.vertices[a], s.vertices[b]] for a, b in zip(*np.nonzero(dl == 0)) if a < b]
    report["zero_distance_pairs"] = zero
    report["symmetric"] = bool((dl == dl.T).all())
    report["dominated_by_l1"] = bool((dl <= s.l1_matrix).all())
    if verify:
        tri = True
        for z in range(n):
            if (dl[:, z, None] + dl[None, z, :] < dl).any():
                tri = False
                break
        report["triangle_inequality"] = tri
        bound = 9 * (L + 2)
        report["delta_bound"] = bound
        if not zero:
            cert: DeltaCertificate = hyperbolicity(FiniteMetricSpace(s.vertices, dl.tolist()), jobs=jobs)
            report["delta"] = str(cert.delta)
            report["delta_witness"] = list(cert.witness)
            report["delta_within_bound"] = cert.delta <= bound
    return DLSpace(s, L, dl, pairwise, report)


# --------------------------------------------------------------------------
# Geodesic chain profiles and the chain-surgery check
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ChainProfile:
    """Longest chain crossed by a geodesic with time-dependent well-separation."""

    m: int
    hyperplanes: tuple[str, ...]
    times: tuple[int, ...]
    degrees: tuple[int, ...]
    dl_endpoints: int

    def to_json(self) -> dict[str, Any]:
        return {
            "m": self.m,
            "hyperplanes": list(self.hyperplanes),
            "times": list(self.times),
            "degrees": list(self.degrees),
            "dl_endpoints": self.dl_endpoints,
        }


def chain_profile(s: CubeSkeleton, path: Sequence[Hashable], L: int, k: SublinearFn, c: Any) -> ChainProfile:
    """Profile a geodesic edge path.

    The edge ``path[j] -> path[j+1]`` crosses its hyperplane at time ``j+1``.
    Consecutive chain members must be disjoint with degree at most
    ``c * k(t)`` where ``t`` is the later crossing time.  The longest such
    chain is found exactly by dynamic programming.  ``dl_endpoints`` is the
    d_L distance between the path's endpoints.
    """
    c = to_fraction(c)
    if c <= 0:
        raise ValidationError("bad-constant", "c must be positive", str(c))
    path = list(path)
    if not path:
        raise ValidationError("bad-path", "path must contain at least one vertex")
    if not is_geodesic(s, path):
        raise ValidationError("non-geodesic", "path is not a geodesic edge path", path)
    hs = path_hyperplanes(s, path)
    m = len(hs)
    if m == 0:
        return ChainProfile(0, (), (), (), 0)
    cross = relations(s).cross
    thresholds = [scale_number(c, k(t)) for t in range(1, m + 1)]
    best = [1] * m
    prev = [-1] * m
    deg = [0] * m
    for j in range(m):
        for i in range(j):
            if cross[hs[i], hs[j]]:
                continue
            dij = _degree_record(s, hs[i], hs[j])[0]
            if leq(Fraction(dij), thresholds[j]) and best[i] + 1 > best[j]:
                best[j], prev[j], deg[j] = best[i] + 1, i, dij
    j = max(range(m), key=lambda t: (best[t], -t))
    idx = []
    while j >= 0:
        idx.append(j)
        j = prev[j]
    idx.reverse()
    return ChainProfile(
        len(idx),
        tuple(s.hyperplanes[hs[j]].id for j in idx),
        tuple(j + 1 for j in idx),
        tuple(deg[j] for j in idx[1:]),
        dl_distance(s, L, path[0], path[-1]),
    )


@dataclass(frozen=True)
class SurgeryReport:
    """Outcome of the chain-surgery inequality ``(x_i|x_j)_o >= l0 - 2 - L`` in d_L."""

    status: str  # "pass", "fail" or "hypothesis-unmet"
    l0: int
    bound: int
    product: Fraction | None
    reason: str = ""

    @property
    def ok(self) -> bool:
        return self.status != "fail"

    def to_json(self) -> dict[str, Any]:
        return {
            "status": self.status,
            "l0": self.l0,
            "bound": self.bound,
            "product": None if self.product is None else str(self.product),
            "reason": self.reason,
        }


def check_chain_surgery(
    s: CubeSkeleton,
    L: int,
    chain: Sequence[Any],
    x_i: Hashable,
    x_j: Hashable,
    o: Hashable,
    dl: DLSpace | None = None,
) -> SurgeryReport:
    """Check the Gromov-product lower bound forced by a well-separated chain.

    ``l0`` is the number of chain members separating ``o`` from both ``x_i``
    and ``x_j``.  The chain must be nested (it is re-sorted from ``o``
    outwards) with consecutive members L-well-separated; otherwise the report
    says ``hypothesis-unmet``.
    """
    hs = [s.hid(h) for h in chain]
    oi, a, b = s.idx(o), s.idx(x_i), s.idx(x_j)
    if len(set(hs)) != len(hs):
        return SurgeryReport("hypothesis-unmet", 0, 0, None, "repeated hyperplane")
    sizes = _xside_sizes(s, oi)
    hs.sort(key=lambda h: (sizes[h], h))
    side = s.side_matrix
    for p, q in zip(hs, hs[1:]):
        op = side[p] if side[p, oi] else ~side[p]
        oq = side[q] if side[q, oi] else ~side[q]
        if (op & ~oq).any():
            return SurgeryReport("hypothesis-unmet", 0, 0, None, "chain is not nested")
        if _degree_record(s, p, q)[0] > L:
            return SurgeryReport("hypothesis-unmet", 0, 0, None, "consecutive pair not L-well-separated")
    l0 = sum(1 for h in hs if separates(s, h, oi, a) and separates(s, h, oi, b))
    bound = l0 - 2 - L
    if dl is None or dl.L != L or dl.base is not s:
        dl = build_dl_space(s, L, verify=False)
    prod = dl.gromov_product(x_i, x_j, o)
    return SurgeryReport("pass" if prod >= bound else "fail", l0, bound, prod)


def common_separator_chain(s: CubeSkeleton, L: int, o: Hashable, x_i: Hashable, x_j: Hashable) -> list[str]:
    """Longest consecutively L-well-separated chain separating ``o`` from both points."""
    oi, a, b = s.idx(o), s.idx(x_i), s.idx(x_j)
    sizes = _xside_sizes(s, oi)
    common = [h for h in range(len(s.hyperplanes)) if separates(s, h, oi, a) and separates(s, h, oi, b)]
    common.sort(key=lambda h: (sizes[h], h))
    return [s.hyperplanes[h].id for h in _longest_chain(common, well_separated_matrix(s, L))]


def crossed_facing_triple(s: CubeSkeleton, path: Sequence[Hashable]) -> tuple[str, str, str] | None:
    """A facing triple among the hyperplanes crossed by ``path``, if any."""
    rel = relations(s)
    hs = sorted(set(path_hyperplanes(s, path)))
    for i, a in enumerate(hs):
        for j in range(i + 1, len(hs)):
            for c in hs[j + 1 :]:
                if _facing(rel, a, hs[j], c):
                    return tuple(s.hyperplanes[h].id for h in (a, hs[j], c))
    return None

