"""Quasi-rulers: verification, reparametrisation, geodesic completion and product bounds."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Hashable, Mapping, Sequence

import numpy as np

from coarsegeom import caps
from coarsegeom.errors import ValidationError
from coarsegeom.metric_core import (
    DiscretePath,
    FiniteMetricSpace,
    gromov_product,
    quasi_geodesic_violation,
    to_fraction,
)


@dataclass(frozen=True)
class RulerCertificate:
    """Verdict of the quasi-ruler test.

    ``violation`` is ``("triple", i, j, k)`` for an almost-additivity failure
    or ``("jump", i)`` when ``d(p_i, p_{i+1}) >= D``.
    """

    path: DiscretePath
    D: Fraction
    verdict: bool
    violation: tuple | None = None

    def to_json(self) -> dict[str, Any]:
        return {"D": str(self.D), "verdict": self.verdict, "violation": None if self.violation is None else list(self.violation)}


def _path_matrix(path: DiscretePath) -> tuple[np.ndarray, int]:
    m, scale = path.space.scaled
    ids = np.array(path.indices(), dtype=np.int64)
    return m[np.ix_(ids, ids)], scale


def check_ruler(path: DiscretePath, D: Any) -> RulerCertificate:
    """Exhaustive test of ``d(p_i,p_j) + d(p_j,p_k) <= d(p_i,p_k) + D`` for ``i<j<k`` and jumps ``< D``.

    The first violating triple in lexicographic order wins; jumps are checked
    only when every triple passes.
    """
    D = to_fraction(D)
    if D <= 0:
        raise ValidationError("bad-D", "D must be positive", str(D))
    if len(path) < 1:
        raise ValidationError("bad-path", "a ruler needs at least one point")
    caps.enforce("ruler_points", len(path))
    dm, scale = _path_matrix(path)
    m = len(path)
    # compare q * excess with p where D * scale = p / q, keeping numpy on integers
    p, q = (D * scale).numerator, (D * scale).denominator
    for i in range(m - 2):
        row = dm[i, i + 1 :]
        excess = row[:, None] + dm[i + 1 :, i + 1 :] - row[None, :]
        bad = np.triu(q * excess > p, k=1)
        if bad.any():
            j, k = map(int, np.argwhere(bad)[0])
            return RulerCertificate(path, D, False, ("triple", i, i + 1 + j, i + 1 + k))
    for i in range(m - 1):
        if q * dm[i, i + 1] >= p:
            return RulerCertificate(path, D, False, ("jump", i))
    return RulerCertificate(path, D, True)


def reparametrisation_constants(D: Any, eps: Any) -> tuple[Fraction, Fraction]:
    """``K = max(2D+eps, 1/eps)`` and ``C = 2(3D+eps) + 3D + eps + 1/K``."""
    D, eps = to_fraction(D), to_fraction(eps)
    if D <= 0 or not 0 < eps < D:
        raise ValidationError("bad-constants", "need D > 0 and 0 < eps < D", [str(D), str(eps)])
    K = max(2 * D + eps, 1 / eps)
    C = 2 * (3 * D + eps) + 3 * D + eps + 1 / K
    return K, C


@dataclass(frozen=True)
class Reparametrisation:
    """Quasi-geodesic parametrisation of a finite ruler.

    ``times`` has one entry per path point: integers at the anchors and
    linear interpolation between consecutive anchors.
    """

    times: tuple[Fraction, ...]
    K: Fraction
    C: Fraction
    anchors: tuple[int, ...]

    def to_json(self) -> dict[str, Any]:
        return {
            "times": [str(t) for t in self.times],
            "K": str(self.K),
            "C": str(self.C),
            "anchors": list(self.anchors),
        }


def select_anchors(path: DiscretePath, D: Fraction, eps: Fraction) -> list[int]:
    """Start at index 0; the next anchor is the first later index farther than ``D+eps``; the last index closes."""
    space = path.space
    pts = path.points
    anchors = [0]
    for i in range(1, len(pts)):
        if space.d(pts[anchors[-1]], pts[i]) > D + eps:
            anchors.append(i)
    if anchors[-1] != len(pts) - 1:
        anchors.append(len(pts) - 1)
    return anchors


def reparametrise(path: DiscretePath, D: Any, eps: Any) -> Reparametrisation:
    """Turn a finite ruler into a (K, C)-quasi-geodesic with constants depending only on ``D, eps``.

    The quasi-geodesic inequalities are verified on every pair of path points
    (anchors included) before returning.
    """
    D, eps = to_fraction(D), to_fraction(eps)
    K, C = reparametrisation_constants(D, eps)
    cert = check_ruler(path, D)
    if not cert.verdict:
        raise ValidationError("not-a-ruler", "path fails the quasi-ruler test", list(cert.violation))
    anchors = select_anchors(path, D, eps)
    times: list[Fraction] = [Fraction(0)] * len(path)
    for a, (lo, hi) in enumerate(zip(anchors, anchors[1:])):
        span = hi - lo
        for r in range(span + 1):
            times[lo + r] = a + Fraction(r, span)
    if len(anchors) == 1:
        times = [Fraction(0)]
    bad = quasi_geodesic_violation(path.space, path.points, times, K, C)
    if bad is not None:
        raise RuntimeError(f"reparametrisation violates its own constants at {bad}")
    return Reparametrisation(tuple(times), K, C, tuple(anchors))


# --------------------------------------------------------------------------
# Geodesic completion
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CompletionGraph:
    """Weighted graph making a quasi-ruled space geodesic.

    ``nodes`` are ``(id, kind, data)`` with kind ``base`` (data: point id) or
    ``subdivision`` (data: ``[x, y, k]``, the node at ``kD`` on the line from
    ``x`` to ``y``).  ``dprime`` is the exact all-pairs shortest-path matrix.
    """

    base: FiniteMetricSpace
    D: Fraction
    nodes: tuple[tuple[str, str, Any], ...]
    edges: tuple[tuple[int, int, Fraction, str], ...]
    dprime: tuple[tuple[Fraction, ...], ...]
    certificate: dict[str, Any] = field(default_factory=dict, compare=False)

    def base_index(self, p: Hashable) -> int:
        return self.base.idx(p)

    def to_json(self) -> dict[str, Any]:
        return {
            "base": self.base.to_json(),
            "D": str(self.D),
            "nodes": [{"id": i, "kind": k, "data": d} for i, k, d in self.nodes],
            "edges": [[u, v, str(w), kind] for u, v, w, kind in self.edges],
            "dprime": [[str(v) for v in row] for row in self.dprime],
            "certificate": self.certificate,
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> CompletionGraph:
        return cls(
            FiniteMetricSpace.from_json(data["base"]),
            to_fraction(data["D"]),
            tuple((n["id"], n["kind"], n["data"]) for n in data["nodes"]),
            tuple((int(u), int(v), to_fraction(w), kind) for u, v, w, kind in data["edges"]),
            tuple(tuple(to_fraction(v) for v in row) for row in data["dprime"]),
            data.get("certificate", {}),
        )


def _apsp(n: int, edges: Sequence[tuple[int, int, Fraction, str]]) -> list[list[Fraction]]:
    """Exact all-pairs shortest paths: Dijkstra from every node on an integer rescaling."""
    scale = math.lcm(*(w.denominator for _, _, w, _ in edges)) if edges else 1
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for u, v, w, _ in edges:
        wi = w.numerator * (scale // w.denominator)
        adj[u].append((v, wi))
        adj[v].append((u, wi))
    out = []
    for s in range(n):
        dist = [None] * n
        dist[s] = 0
        heap = [(0, s)]
        while heap:
            du, u = heapq.heappop(heap)
            if du != dist[u]:
                continue
            for v, w in adj[u]:
                nd = du + w
                if dist[v] is None or nd < dist[v]:
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        if any(d is None for d in dist):
            raise RuntimeError("completion graph is disconnected")
        out.append([Fraction(d, scale) for d in dist])
    return out


def _orient(path: DiscretePath, x: Hashable, y: Hashable) -> DiscretePath | None:
    if path.points[0] == x and path.points[-1] == y:
        return path
    if path.points[0] == y and path.points[-1] == x:
        return DiscretePath(path.space, path.points[::-1])
    return None


def geodesic_completion(
    base: FiniteMetricSpace,
    rulers: Mapping[tuple[Hashable, Hashable], DiscretePath],
    D: Any,
) -> CompletionGraph:
    """Build the completion graph and certify it.

    Every unordered pair gets a line of length ``max(D/2, d)``, oriented from
    the earlier point to the later one.  For ``d > D`` the line is subdivided
    at ``kD`` for integers ``0 < k < d/D - 1/2`` and each subdivision node is
    joined by an edge of length ``2D`` to the earliest ruler point at distance
    within ``D/2`` of ``kD`` from the line's start.
    """
    D = to_fraction(D)
    if D <= 0:
        raise ValidationError("bad-D", "D must be positive", str(D))
    pts = base.points
    n = len(pts)
    lookup: dict[frozenset, DiscretePath] = {}
    for (a, b), r in rulers.items():
        key = frozenset((a, b))
        if len(key) != 2:
            raise ValidationError("bad-ruler", "rulers must join two distinct points", [a, b])
        if _orient(r, a, b) is None:
            raise ValidationError("bad-ruler", "ruler does not connect its declared pair", [a, b])
        cert = check_ruler(r, D)
        if not cert.verdict:
            raise ValidationError("bad-ruler", "supplied path is not a quasi-ruler", [a, b, list(cert.violation)])
        lookup[key] = r

    nodes: list[tuple[str, str, Any]] = [(f"p{i}", "base", p) for i, p in enumerate(pts)]
    edges: list[tuple[int, int, Fraction, str]] = []
    half = D / 2
    for i in range(n):
        for j in range(i + 1, n):
            x, y = pts[i], pts[j]
            d = base.dist[i][j]
            if d <= D:
                edges.append((i, j, max(half, d), "line"))
                continue
            ruler = lookup.get(frozenset((x, y)))
            if ruler is None:
                raise ValidationError("missing-ruler", "pair farther than D needs a ruler", [x, y])
            ruler = _orient(ruler, x, y)
            ks = [k for k in range(1, int(d / D) + 2) if k < d / D - Fraction(1, 2)]
            prev, pos = i, Fraction(0)
            for k in ks:
                lo, hi = k * D - half, k * D + half
                hit = next((p for p in ruler.points if lo <= base.d(x, p) <= hi), None)
                if hit is None:
                    raise ValidationError("ruler-defect", "no ruler point in the required annulus", [x, y, k])
                node = len(nodes)
                nodes.append((f"s{i}_{j}_{k}", "subdivision", [x, y, k]))
                edges.append((prev, node, k * D - pos, "line"))
                edges.append((node, base.idx(hit), 2 * D, "spoke"))
                prev, pos = node, k * D
            edges.append((prev, j, d - pos, "line"))
    caps.enforce("completion_nodes", len(nodes))
    dprime = _apsp(len(nodes), edges)
    graph = CompletionGraph(base, D, tuple(nodes), tuple(edges), tuple(tuple(r) for r in dprime))
    cert = completion_certificate(graph)
    object.__setattr__(graph, "certificate", cert)
    return graph


def completion_certificate(g: CompletionGraph) -> dict[str, Any]:
    """Check edge lengths, ``d <= d' <= max(d, D/2)`` on base pairs and ``4D``-density of base points."""
    D, half = g.D, g.D / 2
    n = len(g.base)
    weights_ok = all(half <= w <= 2 * D for _, _, w, _ in g.edges)
    lower_ok = upper_ok = exact_ok = True
    worst = Fraction(0)
    for i in range(n):
        for j in range(n):
            d, dp = g.base.dist[i][j], g.dprime[i][j]
            if dp < d:
                lower_ok = False
            bound = d if i == j else max(d, half)
            if dp > bound:
                upper_ok = False
            if dp != bound:
                exact_ok = False
            worst = max(worst, dp - d)
    cover = max(min(g.dprime[v][b] for b in range(n)) for v in range(len(g.nodes)))
    return {
        "edge_weights_in_range": weights_ok,
        "lower_bound": lower_ok,
        "upper_bound": upper_ok,
        "equals_max_d_half_D": exact_ok,
        "max_excess": str(worst),
        "coarse_surjectivity": str(cover),
        "surjective_within_4D": cover <= 4 * D,
        "ok": weights_ok and lower_ok and upper_ok and cover <= 4 * D,
    }


# --------------------------------------------------------------------------
# Gromov-product bounds along two rulers
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ProductBoundReport:
    """Both product-bound conclusions for one pair ``(x', y')``.

    ``status`` is ``pass``, ``fail`` or ``inconclusive`` (the depth hypothesis
    fails for the finite stand-in).  ``stand_in`` is the Gromov product of
    the two deepest points, used in place of the product of the ideal
    endpoints.
    """

    status: str
    product_ok: bool
    distance_ok: bool
    stand_in: Fraction
    product: Fraction
    distance: Fraction
    note: str = "deepest-point Gromov product substituted for the ideal endpoints"

    def to_json(self) -> dict[str, Any]:
        return {
            "status": self.status,
            "product_ok": self.product_ok,
            "distance_ok": self.distance_ok,
            "stand_in": str(self.stand_in),
            "product": str(self.product),
            "distance": str(self.distance),
            "note": self.note,
        }


def check_product_bound(
    space: FiniteMetricSpace,
    gamma: DiscretePath,
    gamma_p: DiscretePath,
    o: Hashable,
    D: Any,
    delta: Any,
    xp: int,
    yp: int,
) -> ProductBoundReport:
    """Verify ``(x'|y')_o >= min(d(o,x'), d(o,y')) - D - 2 delta`` and
    ``d(x',y') <= D + 2 delta + |d(o,x') - d(o,y')|`` for ``x' = gamma[xp]``, ``y' = gamma_p[yp]``.

    The hypothesis ``d(o,x'), d(o,y') <= (xi|eta)_o + D`` uses the product of
    the final points of the two rulers as the stand-in for ``(xi|eta)_o``.
    """
    D, delta = to_fraction(D), to_fraction(delta)
    for name, g in (("gamma", gamma), ("gamma_p", gamma_p)):
        if not g.points or g.points[0] != o:
            raise ValidationError("bad-ruler", f"{name} must start at o", name)
        cert = check_ruler(g, D)
        if not cert.verdict:
            raise ValidationError("bad-ruler", f"{name} is not a D-quasi-ruler", [name, list(cert.violation)])
    if not (0 <= xp < len(gamma) and 0 <= yp < len(gamma_p)):
        raise ValidationError("bad-index", "x' and y' must index the rulers", [xp, yp])
    x, y = gamma.points[xp], gamma_p.points[yp]
    stand_in = gromov_product(space, gamma.points[-1], gamma_p.points[-1], o)
    dox, doy = space.d(o, x), space.d(o, y)
    prod = gromov_product(space, x, y, o)
    dist = space.d(x, y)
    product_ok = prod >= min(dox, doy) - D - 2 * delta
    distance_ok = dist <= D + 2 * delta + abs(dox - doy)
    if max(dox, doy) > stand_in + D:
        status = "inconclusive"
    else:
        status = "pass" if product_ok and distance_ok else "fail"
    return ProductBoundReport(status, product_ok, distance_ok, stand_in, prod, dist)
