"""One-skeleta of finite CAT(0) cube complexes, handled as median graphs.

Hyperplanes are the square-equivalence classes of edges.  Halfspaces are
stored as Python-int bitmaps over vertex indices (bit ``i`` is vertex ``i``),
and also as a dense boolean side matrix for vectorised scans.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Hashable, Iterable, Sequence

import numpy as np

from coarsegeom import caps
from coarsegeom.errors import ValidationError
from coarsegeom.metric_core import FiniteMetricSpace


@dataclass(frozen=True)
class Hyperplane:
    """A wall class of edges with its two halfspaces.

    ``minus_side`` always contains vertex index 0, which fixes the orientation.
    """

    id: str
    edge_class: frozenset[tuple[int, int]]
    plus_side: int
    minus_side: int

    def side(self, v: int) -> int:
        """``+1`` or ``-1`` for the vertex index ``v``."""
        return 1 if (self.plus_side >> v) & 1 else -1


@dataclass(frozen=True)
class CubeSkeleton:
    """A validated median graph with derived hyperplanes.

    Build instances with :func:`build_skeleton`; the constructor trusts its
    arguments.
    """

    vertices: tuple[Hashable, ...]
    edges: tuple[tuple[int, int], ...]
    hyperplanes: tuple[Hyperplane, ...]
    edge_hyperplane: dict[tuple[int, int], int] = field(compare=False, repr=False)
    cache: dict = field(default_factory=dict, compare=False, repr=False)

    @cached_property
    def index(self) -> dict[Hashable, int]:
        return {v: i for i, v in enumerate(self.vertices)}

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        adj: list[list[int]] = [[] for _ in self.vertices]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return tuple(tuple(sorted(a)) for a in adj)

    @cached_property
    def hyperplane_index(self) -> dict[str, int]:
        return {h.id: i for i, h in enumerate(self.hyperplanes)}

    @cached_property
    def side_matrix(self) -> np.ndarray:
        """Boolean array ``[hyperplane, vertex]``, true on the plus side."""
        n = len(self.vertices)
        out = np.zeros((len(self.hyperplanes), n), dtype=bool)
        for i, h in enumerate(self.hyperplanes):
            bits = h.plus_side
            out[i] = [(bits >> v) & 1 for v in range(n)]
        return out

    @cached_property
    def codes(self) -> np.ndarray:
        """Packed side vectors, one row of ``uint64`` words per vertex."""
        return _pack(self.side_matrix.T)

    @cached_property
    def l1_matrix(self) -> np.ndarray:
        c = self.codes
        out = np.zeros((len(self.vertices), len(self.vertices)), dtype=np.int64)
        for w in range(c.shape[1]):
            out += np.bitwise_count(c[:, None, w] ^ c[None, :, w]).astype(np.int64)
        return out

    @cached_property
    def median_table(self) -> np.ndarray:
        """Dense ``uint16``/``int32`` table ``mu[a, b, c]`` of exact medians."""
        n = len(self.vertices)
        dtype = np.uint16 if n < 2**16 else np.int32
        out = np.empty((n, n, n), dtype=dtype)
        lookup = _CodeLookup(self.codes)
        c = self.codes
        for a in range(n):
            maj = (c[a][None, None, :] & c[:, None, :]) | (c[a][None, None, :] & c[None, :, :]) | (
                c[:, None, :] & c[None, :, :]
            )
            idx = lookup.find(maj.reshape(n * n, -1))
            if (idx < 0).any():
                raise RuntimeError("median table: majority vector is not a vertex")
            out[a] = idx.reshape(n, n)
        return out

    def idx(self, v: Hashable) -> int:
        try:
            return self.index[v]
        except (KeyError, TypeError):
            raise ValidationError("unknown-vertex", f"unknown vertex {v!r}", v) from None

    def hid(self, h: Any) -> int:
        """Resolve a hyperplane given by index or by id string."""
        if isinstance(h, (int, np.integer)) and not isinstance(h, bool):
            if 0 <= int(h) < len(self.hyperplanes):
                return int(h)
        elif h in self.hyperplane_index:
            return self.hyperplane_index[h]
        raise ValidationError("unknown-hyperplane", f"unknown hyperplane {h!r}", str(h))

    def neighbours(self, v: Hashable) -> list[Hashable]:
        return [self.vertices[u] for u in self.adjacency[self.idx(v)]]

    def bfs_distances(self, source: int) -> list[int]:
        dist = [-1] * len(self.vertices)
        dist[source] = 0
        queue = deque([source])
        while queue:
            u = queue.popleft()
            for v in self.adjacency[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        return dist

    def metric_space(self, basepoint: Hashable = None) -> FiniteMetricSpace:
        """The vertex set with the combinatorial metric."""
        cached = self.cache.get("metric_space")
        if cached is None:
            cached = FiniteMetricSpace(self.vertices, self.l1_matrix.tolist())
            self.cache["metric_space"] = cached
        if basepoint is None or basepoint == cached.basepoint:
            return cached
        return cached.with_basepoint(basepoint)

    def to_json(self) -> dict[str, Any]:
        return {
            "vertices": list(self.vertices),
            "edges": [[self.vertices[u], self.vertices[v]] for u, v in self.edges],
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> CubeSkeleton:
        try:
            return build_skeleton(data["vertices"], [tuple(e) for e in data["edges"]])
        except (KeyError, TypeError) as exc:
            raise ValidationError("bad-json", "complex JSON needs 'vertices' and 'edges'") from exc


def _pack(bits: np.ndarray) -> np.ndarray:
    """Pack a boolean ``[rows, nbits]`` array into ``uint64`` words."""
    rows, nbits = bits.shape
    words = max(1, (nbits + 63) // 64)
    padded = np.zeros((rows, words * 64), dtype=bool)
    padded[:, :nbits] = bits
    as_bytes = np.packbits(padded.reshape(rows, words, 64), axis=2, bitorder="little")
    return as_bytes.view(np.uint64).reshape(rows, words)


class _CodeLookup:
    """Exact row lookup of packed side vectors via a sorted void view."""

    def __init__(self, codes: np.ndarray) -> None:
        self.width = codes.shape[1]
        keys = np.ascontiguousarray(codes).view(np.dtype((np.void, 8 * self.width))).ravel()
        self.order = np.argsort(keys)
        self.sorted = keys[self.order]

    def find(self, rows: np.ndarray) -> np.ndarray:
        keys = np.ascontiguousarray(rows).view(np.dtype((np.void, 8 * self.width))).ravel()
        pos = np.searchsorted(self.sorted, keys)
        pos = np.minimum(pos, len(self.sorted) - 1)
        hit = self.sorted[pos] == keys
        return np.where(hit, self.order[pos], -1)


class _UnionFind:
    def __init__(self, n: int) -> None:
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def build_skeleton(
    vertices: Sequence[Hashable],
    edges: Iterable[Sequence[Hashable]],
    validate_median: bool = True,
) -> CubeSkeleton:
    """Validate a median graph and derive its hyperplanes and halfspaces.

    Raises
    ------
    ValidationError
        ``disconnected``, ``non-bipartite``, ``bad-hyperplane`` (a class whose
        removal does not leave exactly two components) or ``non-median`` with
        a violating triple.
    """
    vertices = tuple(vertices)
    n = len(vertices)
    if n == 0:
        raise ValidationError("empty-complex", "a skeleton needs at least one vertex")
    index = {v: i for i, v in enumerate(vertices)}
    if len(index) != n:
        raise ValidationError("duplicate-vertex", "vertex ids must be distinct")
    edge_set: set[tuple[int, int]] = set()
    for e in edges:
        if len(e) != 2:
            raise ValidationError("bad-edge", f"edge {e!r} must have two endpoints")
        try:
            u, v = index[e[0]], index[e[1]]
        except (KeyError, TypeError):
            raise ValidationError("unknown-vertex", f"edge {list(e)!r} uses an undeclared vertex", list(e)) from None
        if u == v:
            raise ValidationError("not-simple", "loops are not allowed", [e[0]])
        key = (min(u, v), max(u, v))
        if key in edge_set:
            raise ValidationError("not-simple", "repeated edge", list(e))
        edge_set.add(key)
    edge_list = tuple(sorted(edge_set))
    adj: list[set[int]] = [set() for _ in range(n)]
    for u, v in edge_list:
        adj[u].add(v)
        adj[v].add(u)

    colour = [-1] * n
    colour[0] = 0
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if colour[v] < 0:
                colour[v] = 1 - colour[u]
                queue.append(v)
            elif colour[v] == colour[u]:
                raise ValidationError("non-bipartite", "graph has an odd cycle", [vertices[u], vertices[v]])
    if min(colour) < 0:
        raise ValidationError("disconnected", "graph is not connected", vertices[colour.index(-1)])

    eid = {e: i for i, e in enumerate(edge_list)}
    uf = _UnionFind(len(edge_list))

    def key(a: int, b: int) -> int:
        return eid[(a, b) if a < b else (b, a)]

    for u in range(n):
        nbrs = sorted(adj[u])
        for i, a in enumerate(nbrs):
            for b in nbrs[i + 1 :]:
                for w in adj[a] & adj[b]:
                    if w != u:
                        uf.union(key(u, a), key(b, w))
                        uf.union(key(u, b), key(a, w))

    classes: dict[int, list[tuple[int, int]]] = {}
    for e, i in eid.items():
        classes.setdefault(uf.find(i), []).append(e)
    ordered = sorted((sorted(c) for c in classes.values()), key=lambda c: c[0])

    hyperplanes = []
    edge_h: dict[tuple[int, int], int] = {}
    for hi, cls in enumerate(ordered):
        removed = set(cls)
        comp = [-1] * n
        ncomp = 0
        for s in range(n):
            if comp[s] >= 0:
                continue
            comp[s] = ncomp
            queue = deque([s])
            while queue:
                u = queue.popleft()
                for v in adj[u]:
                    if comp[v] < 0 and (min(u, v), max(u, v)) not in removed:
                        comp[v] = ncomp
                        queue.append(v)
            ncomp += 1
        if ncomp != 2:
            raise ValidationError(
                "bad-hyperplane",
                f"removing an edge class leaves {ncomp} components",
                [[vertices[u], vertices[v]] for u, v in cls],
            )
        plus = 0
        for v in range(n):
            if comp[v] != comp[0]:
                plus |= 1 << v
        for u, v in cls:
            if comp[u] == comp[v]:
                raise ValidationError("bad-hyperplane", "class edge inside one halfspace", [vertices[u], vertices[v]])
        minus = ((1 << n) - 1) ^ plus
        hyperplanes.append(Hyperplane(f"h{hi}", frozenset(cls), plus, minus))
        for e in cls:
            edge_h[e] = hi

    skel = CubeSkeleton(vertices, edge_list, tuple(hyperplanes), edge_h)
    _check_metric(skel)
    if validate_median:
        _check_median(skel)
    return skel


def _check_metric(s: CubeSkeleton) -> None:
    n = len(s.vertices)
    l1 = s.l1_matrix
    for src in range(n):
        bfs = s.bfs_distances(src)
        row = l1[src]
        for v in range(n):
            if row[v] != bfs[v]:
                raise ValidationError(
                    "non-median",
                    "separating-hyperplane count differs from graph distance",
                    [s.vertices[src], s.vertices[v]],
                )


def _check_median(s: CubeSkeleton) -> None:
    """Every triple has a vertex realising the majority side vector.

    With the hyperplane count already equal to the graph metric, that vertex
    is the unique point of ``I(x,y) & I(y,z) & I(x,z)``.  Exhaustive below the
    ``median_validation`` cap, seeded sampling above it.
    """
    n = len(s.vertices)
    c = s.codes
    lookup = _CodeLookup(c)
    if n <= caps.cap("median_validation"):
        for a in range(n):
            maj = (c[a][None, None, :] & c[a:, None, :]) | (c[a][None, None, :] & c[None, a:, :]) | (
                c[a:, None, :] & c[None, a:, :]
            )
            k = n - a
            idx = lookup.find(maj.reshape(k * k, -1))
            if (idx < 0).any():
                b, cc = divmod(int(np.flatnonzero(idx < 0)[0]), k)
                raise ValidationError(
                    "non-median",
                    "triple has no median vertex",
                    [s.vertices[a], s.vertices[a + b], s.vertices[a + cc]],
                )
    else:
        rng = np.random.default_rng(0)
        trip = rng.integers(0, n, size=(200_000, 3))
        maj = (c[trip[:, 0]] & c[trip[:, 1]]) | (c[trip[:, 0]] & c[trip[:, 2]]) | (c[trip[:, 1]] & c[trip[:, 2]])
        idx = lookup.find(maj)
        if (idx < 0).any():
            a, b, cc = trip[int(np.flatnonzero(idx < 0)[0])]
            raise ValidationError("non-median", "triple has no median vertex", [s.vertices[i] for i in (a, b, cc)])


def l1_distance(s: CubeSkeleton, x: Hashable, y: Hashable) -> int:
    """Number of hyperplanes separating ``x`` from ``y``."""
    i, j = s.idx(x), s.idx(y)
    return sum(1 for h in s.hyperplanes if ((h.plus_side >> i) ^ (h.plus_side >> j)) & 1)


def median(s: CubeSkeleton, x: Hashable, y: Hashable, z: Hashable) -> Hashable:
    """The vertex on the majority side of every hyperplane."""
    i, j, k = s.idx(x), s.idx(y), s.idx(z)
    c = s.codes
    maj = (c[i] & c[j]) | (c[i] & c[k]) | (c[j] & c[k])
    found = _CodeLookup(c).find(maj[None, :])[0]
    if found < 0:
        raise RuntimeError("skeleton invariant breach: majority vector is not a vertex")
    return s.vertices[int(found)]


def separates(s: CubeSkeleton, h: int, i: int, j: int) -> bool:
    plus = s.hyperplanes[h].plus_side
    return bool(((plus >> i) ^ (plus >> j)) & 1)


def halfspace_of(s: CubeSkeleton, h: int, i: int) -> int:
    """Bitmap of the halfspace of ``h`` containing vertex index ``i``."""
    hp = s.hyperplanes[h]
    return hp.plus_side if (hp.plus_side >> i) & 1 else hp.minus_side


@dataclass(frozen=True)
class SeparationOrder:
    """Hyperplanes separating ``x`` from ``y`` with their nesting order.

    ``hyperplanes`` is sorted by the size of the halfspace containing ``x``,
    a linear extension of the order.  ``precedes`` holds the pairs ``(h, k)``
    with the ``x``-halfspace of ``h`` strictly inside that of ``k`` (so ``h``
    is nearer to ``x``).  Pairs absent in both orientations cross.
    """

    x: Hashable
    y: Hashable
    hyperplanes: tuple[int, ...]
    precedes: frozenset[tuple[int, int]]

    def comparable(self, h: int, k: int) -> bool:
        return (h, k) in self.precedes or (k, h) in self.precedes


def separating_hyperplanes(s: CubeSkeleton, x: Hashable, y: Hashable) -> SeparationOrder:
    i, j = s.idx(x), s.idx(y)
    if i == j:
        raise ValidationError("same-vertex", "x and y must differ", x)
    seps = [h for h in range(len(s.hyperplanes)) if separates(s, h, i, j)]
    xside = {h: halfspace_of(s, h, i) for h in seps}
    seps.sort(key=lambda h: (xside[h].bit_count(), h))
    prec = set()
    for a in seps:
        for b in seps:
            if a != b and xside[a] & ~xside[b] == 0:
                prec.add((a, b))
    return SeparationOrder(x, y, tuple(seps), frozenset(prec))


def edge_hyperplane(s: CubeSkeleton, u: int, v: int) -> int:
    key = (u, v) if u < v else (v, u)
    try:
        return s.edge_hyperplane[key]
    except KeyError:
        raise ValidationError(
            "not-an-edge-path", "consecutive vertices are not adjacent", [s.vertices[u], s.vertices[v]]
        ) from None


def path_hyperplanes(s: CubeSkeleton, path: Sequence[Hashable]) -> list[int]:
    """Hyperplane of each edge of an edge path."""
    ids = [s.idx(v) for v in path]
    return [edge_hyperplane(s, a, b) for a, b in zip(ids, ids[1:])]


def ray_crosses_hyperplane(s: CubeSkeleton, path: Sequence[Hashable], h: Any) -> bool:
    """True when the path uses an edge of ``h`` and ends on the other side of ``h``."""
    hi = s.hid(h)
    if not path:
        return False
    crossed = path_hyperplanes(s, path)
    if hi not in crossed:
        return False
    return separates(s, hi, s.idx(path[0]), s.idx(path[-1]))


def is_geodesic(s: CubeSkeleton, path: Sequence[Hashable]) -> bool:
    """Edge path whose length equals the distance between its endpoints."""
    if len(path) <= 1:
        return len(path) == 1
    path_hyperplanes(s, path)
    return len(path) - 1 == int(s.l1_matrix[s.idx(path[0]), s.idx(path[-1])])


def geodesic_between(s: CubeSkeleton, x: Hashable, y: Hashable, rng: np.random.Generator | None = None) -> list:
    """A geodesic edge path from ``x`` to ``y``; random tie-breaking when ``rng`` is given."""
    i, j = s.idx(x), s.idx(y)
    l1 = s.l1_matrix
    path = [i]
    cur = i
    while cur != j:
        steps = [v for v in s.adjacency[cur] if l1[v, j] == l1[cur, j] - 1]
        cur = steps[int(rng.integers(len(steps)))] if rng is not None else steps[0]
        path.append(cur)
    return [s.vertices[v] for v in path]


# --------------------------------------------------------------------------
# Fixtures
# --------------------------------------------------------------------------


def path_graph(n: int) -> tuple[list[str], list[tuple[str, str]]]:
    verts = [str(i) for i in range(n + 1)]
    return verts, [(verts[i], verts[i + 1]) for i in range(n)]


def grid_graph(a: int, b: int) -> tuple[list[str], list[tuple[str, str]]]:
    verts = [f"{i},{j}" for i in range(a + 1) for j in range(b + 1)]
    edges = []
    for i in range(a + 1):
        for j in range(b + 1):
            if i < a:
                edges.append((f"{i},{j}", f"{i + 1},{j}"))
            if j < b:
                edges.append((f"{i},{j}", f"{i},{j + 1}"))
    return verts, edges


def tree_graph(profile: Sequence[int], depth: int) -> tuple[list[str], list[tuple[str, str]]]:
    """Rooted tree where a vertex of generation ``g`` has degree ``profile[g]``.

    The last profile entry repeats; non-root vertices spend one degree on the
    parent edge.
    """
    if not profile or min(profile) < 1:
        raise ValidationError("bad-fixture", "tree degrees must be positive")
    verts = ["r"]
    edges = []
    frontier = ["r"]
    for g in range(depth):
        deg = profile[min(g, len(profile) - 1)]
        nchild = deg if g == 0 else deg - 1
        nxt = []
        for v in frontier:
            for c in range(nchild):
                w = f"{v}.{c}"
                verts.append(w)
                edges.append((v, w))
                nxt.append(w)
        frontier = nxt
    return verts, edges


def box_product(
    a: tuple[Sequence[str], Sequence[tuple[str, str]]], b: tuple[Sequence[str], Sequence[tuple[str, str]]]
) -> tuple[list[str], list[tuple[str, str]]]:
    va, ea = a
    vb, eb = b
    verts = [f"{x}|{y}" for x in va for y in vb]
    edges = [(f"{u}|{y}", f"{v}|{y}") for u, v in ea for y in vb]
    edges += [(f"{x}|{u}", f"{x}|{v}") for x in va for u, v in eb]
    return verts, edges


@dataclass(frozen=True)
class FixtureSpec:
    """``kind`` in ``{path, grid, tree, tree_x_path}`` with its integer arguments."""

    kind: str
    args: tuple[Any, ...]

    def describe(self) -> str:
        if self.kind == "tree":
            prof, depth = self.args
            return f"tree({'/'.join(map(str, prof))},{depth})"
        if self.kind == "tree_x_path":
            inner, n = self.args
            return f"tree_x_path({inner.describe()},{n})"
        return f"{self.kind}({','.join(map(str, self.args))})"


_FIXTURE_RE = re.compile(r"^\s*(\w+)\s*\((.*)\)\s*$")


def parse_fixture(text: str) -> FixtureSpec:
    """Parse ``path(5)``, ``grid(2,3)``, ``tree(3,2)``, ``tree(3/4,2)`` or ``tree_x_path(tree(3,2),4)``."""
    m = _FIXTURE_RE.match(text)
    if not m:
        raise ValidationError("bad-fixture", f"cannot parse fixture {text!r}")
    kind, body = m.group(1), m.group(2)
    try:
        if kind == "path":
            return FixtureSpec("path", (int(body),))
        if kind == "grid":
            a, b = body.split(",")
            return FixtureSpec("grid", (int(a), int(b)))
        if kind == "tree":
            prof, depth = body.split(",")
            return FixtureSpec("tree", (tuple(int(p) for p in prof.split("/")), int(depth)))
        if kind == "tree_x_path":
            inner, _, n = body.rpartition(",")
            return FixtureSpec("tree_x_path", (parse_fixture(inner), int(n)))
    except ValueError as exc:
        raise ValidationError("bad-fixture", f"cannot parse fixture {text!r}") from exc
    raise ValidationError("bad-fixture", f"unknown fixture kind {kind!r}")


def _fixture_graph(spec: FixtureSpec) -> tuple[list[str], list[tuple[str, str]]]:
    if spec.kind == "path":
        return path_graph(*spec.args)
    if spec.kind == "grid":
        return grid_graph(*spec.args)
    if spec.kind == "tree":
        return tree_graph(*spec.args)
    if spec.kind == "tree_x_path":
        inner, n = spec.args
        if inner.kind not in ("tree", "path"):
            raise ValidationError("bad-fixture", "tree_x_path needs a tree or path factor")
        return box_product(_fixture_graph(inner), path_graph(n))
    raise ValidationError("bad-fixture", f"unknown fixture kind {spec.kind!r}")


def fixture_size(spec: FixtureSpec) -> int:
    if spec.kind == "path":
        return spec.args[0] + 1
    if spec.kind == "grid":
        return (spec.args[0] + 1) * (spec.args[1] + 1)
    if spec.kind == "tree":
        prof, depth = spec.args
        total, gen = 1, 1
        for g in range(depth):
            deg = prof[min(g, len(prof) - 1)]
            gen *= deg if g == 0 else deg - 1
            total += gen
        return total
    inner, n = spec.args
    return fixture_size(inner) * (n + 1)


def generate_fixture(spec: FixtureSpec | str) -> CubeSkeleton:
    """Build a fixture skeleton; sizes are checked against the ``fixture_vertices`` cap."""
    if isinstance(spec, str):
        spec = parse_fixture(spec)
    for a in spec.args:
        if isinstance(a, int) and a < 0:
            raise ValidationError("bad-fixture", "fixture sizes must be non-negative")
    caps.enforce("fixture_vertices", fixture_size(spec))
    verts, edges = _fixture_graph(spec)
    return build_skeleton(verts, edges)


# --------------------------------------------------------------------------
# Export
# --------------------------------------------------------------------------

_PALETTE = (
    "red", "blue", "darkgreen", "orange", "purple", "brown", "magenta", "cyan4",
    "gold3", "navy", "olivedrab", "deeppink3", "sienna", "teal", "slateblue", "firebrick",
)  # fmt: skip


def to_dot(s: CubeSkeleton) -> str:
    """Graphviz source; edges coloured and labelled by hyperplane."""
    lines = ["graph skeleton {"]
    for v in s.vertices:
        lines.append(f'  "{v}";')
    for u, v in s.edges:
        h = s.edge_hyperplane[(u, v)]
        colour = _PALETTE[h % len(_PALETTE)]
        lines.append(f'  "{s.vertices[u]}" -- "{s.vertices[v]}" [color={colour}, label="h{h}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def side_matrix_json(s: CubeSkeleton) -> dict[str, Any]:
    """Hyperplane rows as bitstrings over the vertex order (``1`` = plus side)."""
    m = s.side_matrix
    return {
        "vertices": list(s.vertices),
        "hyperplanes": [
            {
                "id": h.id,
                "edges": sorted([s.vertices[u], s.vertices[v]] for u, v in h.edge_class),
                "side": "".join("1" if b else "0" for b in m[i]),
            }
            for i, h in enumerate(s.hyperplanes)
        ],
    }
