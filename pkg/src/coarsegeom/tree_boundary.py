"""Rooted truncated trees, entwined subtree families and the vertex bijection between them.

Vertices use address strings: the root is ``"r"`` and the ``j``-th child of
``u`` is ``f"{u}.{j}"``.  Children are ordered by level, so the first
children of a vertex are those of the smallest member containing them.
"""

from __future__ import annotations

import math
import random
import re
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterable, Mapping, Sequence

from coarsegeom import caps
from coarsegeom.errors import ValidationError

INF = math.inf


def _count_json(v: float) -> Any:
    return "inf" if v == INF else int(v)


def _count_parse(v: Any) -> float:
    return INF if v in ("inf", None) else int(v)


# --------------------------------------------------------------------------
# Trees
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TruncatedTree:
    """A rooted tree materialised down to ``depth``.

    ``degree_decl[u]`` is the full degree of ``u`` (``inf`` allowed); the
    materialised children may be fewer, which marks ``u`` as truncated.
    """

    root: str
    depth: int
    children: Mapping[str, tuple[str, ...]]
    degree_decl: Mapping[str, float]

    def __post_init__(self) -> None:
        seen = {self.root}
        queue = deque([self.root])
        while queue:
            u = queue.popleft()
            kids = self.children.get(u, ())
            if len(kids) > self.declared(u):
                raise ValidationError("bad-tree", "more children than the declared degree", u)
            for c in kids:
                if c in seen:
                    raise ValidationError("bad-tree", "vertex has two parents or lies on a cycle", c)
                seen.add(c)
                queue.append(c)
        if seen != set(self.children) | {self.root} or seen != set(self.degree_decl):
            raise ValidationError("bad-tree", "children/degree tables disagree with the reachable vertex set")
        if any(g > self.depth for g in self.generation.values()):
            raise ValidationError("bad-tree", "a vertex lies below the declared depth")

    @cached_property
    def order(self) -> tuple[str, ...]:
        """Breadth-first order, children in their stored order."""
        out = [self.root]
        for u in out:
            out.extend(self.children.get(u, ()))
        return tuple(out)

    @cached_property
    def rank(self) -> dict[str, int]:
        return {u: i for i, u in enumerate(self.order)}

    @cached_property
    def parent(self) -> dict[str, str | None]:
        out: dict[str, str | None] = {self.root: None}
        for u in self.order:
            for c in self.children.get(u, ()):
                out[c] = u
        return out

    @cached_property
    def generation(self) -> dict[str, int]:
        out = {self.root: 0}
        for u in self.order:
            for c in self.children.get(u, ()):
                out[c] = out[u] + 1
        return out

    @cached_property
    def path(self) -> dict[str, tuple[str, ...]]:
        """Root-to-vertex vertex sequence."""
        out = {self.root: (self.root,)}
        for u in self.order:
            for c in self.children.get(u, ()):
                out[c] = out[u] + (c,)
        return out

    def __contains__(self, u: object) -> bool:
        return u in self.degree_decl

    def kids(self, u: str) -> tuple[str, ...]:
        return self.children.get(u, ())

    def declared(self, u: str) -> float:
        """Declared number of children."""
        d = self.degree_decl[u]
        return d if u == self.root else d - 1

    def truncated(self, u: str) -> bool:
        return len(self.kids(u)) < self.declared(u)

    def is_descendant(self, a: str, b: str) -> bool:
        """``a`` equals ``b`` or lies below it."""
        g = self.generation[b]
        p = self.path[a]
        return len(p) > g and p[g] == b

    def descendants(self, u: str) -> list[str]:
        out = [u]
        for x in out:
            out.extend(self.kids(x))
        return out

    def to_json(self) -> dict[str, Any]:
        return {
            "root": self.root,
            "depth": self.depth,
            "vertices": [
                {"id": u, "parent": self.parent[u], "degree": _count_json(self.degree_decl[u])} for u in self.order
            ],
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> TruncatedTree:
        children: dict[str, list[str]] = {}
        decl = {}
        for v in data["vertices"]:
            children.setdefault(v["id"], [])
            decl[v["id"]] = _count_parse(v["degree"])
            if v["parent"] is not None:
                children.setdefault(v["parent"], []).append(v["id"])
        return cls(data["root"], int(data["depth"]), {u: tuple(c) for u, c in children.items()}, decl)


@dataclass(frozen=True)
class LocalTree:
    """Rooted view of one member: ``root`` keeps only ``root_children`` (declared ``root_declared``),
    every other vertex keeps its children in member ``level``."""

    family: EntwinedFamily
    level: int
    root: str
    root_children: tuple[str, ...]
    root_declared: int

    def kids(self, u: str) -> tuple[str, ...]:
        return self.root_children if u == self.root else self.family.children_at(u, self.level)

    def declared(self, u: str) -> float:
        return self.root_declared if u == self.root else self.family.declared_at(u, self.level)

    def truncated(self, u: str) -> bool:
        return len(self.kids(u)) < self.declared(u)

    @property
    def rank(self) -> dict[str, int]:
        return self.family.ambient.rank

    @property
    def parent(self) -> dict[str, str | None]:
        return self.family.ambient.parent


# --------------------------------------------------------------------------
# Entwined families
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class EntwinedFamily:
    """Nested subtrees ``T_1 ⊆ … ⊆ T_m`` of an ambient tree of infinite valence.

    ``level[u]`` is the index of the first member containing ``u`` and
    ``member_children[u][i-1]`` the declared number of children of ``u`` in
    ``T_i`` (``0`` while ``u`` is not in ``T_i``).
    """

    ambient: TruncatedTree
    level: Mapping[str, int]
    member_children: Mapping[str, tuple[int, ...]]
    m: int
    meta: Mapping[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        amb = self.ambient
        if self.m < 1:
            raise ValidationError("bad-family", "a family needs at least one member")
        if set(self.level) != set(amb.degree_decl) or set(self.member_children) != set(amb.degree_decl):
            raise ValidationError("bad-family", "level/member tables must cover every vertex")
        for u in amb.order:
            lv = self.level[u]
            counts = self.member_children[u]
            if len(counts) != self.m or not 1 <= lv <= self.m:
                raise ValidationError("bad-family", "bad level or member child counts", u)
            if any(counts[i] for i in range(lv - 1)):
                raise ValidationError("bad-family", "vertex has children in a member it does not belong to", u)
            p = amb.parent[u]
            if p is not None and self.level[p] > lv:
                raise ValidationError("bad-family", "members must be rooted subtrees", u)
            kids = amb.kids(u)
            if kids:
                for i in range(lv, self.m + 1):
                    if sum(1 for c in kids if self.level[c] <= i) != counts[i - 1]:
                        raise ValidationError("bad-family", f"materialised children disagree with T_{i}", u)
                if len(kids) != counts[-1]:
                    raise ValidationError("bad-family", "ambient children outside every member", u)

    def children_at(self, u: str, i: int) -> tuple[str, ...]:
        return tuple(c for c in self.ambient.kids(u) if self.level[c] <= i)

    def declared_at(self, u: str, i: int) -> int:
        return self.member_children[u][i - 1]

    @property
    def root(self) -> str:
        return self.ambient.root

    @property
    def depth(self) -> int:
        return self.ambient.depth

    def member(self, i: int) -> TruncatedTree:
        """``T_i`` as a truncated tree with its declared degrees."""
        if not 1 <= i <= self.m:
            raise ValidationError("bad-level", f"member index must lie in 1..{self.m}", i)
        amb = self.ambient
        verts = [u for u in amb.order if self.level[u] <= i]
        children = {u: self.children_at(u, i) for u in verts}
        decl = {u: self.declared_at(u, i) + (0 if u == amb.root else 1) for u in verts}
        return TruncatedTree(amb.root, amb.depth, children, decl)

    def local(self, i: int, root: str, new_only: bool = False) -> LocalTree:
        """``T_i`` rooted at ``root``; with ``new_only`` the root keeps only its level-``i`` children."""
        kids = self.children_at(root, i)
        decl = self.declared_at(root, i)
        if new_only:
            kids = tuple(c for c in kids if self.level[c] == i)
            decl -= self.declared_at(root, i - 1)
        return LocalTree(self, i, root, kids, decl)

    @cached_property
    def strongly_entwined(self) -> bool:
        """Declared child counts grow strictly from each member to the next."""
        for u, counts in self.member_children.items():
            lv = self.level[u]
            if any(counts[i] <= counts[i - 1] for i in range(lv, self.m)):
                return False
        return True

    @cached_property
    def filling(self) -> bool:
        """Every materialised ambient edge lies in some member."""
        return all(1 <= lv <= self.m for lv in self.level.values())

    @cached_property
    def min_member_degree(self) -> int:
        out = None
        for u, counts in self.member_children.items():
            for i in range(self.level[u], self.m + 1):
                deg = counts[i - 1] + (0 if u == self.root else 1)
                out = deg if out is None else min(out, deg)
        return out

    def to_json(self) -> dict[str, Any]:
        amb = self.ambient
        return {
            "root": amb.root,
            "depth": amb.depth,
            "levels": self.m,
            "meta": dict(self.meta),
            "vertices": [
                {
                    "id": u,
                    "parent": amb.parent[u],
                    "level": self.level[u],
                    "member_children": list(self.member_children[u]),
                    "degree": _count_json(amb.degree_decl[u]),
                }
                for u in amb.order
            ],
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> EntwinedFamily:
        try:
            children: dict[str, list[str]] = {}
            decl, level, counts = {}, {}, {}
            for v in data["vertices"]:
                u = v["id"]
                children.setdefault(u, [])
                decl[u] = _count_parse(v.get("degree", "inf"))
                level[u] = int(v["level"])
                counts[u] = tuple(int(c) for c in v["member_children"])
                if v["parent"] is not None:
                    children.setdefault(v["parent"], []).append(u)
            amb = TruncatedTree(data["root"], int(data["depth"]), {u: tuple(c) for u, c in children.items()}, decl)
            return cls(amb, level, counts, int(data["levels"]), data.get("meta", {}))
        except (KeyError, TypeError) as exc:
            raise ValidationError("bad-json", f"family JSON is missing {exc}") from exc


_RULE_REGULAR = re.compile(r"^regular:\+(\d+)$")
_RULE_RANDOM = re.compile(r"^random:\+(\d+)\.\.(\d+)$")


def _degree_sequence(rule: str, levels: int, first: int, rng: random.Random) -> list[int]:
    """Degrees in ``T_first .. T_levels`` for one vertex."""
    m = _RULE_REGULAR.match(rule)
    if m:
        k = int(m.group(1))
        if levels > 1 and k < 1:
            raise ValidationError("rule-not-entwined", "degrees must grow strictly between members", rule)
        return [3 + (i - 1) * k for i in range(first, levels + 1)]
    m = _RULE_RANDOM.match(rule)
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        if lo > hi:
            raise ValidationError("bad-rule", "empty increment range", rule)
        if levels > 1 and lo < 1:
            raise ValidationError("rule-not-entwined", "degrees must grow strictly between members", rule)
        degs = [rng.choice((3, 4))]
        for _ in range(first + 1, levels + 1):
            degs.append(degs[-1] + rng.randint(lo, hi))
        return degs
    raise ValidationError("bad-rule", "rule must be 'regular:+k' or 'random:+lo..hi'", rule)


def generate_family(
    spec: Mapping[str, Any],
    depth: int,
    width_cap: int | None = None,
) -> EntwinedFamily:
    """Seeded nested family materialised breadth-first.

    ``spec`` holds ``levels``, ``rule`` and ``seed``.  A generation keeps
    adding the full child lists of its parents in breadth-first order until
    the next list would exceed ``width_cap``; the remaining parents stay
    truncated.
    """
    levels = int(spec.get("levels", 1))
    rule = str(spec.get("rule", "regular:+1"))
    seed = int(spec.get("seed", 0))
    width_cap = caps.cap("tree_width") if width_cap is None else int(width_cap)
    caps.enforce("tree_depth", depth)
    if levels < 1 or depth < 0 or width_cap < 1:
        raise ValidationError("bad-family-spec", "need levels >= 1, depth >= 0 and width_cap >= 1")
    rng = random.Random(seed)
    root = "r"
    level = {root: 1}
    counts: dict[str, tuple[int, ...]] = {}
    children: dict[str, tuple[str, ...]] = {}

    def assign(u: str) -> None:
        degs = _degree_sequence(rule, levels, level[u], rng)
        off = 0 if u == root else 1
        counts[u] = (0,) * (level[u] - 1) + tuple(d - off for d in degs)

    assign(root)
    frontier = [root]
    for gen in range(depth):
        nxt: list[str] = []
        full = False
        for u in frontier:
            c = counts[u]
            if full or len(nxt) + c[-1] > width_cap:
                full = True
                children[u] = ()
                continue
            kids = []
            for j in range(c[-1]):
                lv = next(i for i in range(level[u], levels + 1) if j < c[i - 1])
                w = f"{u}.{j}"
                level[w] = lv
                assign(w)
                kids.append(w)
            children[u] = tuple(kids)
            nxt.extend(kids)
        frontier = nxt
    for u in frontier:
        children.setdefault(u, ())
    decl = {u: INF for u in level}
    amb = TruncatedTree(root, depth, children, decl)
    meta = {"rule": rule, "seed": seed, "width_cap": width_cap}
    fam = EntwinedFamily(amb, level, counts, levels, meta)
    if not (fam.strongly_entwined and fam.filling):
        raise RuntimeError("generated family fails its own flags")
    return fam


# --------------------------------------------------------------------------
# Auxiliary subtrees
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AuxiliarySubtree:
    """A rooted finite subtree; ``open_ends`` are its non-root vertices in breadth-first order."""

    root: str
    vertices: tuple[str, ...]
    open_ends: tuple[str, ...]

    def __post_init__(self) -> None:
        if set(self.open_ends) != set(self.vertices) - {self.root} or len(self.open_ends) != len(self.vertices) - 1:
            raise ValidationError("bad-auxiliary", "open ends must be exactly the non-root vertices", self.root)

    def to_json(self) -> dict[str, Any]:
        return {"root": self.root, "vertices": list(self.vertices), "open_ends": list(self.open_ends)}

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> AuxiliarySubtree:
        return cls(data["root"], tuple(data["vertices"]), tuple(data["open_ends"]))


def is_auxiliary(tree: Any, local_root: str, S: Iterable[str]) -> tuple[bool, dict[str, Any] | None]:
    """Check the auxiliary conditions for ``S`` rooted at ``local_root``.

    All children of the root must be occupied; every other vertex needs an
    unoccupied child, counting unmaterialised children via the declared
    degrees.  Returns the verdict and a violation witness.
    """
    S = set(S)
    if local_root not in S:
        raise ValidationError("not-rooted", "S must contain the local root", local_root)
    parent = tree.parent
    for u in S:
        if u != local_root and parent.get(u) not in S:
            raise ValidationError("not-connected", "S is not a subtree hanging from its root", u)
        if u != local_root and u not in tree.kids(parent[u]):
            raise ValidationError("not-connected", "S leaves the local tree", u)
    occ_root = sum(1 for c in tree.kids(local_root) if c in S)
    if occ_root < tree.declared(local_root):
        return False, {"condition": "root-children", "vertex": local_root}
    for u in sorted(S, key=tree.rank.get):
        if u == local_root:
            continue
        occ = sum(1 for c in tree.kids(u) if c in S)
        if tree.declared(u) - occ < 1:
            return False, {"condition": "open-end", "vertex": u}
    return True, None


class Exhausted(Exception):
    """Materialisation ran out while growing an auxiliary subtree."""


def _root_star(tree: Any, root: str) -> AuxiliarySubtree:
    if tree.truncated(root):
        raise Exhausted(root)
    kids = tuple(tree.kids(root))
    return AuxiliarySubtree(root, (root, *kids), kids)


def _grow(tree: Any, root: str, k: int) -> AuxiliarySubtree:
    base = _root_star(tree, root)
    if k < len(base.open_ends):
        raise ValidationError("bad-k", "k must be at least the root degree", [root, k])
    S = list(base.vertices)
    members = set(S)
    occupied: dict[str, int] = {u: 0 for u in S}
    rank = tree.rank
    while len(S) - 1 < k:
        ends = sorted((u for u in S if u != root), key=rank.get)
        target = next((u for u in ends if tree.declared(u) - occupied[u] >= 2), None)
        if target is None:
            raise Exhausted(root)
        free = [c for c in tree.kids(target) if c not in members]
        if len(free) < tree.declared(target) - occupied[target]:
            raise Exhausted(target)
        w = free[0]
        S.append(w)
        members.add(w)
        occupied[target] += 1
        occupied[w] = 0
    ordered = sorted(S, key=rank.get)
    return AuxiliarySubtree(root, tuple(ordered), tuple(u for u in ordered if u != root))


def find_auxiliary_with_open_ends(tree: Any, local_root: str, k: int) -> AuxiliarySubtree:
    """Deterministic auxiliary subtree with exactly ``k`` open ends.

    Starts from the root and all its children, then repeatedly gives the
    earliest open end (breadth-first) that can spare one its first free
    child.  Raises ``exhausted`` when the needed child is not materialised.
    """
    try:
        return _grow(tree, local_root, int(k))
    except Exhausted as exc:
        raise ValidationError("exhausted", "materialised depth is insufficient", str(exc.args[0])) from None


# --------------------------------------------------------------------------
# The vertex bijection
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Pairing:
    """One matched pair of auxiliary subtrees with the open-end bijection ``sigma``."""

    level: int
    S: AuxiliarySubtree
    S_p: AuxiliarySubtree
    sigma: tuple[tuple[str, str], ...]

    def reversed(self) -> Pairing:
        return Pairing(self.level, self.S_p, self.S, tuple((b, a) for a, b in self.sigma))

    def to_json(self) -> dict[str, Any]:
        return {"level": self.level, "S": self.S.to_json(), "S_p": self.S_p.to_json(), "sigma": [list(p) for p in self.sigma]}

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> Pairing:
        return cls(
            int(data["level"]),
            AuxiliarySubtree.from_json(data["S"]),
            AuxiliarySubtree.from_json(data["S_p"]),
            tuple((a, b) for a, b in data["sigma"]),
        )


@dataclass(frozen=True)
class VertexBijection:
    """Partial bijection between the materialised vertices of two families.

    ``frontier`` lists ``(level, v, v')`` pairs whose local trees could not
    be matched within the materialised depth; ``v`` is mapped but the
    vertices hanging from it in that member are not.
    """

    family: EntwinedFamily
    family_p: EntwinedFamily
    forward: Mapping[str, str]
    inverse: Mapping[str, str]
    pairings: tuple[Pairing, ...]
    frontier: tuple[tuple[int, str, str], ...]

    def reversed(self) -> VertexBijection:
        return VertexBijection(
            self.family_p,
            self.family,
            self.inverse,
            self.forward,
            tuple(p.reversed() for p in self.pairings),
            tuple((lv, b, a) for lv, a, b in self.frontier),
        )

    def to_json(self) -> dict[str, Any]:
        return {
            "family": self.family.to_json(),
            "family_p": self.family_p.to_json(),
            "forward": dict(sorted(self.forward.items(), key=lambda kv: self.family.ambient.rank[kv[0]])),
            "pairings": [p.to_json() for p in self.pairings],
            "frontier": [list(f) for f in self.frontier],
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> VertexBijection:
        fwd = dict(data["forward"])
        inv = {b: a for a, b in fwd.items()}
        if len(inv) != len(fwd):
            raise ValidationError("not-injective", "forward map is not injective")
        return cls(
            EntwinedFamily.from_json(data["family"]),
            EntwinedFamily.from_json(data["family_p"]),
            fwd,
            inv,
            tuple(Pairing.from_json(p) for p in data["pairings"]),
            tuple((int(lv), a, b) for lv, a, b in data["frontier"]),
        )


def _subtree_view(tree: LocalTree, u: str, S: AuxiliarySubtree) -> LocalTree:
    """``T_u``: ``u`` with its unoccupied children and everything below them."""
    members = set(S.vertices)
    kids = tuple(c for c in tree.kids(u) if c not in members)
    occ = sum(1 for c in tree.kids(u) if c in members)
    return LocalTree(tree.family, tree.level, u, kids, int(tree.declared(u) - occ))


def build_phi(family: EntwinedFamily, family_p: EntwinedFamily) -> VertexBijection:
    """Level-by-level matching of auxiliary subtrees with breadth-first open-end bijections."""
    for name, fam in (("family", family), ("family_p", family_p)):
        if not (fam.strongly_entwined and fam.filling):
            raise ValidationError("family-not-entwined", f"{name} is not strongly entwined and filling", name)
    if family.depth != family_p.depth:
        raise ValidationError("depth-insufficient", "families are materialised to different depths",
                              [family.depth, family_p.depth])
    if family.m != family_p.m:
        raise ValidationError("level-mismatch", "families have different numbers of members", [family.m, family_p.m])
    fwd = {family.root: family_p.root}
    inv = {family_p.root: family.root}
    pairings: list[Pairing] = []
    frontier: list[tuple[int, str, str]] = []

    def run(queue: deque) -> None:
        while queue:
            ta, tb = queue.popleft()
            da, db = ta.root_declared, tb.root_declared
            if da == 0 and db == 0:
                continue
            try:
                if da == 0 or db == 0:
                    raise Exhausted(ta.root)
                if da == db:
                    S, Sp = _root_star(ta, ta.root), _root_star(tb, tb.root)
                elif da > db:
                    S = _root_star(ta, ta.root)
                    Sp = _grow(tb, tb.root, da)
                else:
                    Sp = _root_star(tb, tb.root)
                    S = _grow(ta, ta.root, db)
            except Exhausted:
                frontier.append((ta.level, ta.root, tb.root))
                continue
            sigma = tuple(zip(S.open_ends, Sp.open_ends))
            pairings.append(Pairing(ta.level, S, Sp, sigma))
            for u, up in sigma:
                fwd[u] = up
                inv[up] = u
            for u, up in sigma:
                queue.append((_subtree_view(ta, u, S), _subtree_view(tb, up, Sp)))

    run(deque([(family.local(1, family.root), family_p.local(1, family_p.root))]))
    rank = family.ambient.rank
    for i in range(2, family.m + 1):
        roots = sorted((u for u in fwd if family.level[u] < i), key=rank.get)
        run(deque((family.local(i, u, new_only=True), family_p.local(i, fwd[u], new_only=True)) for u in roots))
    return VertexBijection(family, family_p, fwd, inv, tuple(pairings), tuple(frontier))


def _owners(pairings: Sequence[Pairing]) -> tuple[dict[str, list[int]], dict[str, list[int]]]:
    a: dict[str, list[int]] = {}
    b: dict[str, list[int]] = {}
    for k, p in enumerate(pairings):
        for u in p.S.open_ends:
            a.setdefault(u, []).append(k)
        for u in p.S_p.open_ends:
            b.setdefault(u, []).append(k)
    return a, b


def _check_descendant_props(bij: VertexBijection, owner: Mapping[str, list[int]]) -> dict[str, Any]:
    """Properties (3) and (4) for the forward direction."""
    A, B = bij.family.ambient, bij.family_p.ambient
    fwd = bij.forward
    by_root: dict[str, list[str]] = {}
    for u in fwd:
        for anc in A.path[u][:-1]:
            by_root.setdefault(anc, []).append(u)
    prop3, prop4 = None, None
    checked4 = 0
    for v in sorted(fwd, key=A.rank.get):
        if v == A.root or v not in owner:
            continue
        pair = bij.pairings[owner[v][0]]
        members = set(pair.S.vertices)
        members_p = set(pair.S_p.vertices)
        rest = [u for u in pair.S.open_ends if u != v and A.is_descendant(u, v)]
        targets = [fwd[v]] + [fwd[u] for u in rest]
        gv = A.generation[v]
        gpv = B.generation[fwd[v]]
        for w in by_root.get(v, ()):
            img = fwd[w]
            if prop3 is None and not any(B.is_descendant(img, t) for t in targets):
                prop3 = {"v": v, "descendant": w, "image": img}
            if A.path[w][gv + 1] not in members:
                checked4 += 1
                ok = img != fwd[v] and B.is_descendant(img, fwd[v]) and B.path[img][gpv + 1] not in members_p
                if prop4 is None and not ok:
                    prop4 = {"v": v, "w": w, "image": img}
    return {"prop3": prop3, "prop4": prop4, "prop4_pairs": checked4}


def verify_phi(bij: VertexBijection) -> dict[str, Any]:
    """Re-verify bijectivity, unique open-end membership, descendant mapping and the exit condition."""
    A, B = bij.family, bij.family_p
    fwd, inv = bij.forward, bij.inverse
    report: dict[str, Any] = {"mapped": len(fwd), "pairings": len(bij.pairings), "frontier": len(bij.frontier)}
    wit1 = None
    if fwd.get(A.root) != B.root:
        wit1 = {"root": A.root}
    for u, up in fwd.items():
        if u not in A.ambient or up not in B.ambient or inv.get(up) != u:
            wit1 = wit1 or {"vertex": u}
    if len(inv) != len(fwd) or any(fwd.get(b) != a for a, b in inv.items()):
        wit1 = wit1 or {"inverse": "not mutually inverse"}
    report["prop1"] = {"ok": wit1 is None, "witness": wit1}

    own_a, own_b = _owners(bij.pairings)
    wit2 = None
    for side, owner, dom, root in (("forward", own_a, fwd, A.root), ("inverse", own_b, inv, B.root)):
        for u in dom:
            if u != root and len(owner.get(u, ())) != 1:
                wit2 = wit2 or {"side": side, "vertex": u, "count": len(owner.get(u, ()))}
    report["prop2"] = {"ok": wit2 is None, "witness": wit2}

    f = _check_descendant_props(bij, own_a)
    r = _check_descendant_props(bij.reversed(), own_b)
    report["prop3"] = {"ok": f["prop3"] is None and r["prop3"] is None, "witness": f["prop3"] or r["prop3"]}
    report["prop4"] = {
        "ok": f["prop4"] is None and r["prop4"] is None,
        "witness": f["prop4"] or r["prop4"],
        "pairs_checked": f["prop4_pairs"] + r["prop4_pairs"],
    }
    bad_level = next(({"vertex": u, "image": up} for u, up in fwd.items() if A.level[u] != B.level[up]), None)
    report["level_restriction"] = {"ok": bad_level is None, "witness": bad_level}
    report["ok"] = all(report[k]["ok"] for k in ("prop1", "prop2", "prop3", "prop4", "level_restriction"))
    return report


def boundary_image_identity(bij: VertexBijection, v: str) -> dict[str, Any]:
    """Finite-depth check of the boundary-neighbourhood identity at ``v``.

    Forward: every mapped strict descendant of ``v`` outside ``D_v`` is sent
    below ``Phi(w)`` for some ``w`` in ``C_v``.  Converse: every mapped vertex
    below some ``Phi(w)`` pulls back below ``v``.  ``multiplicity`` is the
    largest number of ``w`` covering one image.
    """
    A, B = bij.family.ambient, bij.family_p.ambient
    fwd, inv = bij.forward, bij.inverse
    if v not in A or v == A.root:
        raise ValidationError("bad-vertex", "v must be a non-root materialised vertex", v)
    if v not in fwd:
        return {"vertex": v, "status": "inconclusive", "reason": "v is not mapped"}
    own_a, _ = _owners(bij.pairings)
    S = bij.pairings[own_a[v][0]].S
    D_v = [u for u in S.open_ends if A.is_descendant(u, v)]
    D_set = set(D_v)
    A_v = [k for k, p in enumerate(bij.pairings) if p.S.root in D_set]
    C_v = [u for k in A_v for u in bij.pairings[k].S.open_ends]
    frontier_hit = [f for f in bij.frontier if f[1] in D_set]
    out: dict[str, Any] = {"vertex": v, "D_v": D_v, "A_v": [bij.pairings[k].S.root for k in A_v], "C_v": C_v}
    if A.generation[v] > A.depth - 2 or frontier_hit or not C_v:
        reason = "frontier below D_v" if frontier_hit else "depth margin below two generations"
        out.update(status="inconclusive", reason=reason)
        return out
    images = [fwd[w] for w in C_v]
    forward_wit, multiplicity = None, 0
    for u in fwd:
        if u in D_set or u == v or not A.is_descendant(u, v):
            continue
        cnt = sum(1 for t in images if B.is_descendant(fwd[u], t))
        multiplicity = max(multiplicity, cnt)
        if cnt == 0 and forward_wit is None:
            forward_wit = u
    converse_wit = None
    for up, u in inv.items():
        if any(B.is_descendant(up, t) for t in images) and not A.is_descendant(u, v):
            converse_wit = converse_wit or up
    out.update(
        status="pass" if forward_wit is None and converse_wit is None else "fail",
        forward_ok=forward_wit is None,
        converse_ok=converse_wit is None,
        forward_witness=forward_wit,
        converse_witness=converse_wit,
        multiplicity=multiplicity,
        truncation=A.depth,
    )
    return out


def eligible_vertices(bij: VertexBijection, max_generation: int) -> list[str]:
    """Mapped non-root vertices up to ``max_generation`` whose boundary check is conclusive."""
    A = bij.family.ambient
    out = []
    for v in A.order:
        if v == A.root or A.generation[v] > max_generation or v not in bij.forward:
            continue
        if boundary_image_identity(bij, v)["status"] != "inconclusive":
            out.append(v)
    return out
