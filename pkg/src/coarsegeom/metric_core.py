"""Finite metric spaces, Gromov products, four-point hyperbolicity and sublinear functions.

All distances are exact :class:`fractions.Fraction` values.  Bulk scans work on
an integer rescaling of the distance matrix, so every comparison is exact.
Values of the sublinear family that are irrational (logarithms, non-perfect
powers) are carried as 60-digit :mod:`mpmath` numbers; see :func:`kappa_value`.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Hashable, Iterable, Sequence, Union

import mpmath
import numpy as np

from coarsegeom import caps
from coarsegeom.errors import ValidationError

Number = Union[Fraction, mpmath.mpf]

KAPPA_DPS = 60
_INT64_SAFE = 2**61


def to_fraction(value: Any) -> Fraction:
    """Convert ints, Fractions, decimal or ``p/q`` strings and floats to a Fraction.

    Floats are read through their shortest decimal representation, so ``0.1``
    becomes ``1/10`` rather than the binary expansion.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValidationError("bad-number", f"boolean {value!r} is not a number")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValidationError("bad-number", f"non-finite value {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError("bad-number", f"cannot parse {value!r} as a rational") from exc
    try:
        return Fraction(value)
    except (TypeError, ValueError) as exc:
        raise ValidationError("bad-number", f"cannot convert {value!r} to a rational") from exc


def format_number(value: Number) -> str:
    """Serialise a Fraction exactly (``"3/2"``) or an mpmath value to 40 digits."""
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, int):
        return str(value)
    if value == mpmath.inf:
        return "inf"
    return mpmath.nstr(value, 40)


def scale_to_int(values: Sequence[Sequence[Fraction]]) -> tuple[np.ndarray, int]:
    """Multiply a rational matrix by the lcm of its denominators.

    Returns an ``int64`` array when it fits comfortably, otherwise an object
    array of Python ints.  The second element is the scale factor.
    """
    scale = 1
    for row in values:
        for v in row:
            scale = math.lcm(scale, v.denominator)
    ints = [[v.numerator * (scale // v.denominator) for v in row] for row in values]
    biggest = max((abs(v) for row in ints for v in row), default=0)
    if biggest * 4 < _INT64_SAFE:
        return np.array(ints, dtype=np.int64).reshape(len(values), -1), scale
    return np.array(ints, dtype=object).reshape(len(values), -1), scale


@dataclass(frozen=True)
class FiniteMetricSpace:
    """A finite metric space with a distinguished basepoint.

    Parameters
    ----------
    points : tuple
        Hashable point identifiers in a fixed order.
    dist : tuple of tuple of Fraction
        Symmetric distance matrix indexed like ``points``.
    basepoint : hashable
        The basepoint ``o``; defaults to the first point.
    """

    points: tuple[Hashable, ...]
    dist: tuple[tuple[Fraction, ...], ...]
    basepoint: Hashable = None
    _memo: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        points = tuple(self.points)
        object.__setattr__(self, "points", points)
        if not points:
            raise ValidationError("empty-space", "a metric space needs at least one point")
        if len(set(points)) != len(points):
            raise ValidationError("duplicate-point", "point ids must be distinct")
        n = len(points)
        rows = tuple(tuple(to_fraction(v) for v in row) for row in self.dist)
        if len(rows) != n or any(len(r) != n for r in rows):
            raise ValidationError("bad-matrix", f"distance matrix must be {n}x{n}")
        object.__setattr__(self, "dist", rows)
        if self.basepoint is None:
            object.__setattr__(self, "basepoint", points[0])
        elif self.basepoint not in self.index:
            raise ValidationError("unknown-point", f"basepoint {self.basepoint!r} not in space")
        self._validate()

    def _validate(self) -> None:
        n = len(self.points)
        for i in range(n):
            if self.dist[i][i] != 0:
                raise ValidationError("not-a-metric", "d(x,x) must be 0", [self.points[i]])
            for j in range(i + 1, n):
                a, b = self.dist[i][j], self.dist[j][i]
                if a != b:
                    raise ValidationError(
                        "not-a-metric", "distance matrix is not symmetric", [self.points[i], self.points[j]]
                    )
                if a <= 0:
                    raise ValidationError(
                        "not-a-metric", "distinct points need positive distance", [self.points[i], self.points[j]]
                    )
        m, _ = self.scaled
        for z in range(n):
            bad = m[:, z, None] + m[None, z, :] < m
            if bad.any():
                x, y = map(int, np.argwhere(bad)[0])
                raise ValidationError(
                    "not-a-metric",
                    "triangle inequality fails",
                    [self.points[x], self.points[y], self.points[z]],
                )

    @cached_property
    def index(self) -> dict[Hashable, int]:
        return {p: i for i, p in enumerate(self.points)}

    @cached_property
    def scaled(self) -> tuple[np.ndarray, int]:
        """Integer matrix ``s * dist`` and the scale ``s``."""
        return scale_to_int(self.dist)

    def __len__(self) -> int:
        return len(self.points)

    def idx(self, p: Hashable) -> int:
        try:
            return self.index[p]
        except (KeyError, TypeError):
            raise ValidationError("unknown-point", f"unknown point id {p!r}", p) from None

    def d(self, x: Hashable, y: Hashable) -> Fraction:
        return self.dist[self.idx(x)][self.idx(y)]

    def with_basepoint(self, o: Hashable) -> FiniteMetricSpace:
        self.idx(o)
        return FiniteMetricSpace(self.points, self.dist, o)

    def subspace(self, pts: Iterable[Hashable]) -> FiniteMetricSpace:
        """Induced sub-metric-space; keeps the basepoint when it survives."""
        pts = list(dict.fromkeys(pts))
        ids = [self.idx(p) for p in pts]
        rows = [[self.dist[i][j] for j in ids] for i in ids]
        o = self.basepoint if self.basepoint in pts else pts[0]
        return FiniteMetricSpace(tuple(pts), rows, o)

    @classmethod
    def from_graph(
        cls,
        points: Sequence[Hashable],
        edges: Iterable[tuple[Hashable, Hashable, Any]],
        basepoint: Hashable = None,
    ) -> FiniteMetricSpace:
        """Shortest-path metric of a connected weighted graph (exact Dijkstra)."""
        points = list(points)
        index = {p: i for i, p in enumerate(points)}
        adj: list[list[tuple[int, Fraction]]] = [[] for _ in points]
        for u, v, w in edges:
            w = to_fraction(w)
            if w <= 0:
                raise ValidationError("bad-weight", "edge weights must be positive", [u, v])
            adj[index[u]].append((index[v], w))
            adj[index[v]].append((index[u], w))
        rows = [_dijkstra(adj, s) for s in range(len(points))]
        for i, row in enumerate(rows):
            if any(v is None for v in row):
                raise ValidationError("disconnected", "graph is not connected", points[i])
        return cls(tuple(points), rows, basepoint)

    def to_json(self) -> dict[str, Any]:
        return {
            "points": list(self.points),
            "dist": [[str(v) for v in row] for row in self.dist],
            "basepoint": self.basepoint,
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> FiniteMetricSpace:
        try:
            points = data["points"]
            dist = data["dist"]
        except (KeyError, TypeError) as exc:
            raise ValidationError("bad-json", "metric space JSON needs 'points' and 'dist'") from exc
        return cls(tuple(points), dist, data.get("basepoint"))


def _dijkstra(adj: list[list[tuple[int, Fraction]]], source: int) -> list[Fraction | None]:
    import heapq

    dist: list[Fraction | None] = [None] * len(adj)
    dist[source] = Fraction(0)
    heap = [(Fraction(0), source)]
    while heap:
        du, u = heapq.heappop(heap)
        if du != dist[u]:
            continue
        for v, w in adj[u]:
            nd = du + w
            if dist[v] is None or nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def gromov_product(space: FiniteMetricSpace, x: Hashable, y: Hashable, o: Hashable = None) -> Fraction:
    """Return ``(x|y)_o = (d(o,x) + d(o,y) - d(x,y)) / 2``; ``o`` defaults to the basepoint."""
    if o is None:
        o = space.basepoint
    return (space.d(o, x) + space.d(o, y) - space.d(x, y)) / 2


@dataclass(frozen=True)
class DeltaCertificate:
    """Minimal four-point constant together with a quadruple attaining it.

    ``witness`` is ``(x, y, z, o)`` with
    ``(x|y)_o = min((x|z)_o, (z|y)_o) - delta``.
    """

    delta: Fraction
    witness: tuple[Hashable, Hashable, Hashable, Hashable]

    def recheck(self, space: FiniteMetricSpace) -> bool:
        x, y, z, o = self.witness
        lhs = gromov_product(space, x, y, o)
        rhs = min(gromov_product(space, x, z, o), gromov_product(space, z, y, o))
        return rhs - lhs == self.delta


def _delta_for_base(m: np.ndarray, o: int, use_thresholds: bool) -> tuple[int, tuple[int, int, int, int]]:
    """Largest ``min(G[x,z], G[z,y]) - G[x,y]`` over ``x, y, z >= o`` with doubled products G.

    Restricting to indices not below ``o`` is exact: with ``o`` fixed, the three
    choices of the pair ``(x, y)`` realise all three pairings of the quadruple.
    """
    sub = m[o:, o:]
    col = m[o, o:]
    g = col[:, None] + col[None, :] - sub
    k = g.shape[0]
    if use_thresholds:
        best = np.full((k, k), np.iinfo(np.int64).min, dtype=np.int64)
        for t in np.unique(g):
            b = (g >= t).astype(np.float32)
            best[(b @ b) > 0] = t
    else:
        best = g.copy()
        for z in range(k):
            np.maximum(best, np.minimum(g[:, z, None], g[None, z, :]), out=best)
    gap = best - g
    flat = int(np.argmax(gap))
    x, y = divmod(flat, k)
    val = int(gap[x, y])
    z = int(np.flatnonzero(np.minimum(g[x, :], g[:, y]) == best[x, y])[0])
    return val, (x + o, y + o, z + o, o)


def hyperbolicity(space: FiniteMetricSpace, jobs: int = 1) -> DeltaCertificate:
    """Exhaustive four-point scan; returns the exact minimal delta and a witness.

    The basepoint range is split across ``jobs`` worker threads and the partial
    maxima are combined by ``max``.
    """
    n = len(space)
    caps.enforce("delta_points", n)
    if n == 1:
        p = space.points[0]
        return DeltaCertificate(Fraction(0), (p, p, p, p))
    m, scale = space.scaled
    if m.dtype == object:
        return _hyperbolicity_bruteforce(space)
    distinct = len(np.unique(m))
    use_thresholds = n > 48 and distinct <= 4 * n

    def run(bases: range) -> tuple[int, tuple[int, int, int, int]]:
        return max((_delta_for_base(m, o, use_thresholds) for o in bases), key=lambda r: r[0])

    if jobs <= 1:
        results = [run(range(n))]
    else:
        chunks = [range(i, n, jobs) for i in range(min(jobs, n))]
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, chunks))
    val, (x, y, z, o) = max(results, key=lambda r: r[0])
    cert = DeltaCertificate(
        Fraction(val, 2 * scale), (space.points[x], space.points[y], space.points[z], space.points[o])
    )
    if not cert.recheck(space):
        raise RuntimeError("four-point witness failed its exact re-check")
    return cert


def _hyperbolicity_bruteforce(space: FiniteMetricSpace) -> DeltaCertificate:
    pts = space.points
    best = (Fraction(-1), (pts[0],) * 4)
    for o in pts:
        for x in pts:
            for y in pts:
                lhs = gromov_product(space, x, y, o)
                for z in pts:
                    gap = min(gromov_product(space, x, z, o), gromov_product(space, z, y, o)) - lhs
                    if gap > best[0]:
                        best = (gap, (x, y, z, o))
    return DeltaCertificate(*best)


def estimate_delta(space: FiniteMetricSpace, jobs: int = 1) -> Fraction:
    """Minimal delta for the four-point condition over all ordered quadruples."""
    return hyperbolicity(space, jobs=jobs).delta


def hausdorff_distance(space: FiniteMetricSpace, a: Iterable[Hashable], b: Iterable[Hashable]) -> Fraction:
    a, b = list(a), list(b)
    if not a or not b:
        raise ValidationError("empty-set", "Hausdorff distance needs non-empty sets")
    one = max(min(space.d(p, q) for q in b) for p in a)
    two = max(min(space.d(p, q) for q in a) for p in b)
    return max(one, two)


# --------------------------------------------------------------------------
# Sublinear functions
# --------------------------------------------------------------------------

KAPPA_GRID: tuple[int, ...] = (0,) + tuple(2**i for i in range(21))


def _mp(value: Number) -> mpmath.mpf:
    if isinstance(value, Fraction):
        return mpmath.mpf(value.numerator) / value.denominator
    return mpmath.mpf(value)


def _exact_root(t: Fraction, p: Fraction) -> Fraction | None:
    """``t**p`` when it is rational, else ``None``."""
    if t == 0:
        return Fraction(0)
    num, den = p.numerator, p.denominator
    out = []
    for part in (t.numerator, t.denominator):
        r = round(part ** (1.0 / den)) if part < 2**1000 else None
        found = None
        if r is not None:
            for c in (r - 1, r, r + 1):
                if c >= 0 and c**den == part:
                    found = c
        if found is None:
            found = _integer_root(part, den)
        if found is None:
            return None
        out.append(found)
    return Fraction(out[0] ** num, out[1] ** num)


def _integer_root(value: int, k: int) -> int | None:
    lo, hi = 0, 1 << (value.bit_length() // k + 1)
    while lo < hi:
        mid = (lo + hi) // 2
        if mid**k < value:
            lo = mid + 1
        else:
            hi = mid
    return lo if lo**k == value else None


@dataclass(frozen=True)
class SublinearFn:
    """Base class of the closed family of monotone concave sublinear functions."""

    def __call__(self, t: Any) -> Number:
        return kappa_value(self, t)

    def describe(self) -> str:
        raise NotImplementedError

    def _value(self, t: Fraction) -> Number:
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(SublinearFn):
    """``t -> c``."""

    c: Fraction = Fraction(1)

    def __post_init__(self) -> None:
        object.__setattr__(self, "c", to_fraction(self.c))
        if self.c <= 0:
            raise ValidationError("bad-kappa", "Constant needs c > 0", str(self.c))
        _grid_check(self)

    def describe(self) -> str:
        return f"const:{self.c}"

    def _value(self, t: Fraction) -> Number:
        return self.c


@dataclass(frozen=True)
class Log(SublinearFn):
    """``t -> a*ln(1+t) + b``."""

    a: Fraction = Fraction(1)
    b: Fraction = Fraction(1)

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", to_fraction(self.a))
        object.__setattr__(self, "b", to_fraction(self.b))
        if self.a <= 0 or self.b < 0:
            raise ValidationError("bad-kappa", "Log needs a > 0 and b >= 0", [str(self.a), str(self.b)])
        _grid_check(self)

    def describe(self) -> str:
        return f"log:{self.a},{self.b}"

    def _value(self, t: Fraction) -> Number:
        if t == 0:
            return self.b
        with mpmath.workdps(KAPPA_DPS):
            return _mp(self.a) * mpmath.log1p(_mp(t)) + _mp(self.b)


@dataclass(frozen=True)
class Power(SublinearFn):
    """``t -> a*t**p + b`` with ``0 < p < 1``."""

    a: Fraction = Fraction(1)
    p: Fraction = Fraction(1, 2)
    b: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        for name in ("a", "p", "b"):
            object.__setattr__(self, name, to_fraction(getattr(self, name)))
        if self.a <= 0 or self.b < 0:
            raise ValidationError("bad-kappa", "Power needs a > 0 and b >= 0", [str(self.a), str(self.b)])
        if not 0 < self.p < 1:
            raise ValidationError("bad-kappa", "Power needs 0 < p < 1", str(self.p))
        _grid_check(self)

    def describe(self) -> str:
        return f"pow:{self.a},{self.p},{self.b}"

    def _value(self, t: Fraction) -> Number:
        root = _exact_root(t, self.p)
        if root is not None:
            return self.a * root + self.b
        with mpmath.workdps(KAPPA_DPS):
            return _mp(self.a) * mpmath.power(_mp(t), _mp(self.p)) + _mp(self.b)


def kappa_value(k: SublinearFn, t: Any) -> Number:
    """Evaluate ``k`` at ``t >= 0``.

    The result is an exact Fraction whenever the value is rational (constants,
    ``ln 1``, perfect powers) and a 60-digit mpmath number otherwise.
    """
    t = to_fraction(t)
    if t < 0:
        raise ValidationError("bad-argument", "kappa is defined on t >= 0", str(t))
    return k._value(t)


def leq(a: Number, b: Number) -> bool:
    """``a <= b`` for Fractions and mpmath numbers; exact when both are Fractions."""
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a <= b
    with mpmath.workdps(KAPPA_DPS):
        return _mp(a) <= _mp(b)


def scale_number(c: Fraction, value: Number) -> Number:
    """``c * value`` keeping Fractions exact."""
    if isinstance(value, Fraction):
        return c * value
    with mpmath.workdps(KAPPA_DPS):
        return _mp(c) * value


def ratio(num: Fraction, den: Number) -> Number:
    """``num / den`` with ``0/0 = 0`` and ``x/0 = inf``."""
    if num == 0:
        return Fraction(0)
    if den == 0:
        return mpmath.inf
    if isinstance(den, Fraction):
        return num / den
    with mpmath.workdps(KAPPA_DPS):
        return _mp(num) / den


def kappa_grid_violations(k: SublinearFn) -> list[str]:
    """Monotonicity, concavity and decreasing ``k(t)/t`` on the geometric grid."""
    with mpmath.workdps(KAPPA_DPS):
        vals = [_mp(k._value(Fraction(t))) for t in KAPPA_GRID]
        problems = []
        for i in range(len(KAPPA_GRID) - 1):
            if vals[i + 1] < vals[i]:
                problems.append(f"not monotone at t={KAPPA_GRID[i + 1]}")
        slopes = [(vals[i + 1] - vals[i]) / (KAPPA_GRID[i + 1] - KAPPA_GRID[i]) for i in range(len(vals) - 1)]
        tol = mpmath.mpf(10) ** (-(KAPPA_DPS - 10))
        for i in range(len(slopes) - 1):
            if slopes[i + 1] > slopes[i] + tol:
                problems.append(f"not concave at t={KAPPA_GRID[i + 1]}")
        per = [vals[i] / KAPPA_GRID[i] for i in range(1, len(vals))]
        for i in range(len(per) - 1):
            if per[i + 1] > per[i] + tol:
                problems.append(f"k(t)/t increases at t={KAPPA_GRID[i + 2]}")
    return problems


def _grid_check(k: SublinearFn) -> None:
    problems = kappa_grid_violations(k)
    if problems:
        raise ValidationError("bad-kappa", "; ".join(problems), k.describe())


def parse_kappa(text: str) -> SublinearFn:
    """Parse ``const:c``, ``log:a,b`` or ``pow:a,p,b``."""
    try:
        kind, _, args = text.partition(":")
        nums = [to_fraction(a) for a in args.split(",")] if args else []
        kind = kind.strip().lower()
        if kind in ("const", "constant") and len(nums) == 1:
            return Constant(*nums)
        if kind == "log" and len(nums) == 2:
            return Log(*nums)
        if kind in ("pow", "power") and len(nums) == 3:
            return Power(*nums)
    except ValidationError:
        raise
    raise ValidationError("bad-kappa", f"cannot parse kappa spec {text!r}")


# --------------------------------------------------------------------------
# Paths, neighbourhoods and gauges
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DiscretePath:
    """A finite sequence of points of ``space``, optionally with strictly increasing times."""

    space: FiniteMetricSpace
    points: tuple[Hashable, ...]
    times: tuple[Fraction, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", tuple(self.points))
        for p in self.points:
            self.space.idx(p)
        if self.times is not None:
            times = tuple(to_fraction(t) for t in self.times)
            if len(times) != len(self.points):
                raise ValidationError("bad-path", "times and points differ in length")
            if any(b <= a for a, b in zip(times, times[1:])):
                raise ValidationError("bad-path", "times must be strictly increasing")
            object.__setattr__(self, "times", times)

    def __len__(self) -> int:
        return len(self.points)

    def indices(self) -> list[int]:
        return [self.space.idx(p) for p in self.points]

    def to_json(self, space_ref: Any = None) -> dict[str, Any]:
        out: dict[str, Any] = {
            "space": space_ref if space_ref is not None else self.space.to_json(),
            "points": list(self.points),
        }
        if self.times is not None:
            out["times"] = [str(t) for t in self.times]
        return out

    @classmethod
    def from_json(cls, data: dict[str, Any], space: FiniteMetricSpace | None = None) -> DiscretePath:
        if space is None:
            ref = data.get("space")
            if not isinstance(ref, dict):
                raise ValidationError("bad-json", "path JSON needs an inline space or an explicit space")
            space = FiniteMetricSpace.from_json(ref)
        return cls(space, tuple(data["points"]), data.get("times"))


def set_distance(space: FiniteMetricSpace, y: Hashable, Z: Iterable[Hashable]) -> Fraction:
    Z = list(Z)
    if not Z:
        raise ValidationError("empty-set", "Z must be non-empty")
    return min(space.d(y, z) for z in Z)


def in_kappa_neighborhood(
    space: FiniteMetricSpace,
    Z: Iterable[Hashable],
    y: Hashable,
    n: Any,
    k: SublinearFn,
    o: Hashable = None,
) -> bool:
    """``d(y, Z) <= n * k(d(o, y))``."""
    o = space.basepoint if o is None else o
    n = to_fraction(n)
    bound = scale_number(n, k(space.d(o, y)))
    return leq(set_distance(space, y, Z), bound)


def required_n(space: FiniteMetricSpace, y: Hashable, Z: Iterable[Hashable], k: SublinearFn, o: Hashable) -> Number:
    """Smallest ``n`` with ``y`` in the ``n``-scaled kappa-neighbourhood of ``Z``."""
    return ratio(set_distance(space, y, Z), k(space.d(o, y)))


def _max_number(values: Iterable[Number]) -> Number:
    best: Number = Fraction(0)
    for v in values:
        if not leq(v, best):
            best = v
    return best


def fellow_travel_constant(a: DiscretePath, b: DiscretePath, k: SublinearFn, o: Hashable = None) -> Number:
    """Smallest ``n`` such that each path lies in the kappa-neighbourhood of the other."""
    if a.space is not b.space and a.space != b.space:
        raise ValidationError("mismatched-spaces", "paths live in different spaces")
    if not a.points or not b.points:
        raise ValidationError("empty-path", "paths must be non-empty")
    space = a.space
    o = space.basepoint if o is None else o
    return _max_number(
        [required_n(space, y, b.points, k, o) for y in a.points]
        + [required_n(space, y, a.points, k, o) for y in b.points]
    )


def quasi_geodesic_violation(
    space: FiniteMetricSpace,
    points: Sequence[Hashable],
    times: Sequence[Fraction],
    K: Fraction,
    C: Fraction,
) -> tuple[int, int] | None:
    """First index pair violating ``|s-t|/K - C <= d <= K|s-t| + C``, or ``None``.

    Works on a common integer rescaling of distances, times and constants, so
    the check is exact and vectorised.
    """
    K, C = to_fraction(K), to_fraction(C)
    ids = [space.idx(p) for p in points]
    m = len(ids)
    if m <= 1:
        return None
    times = [to_fraction(t) for t in times]
    dist = [[space.dist[i][j] for j in ids] for i in ids]
    scale = math.lcm(*(t.denominator for t in times), C.denominator, space.scaled[1])
    t_int = [t.numerator * (scale // t.denominator) for t in times]
    c_int = C.numerator * (scale // C.denominator)
    d_int = [[v.numerator * (scale // v.denominator) for v in row] for row in dist]
    p, q = K.numerator, K.denominator
    biggest = max(max(map(abs, t_int)) * 2, c_int, max(max(r) for r in d_int)) * (p + q) * 4
    dtype = np.int64 if biggest < _INT64_SAFE else object
    tt = np.array(t_int, dtype=dtype)
    dt = np.abs(tt[:, None] - tt[None, :])
    dd = np.array(d_int, dtype=dtype)
    upper = q * dd > p * dt + q * c_int
    lower = q * dt > p * (dd + c_int)
    bad = np.triu(upper | lower, k=1)
    if bad.any():
        i, j = map(int, np.argwhere(bad)[0])
        return i, j
    return None


def morse_gauge_on_witnesses(
    space: FiniteMetricSpace,
    Z: Iterable[Hashable],
    witnesses: Sequence[tuple[DiscretePath, Any, Any]],
    k: SublinearFn,
    o: Hashable = None,
) -> dict[tuple[Fraction, Fraction], Number]:
    """Witness-based lower bounds for the Morse gauge, one per ``(K, C)`` class.

    Each value is the smallest ``n`` placing every supplied witness of the
    class inside the kappa-neighbourhood of ``Z``.  It certifies a lower bound
    only: unseen quasi-geodesics may require more.
    """
    Z = list(Z)
    if not Z:
        raise ValidationError("empty-set", "Z must be non-empty")
    zset = set(Z)
    o = space.basepoint if o is None else o
    out: dict[tuple[Fraction, Fraction], Number] = {}
    for w, (path, K, C) in enumerate(witnesses):
        K, C = to_fraction(K), to_fraction(C)
        if not path.points:
            raise ValidationError("empty-path", "witness paths must be non-empty", w)
        if path.points[0] not in zset or path.points[-1] not in zset:
            raise ValidationError("bad-witness", "witness endpoints must lie in Z", w)
        times = path.times if path.times is not None else tuple(Fraction(i) for i in range(len(path)))
        bad = quasi_geodesic_violation(space, path.points, times, K, C)
        if bad is not None:
            raise ValidationError(
                "not-quasi-geodesic",
                f"witness {w} violates the ({K},{C})-quasi-geodesic inequalities",
                [w, bad[0], bad[1]],
            )
        need = _max_number(required_n(space, y, Z, k, o) for y in path.points)
        key = (K, C)
        out[key] = _max_number([out.get(key, Fraction(0)), need])
    return out
