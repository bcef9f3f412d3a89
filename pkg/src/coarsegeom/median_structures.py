"""Coarse-median diagnostics on finite spaces: axiom defects, median maps, paths and convergence."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Hashable, Mapping, Sequence

import numpy as np

from coarsegeom import caps
from coarsegeom.cube_complex import CubeSkeleton
from coarsegeom.errors import ValidationError
from coarsegeom.metric_core import DiscretePath, FiniteMetricSpace
from coarsegeom.separation import DLSpace


@dataclass(frozen=True)
class MedianOracle:
    """A total ternary operation on the points of ``space``.

    ``table[a, b, c]`` is the index of ``mu(a, b, c)``.  ``source`` records
    how the table was obtained (``exact-cube-median`` or ``table``) and
    ``complex`` keeps the skeleton for cube medians so JSON can reference it.
    """

    space: FiniteMetricSpace
    table: np.ndarray
    source: str = "table"
    complex: CubeSkeleton | None = field(default=None, compare=False)
    metric: str = "l1"

    def __post_init__(self) -> None:
        n = len(self.space)
        t = np.asarray(self.table)
        if t.shape != (n, n, n):
            raise ValidationError("mu-not-total", f"median table must have shape {(n, n, n)}", list(t.shape))
        if t.size and (t.min() < 0 or t.max() >= n):
            raise ValidationError("mu-not-total", "median table refers to unknown points")
        t = t.astype(np.int32 if n >= 2**15 else np.int16, copy=False)
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MedianOracle):
            return NotImplemented
        return self.space == other.space and np.array_equal(self.table, other.table) and self.source == other.source

    __hash__ = None

    def __call__(self, a: Hashable, b: Hashable, c: Hashable) -> Hashable:
        sp = self.space
        return sp.points[int(self.table[sp.idx(a), sp.idx(b), sp.idx(c)])]

    @classmethod
    def exact_cube_median(cls, s: CubeSkeleton, basepoint: Hashable = None) -> MedianOracle:
        return cls(s.metric_space(basepoint), s.median_table, "exact-cube-median", s, "l1")

    @classmethod
    def from_dl_space(cls, dl: DLSpace, basepoint: Hashable = None) -> MedianOracle:
        """Cube median pushed forward to the d_L metric through the vertex identity."""
        return cls(dl.metric_space(basepoint), dl.base.median_table, "exact-cube-median", dl.base, f"dl:{dl.L}")

    @classmethod
    def from_function(cls, space: FiniteMetricSpace, mu: Any) -> MedianOracle:
        pts = space.points
        n = len(pts)
        table = np.empty((n, n, n), dtype=np.int32)
        for a in range(n):
            for b in range(n):
                for c in range(n):
                    table[a, b, c] = space.idx(mu(pts[a], pts[b], pts[c]))
        return cls(space, table, "table")

    def to_json(self) -> dict[str, Any]:
        if self.source == "exact-cube-median" and self.complex is not None:
            return {
                "kind": "exact-cube-median",
                "complex": self.complex.to_json(),
                "metric": self.metric,
                "basepoint": self.space.basepoint,
            }
        return {"kind": "table", "space": self.space.to_json(), "table": self.table.tolist()}

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> MedianOracle:
        kind = data.get("kind") if isinstance(data, dict) else None
        if kind == "exact-cube-median":
            from coarsegeom.separation import build_dl_space

            s = CubeSkeleton.from_json(data["complex"])
            metric = data.get("metric", "l1")
            if metric == "l1":
                return cls.exact_cube_median(s, data.get("basepoint"))
            if isinstance(metric, str) and metric.startswith("dl:"):
                dl = build_dl_space(s, int(metric[3:]), verify=False)
                return cls.from_dl_space(dl, data.get("basepoint"))
            raise ValidationError("bad-json", f"unknown oracle metric {metric!r}", metric)
        if kind == "table":
            return cls(FiniteMetricSpace.from_json(data["space"]), np.array(data["table"], dtype=np.int64))
        raise ValidationError("bad-json", "oracle JSON needs kind 'exact-cube-median' or 'table'", kind)


def _dist_int(space: FiniteMetricSpace) -> tuple[np.ndarray, int]:
    m, scale = space.scaled
    if m.dtype == object:
        raise ValidationError("cap-exceeded", "distances too large for the vectorised median scans")
    return m, scale


@dataclass(frozen=True)
class MedianDefect:
    """Axiom defects of a ternary operation.

    ``C3`` is the least ``C`` with ``d(mu(a,b,c), mu(x,b,c)) <= C d(a,x) + C``
    on every quadruple, i.e. the maximum of ``d(mu(a,b,c), mu(x,b,c)) / (d(a,x) + 1)``.
    """

    C2: Fraction
    C3: Fraction
    axiom1_ok: bool
    idempotent_ok: bool
    symmetric_ok: bool
    witness: dict[str, Any]

    def to_json(self) -> dict[str, Any]:
        return {
            "C2": str(self.C2),
            "C3": str(self.C3),
            "axiom1_ok": self.axiom1_ok,
            "idempotent_ok": self.idempotent_ok,
            "symmetric_ok": self.symmetric_ok,
            "witness": self.witness,
        }


def coarse_median_defect(oracle: MedianOracle) -> MedianDefect:
    """Exhaustive axiom scan: idempotence and symmetry exactly, ``C2`` and ``C3`` as exact rationals."""
    sp, T = oracle.space, oracle.table
    n = len(sp)
    caps.enforce("median_defect_points", n)
    dm, scale = _dist_int(sp)
    pts = sp.points
    witness: dict[str, Any] = {}

    ar = np.arange(n)
    # axiom (1) as written; the other argument positions follow once symmetry holds
    vals = T[ar[:, None], ar[:, None], ar[None, :]]
    bad = np.argwhere(vals != ar[:, None])
    idem = not len(bad)
    if not idem:
        a, b = map(int, bad[0])
        witness["idempotence"] = ["mu(a,a,b)", pts[a], pts[b]]
    sym = True
    for perm in ((1, 0, 2), (0, 2, 1), (2, 1, 0), (1, 2, 0), (2, 0, 1)):
        bad = np.argwhere(T != T.transpose(perm))
        if len(bad):
            a, b, c = map(int, bad[0])
            witness["symmetry"] = [pts[a], pts[b], pts[c], list(perm)]
            sym = False
            break

    small = dm.max() < 2**15
    flat = dm.astype(np.int16 if small else dm.dtype).ravel()
    best2, arg2 = 0, None
    block = 16
    for x in range(n):
        M = np.ascontiguousarray(T[:, x, :])
        Mi = M.astype(np.intp)
        for a0 in range(0, n, block):
            left = M[Mi[a0 : a0 + block]]  # left[a, b, c] = mu(mu(a,x,b), x, c)
            right = M[a0 : a0 + block][:, Mi]  # right[a, b, c] = mu(a, x, mu(b,x,c))
            diff = np.flatnonzero(left != right)
            if not len(diff):
                continue
            d = flat[left.ravel()[diff].astype(np.intp) * n + right.ravel()[diff]]
            k = int(d.argmax())
            if d[k] > best2:
                best2 = int(d[k])
                a, b, c = np.unravel_index(int(diff[k]), left.shape)
                arg2 = (a0 + a, b, c, x)
    C2 = Fraction(best2, scale)
    if arg2 is not None:
        a, b, c, x = map(int, arg2)
        witness["axiom2"] = [pts[a], pts[b], pts[c], pts[x]]

    best3 = Fraction(0)
    arg3 = None
    den = dm + scale
    for b in range(n):
        # a symmetric table gives equal columns for (b, c) and (c, b)
        first = b if sym else 0
        cols = T[:, b, first:].astype(np.intp)  # cols[a, c - first]
        top = np.empty((n, n), dtype=np.int64)
        for a0 in range(0, n, block):
            m = flat[cols[a0 : a0 + block, None, :] * n + cols[None, :, :]]  # m[a, x, c]
            top[a0 : a0 + block] = m.max(axis=2)
        # exact comparison top / den > best3 on cross-multiplied integers
        cand = top * best3.denominator > best3.numerator * den
        if not cand.any():
            continue
        r = np.where(cand, top / den, -1.0)
        a, x = map(int, np.unravel_index(int(r.argmax()), r.shape))
        near = np.argwhere(cand & (r >= r[a, x] * (1 - 1e-12)))
        for a, x in near:
            v = Fraction(int(top[a, x]), int(den[a, x]))
            if v > best3:
                c = first + int(flat[cols[a] * n + cols[x]].argmax())
                best3, arg3 = v, (int(a), int(x), b, c)
    if arg3 is not None:
        a, x, b, c = arg3
        witness["axiom3"] = [pts[a], pts[x], pts[b], pts[c]]
    return MedianDefect(C2, best3, idem and sym, idem, sym, witness)


def median_map_defect(f: Mapping[Hashable, Hashable], mu: MedianOracle, mu_p: MedianOracle) -> Fraction:
    """``max d'(f(mu(a,b,c)), mu'(f(a), f(b), f(c)))`` over all triples."""
    src, dst = mu.space, mu_p.space
    n = len(src)
    caps.enforce("median_defect_points", n)
    try:
        fi = np.array([dst.idx(f[p]) for p in src.points], dtype=np.intp)
    except KeyError as exc:
        raise ValidationError("map-not-total", f"map undefined at {exc.args[0]!r}", exc.args[0]) from None
    left = fi[mu.table]
    right = mu_p.table[np.ix_(fi, fi, fi)]
    dm, scale = _dist_int(dst)
    return Fraction(int(dm[left, right].max()), scale)


def median_path_defect(path: DiscretePath, mu: MedianOracle) -> Fraction:
    """``max d(gamma(mid(t,s,r)), mu(gamma(t), gamma(s), gamma(r)))`` over all time triples."""
    if path.times is None:
        raise ValidationError("missing-parametrisation", "median_path_defect needs a timed path")
    if path.space != mu.space:
        raise ValidationError("mismatched-spaces", "path and oracle live in different spaces")
    ids = np.array(path.indices(), dtype=np.intp)
    m = len(ids)
    caps.enforce("ruler_points", m)
    dm, scale = _dist_int(mu.space)
    # times are strictly increasing, so the middle time is the middle index
    i = np.arange(m)
    best = 0
    for a in range(m):
        j, k = i[:, None], i[None, :]
        mid = a + j + k - np.maximum(np.maximum(a, j), k) - np.minimum(np.minimum(a, j), k)
        med = mu.table[ids[a], ids[:, None], ids[None, :]]
        best = max(best, int(dm[ids[mid], med].max()))
    return Fraction(best, scale)


@dataclass(frozen=True)
class ConvergenceScore:
    """Finite shadow of median-topology convergence of ``h_n`` to ``h``.

    ``values[n]`` is ``max_{s,t} d(o, mu(o, h_n(s), h(t)))``; ``liminf`` is
    the minimum over ``values[tail_start:]``.  ``truncation`` records the
    path lengths the suprema range over.
    """

    values: tuple[Fraction, ...]
    liminf: Fraction
    tail_start: int
    truncation: dict[str, Any]
    tables: tuple[tuple[tuple[Fraction, ...], ...], ...] = field(repr=False, compare=False, default=())

    def neighbourhood_witness(self, n: int, r: Any) -> tuple[int, int] | None:
        """Earliest ``(s0, t0)`` with ``d(o, mu(o, h_n(s), h(t))) >= r`` for all ``s >= s0, t >= t0``."""
        r = Fraction(r)
        tab = np.array(self.tables[n], dtype=object)
        ok = tab >= r
        # suffix-and over both axes
        tail = np.logical_and.accumulate(np.logical_and.accumulate(ok[::-1, ::-1], axis=0), axis=1)[::-1, ::-1]
        hits = np.argwhere(tail)
        if not len(hits):
            return None
        s0, t0 = min(map(tuple, hits))
        return int(s0), int(t0)

    def to_json(self, r: Any = None) -> dict[str, Any]:
        out: dict[str, Any] = {
            "values": [str(v) for v in self.values],
            "liminf": str(self.liminf),
            "tail_start": self.tail_start,
            "truncation": self.truncation,
        }
        if r is not None:
            wit = [self.neighbourhood_witness(n, r) for n in range(len(self.values))]
            out["r"] = str(Fraction(r))
            out["in_neighbourhood"] = [w is not None for w in wit]
            out["witness"] = [None if w is None else list(w) for w in wit]
        return out


def convergence_score(
    o: Hashable,
    h_family: Sequence[DiscretePath],
    h: DiscretePath,
    mu: MedianOracle,
    tail_start: int | None = None,
) -> ConvergenceScore:
    """Exact ``v_n`` for every member of ``h_family`` against the target ``h``."""
    sp = mu.space
    for i, p in enumerate([h, *h_family]):
        if not p.points or p.points[0] != o:
            raise ValidationError("mismatched-basepoints", "every path must start at o", i - 1)
    if not h_family:
        raise ValidationError("empty-family", "the family must be non-empty")
    oi = sp.idx(o)
    dm, scale = _dist_int(sp)
    hid = np.array([sp.idx(p) for p in h.points], dtype=np.intp)
    values, tables = [], []
    for g in h_family:
        gid = np.array([sp.idx(p) for p in g.points], dtype=np.intp)
        med = mu.table[oi, gid[:, None], hid[None, :]]
        d = dm[oi, med]
        values.append(Fraction(int(d.max()), scale))
        tables.append(tuple(tuple(Fraction(int(v), scale) for v in row) for row in d))
    start = len(values) // 2 if tail_start is None else tail_start
    if not 0 <= start < len(values):
        raise ValidationError("bad-tail", "tail_start out of range", start)
    trunc = {"target_length": len(h), "family_lengths": [len(g) for g in h_family]}
    return ConvergenceScore(tuple(values), min(values[start:]), start, trunc, tuple(tables))


def gromov_median_gap(space: FiniteMetricSpace, mu: MedianOracle, o: Hashable) -> Fraction:
    """``max_{a,b} |d(o, mu(o,a,b)) - (a|b)_o|``."""
    if space != mu.space:
        raise ValidationError("mismatched-spaces", "space and oracle differ")
    oi = space.idx(o)
    dm, scale = _dist_int(space)
    do = dm[oi]
    med = dm[oi, mu.table[oi]]
    twice_prod = do[:, None] + do[None, :] - dm
    return Fraction(int(np.abs(2 * med - twice_prod).max()), 2 * scale)
