"""Independent brute-force oracles.

Everything here works from plain adjacency lists and Python Fractions and
shares no algorithm with the package: hyperplanes come from the
Djoković–Winkler relation, medians from distance sums, degrees and d_L from
subset enumeration, shortest paths from Floyd–Warshall.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from fractions import Fraction


def bfs_matrix(vertices, edges):
    idx = {v: i for i, v in enumerate(vertices)}
    adj = [[] for _ in vertices]
    for u, v in edges:
        adj[idx[u]].append(idx[v])
        adj[idx[v]].append(idx[u])
    n = len(vertices)
    out = []
    for s in range(n):
        d = [-1] * n
        d[s] = 0
        q = deque([s])
        while q:
            u = q.popleft()
            for w in adj[u]:
                if d[w] < 0:
                    d[w] = d[u] + 1
                    q.append(w)
        out.append(d)
    return out


def dw_classes(vertices, edges):
    """Edge classes of the Djoković–Winkler relation (transitive on median graphs)."""
    idx = {v: i for i, v in enumerate(vertices)}
    d = bfs_matrix(vertices, edges)
    E = [(idx[u], idx[v]) for u, v in edges]
    seen = [False] * len(E)
    classes = []
    for a, (u, v) in enumerate(E):
        if seen[a]:
            continue
        cls = []
        for b, (x, y) in enumerate(E):
            if d[u][x] + d[v][y] != d[u][y] + d[v][x]:
                cls.append(b)
                seen[b] = True
        classes.append(cls)
    return E, classes


def halfspaces(vertices, edges):
    """One frozenset per hyperplane: the side containing the first endpoint of its first edge."""
    d = bfs_matrix(vertices, edges)
    E, classes = dw_classes(vertices, edges)
    out = []
    for cls in classes:
        u, v = E[cls[0]]
        out.append(frozenset(w for w in range(len(vertices)) if d[w][u] < d[w][v]))
    return out


def l1_by_halfspaces(vertices, edges):
    hs = halfspaces(vertices, edges)
    n = len(vertices)
    return [[sum((a in h) != (b in h) for h in hs) for b in range(n)] for a in range(n)]


def median_bf(d, a, b, c):
    """Unique vertex on all three pairwise geodesics."""
    hits = [m for m in range(len(d)) if d[a][m] + d[m][b] == d[a][b] and d[b][m] + d[m][c] == d[b][c]
            and d[a][m] + d[m][c] == d[a][c]]
    assert len(hits) == 1, hits
    return hits[0]


def crossing(h, k, n):
    allv = frozenset(range(n))
    hc, kc = allv - h, allv - k
    return bool(h & k) and bool(h & kc) and bool(hc & k) and bool(hc & kc)


def separates(h, x, y):
    return (x in h) != (y in h)


def _on_side(h, k, n):
    """Which side of h the hyperplane k (disjoint from h) lies on: 'in' or 'out'."""
    allv = frozenset(range(n))
    for side in (k, allv - k):
        if side <= h:
            return "in"
        if side <= allv - h:
            return "out"
    raise AssertionError("crossing hyperplanes have no side")


def facing_bf(hs, n, a, b, c):
    trip = (a, b, c)
    if any(crossing(hs[p], hs[q], n) for p, q in itertools.combinations(trip, 2)):
        return False
    for m in trip:
        p, q = [t for t in trip if t != m]
        if _on_side(hs[m], hs[p], n) != _on_side(hs[m], hs[q], n):
            return False
    return True


def degree_bf(hs, n, a, b):
    """Largest facing-triple-free set of hyperplanes crossing both ``a`` and ``b``."""
    cand = [k for k in range(len(hs)) if k not in (a, b) and crossing(hs[k], hs[a], n) and crossing(hs[k], hs[b], n)]
    for r in range(len(cand), -1, -1):
        for sub in itertools.combinations(cand, r):
            if not any(facing_bf(hs, n, *t) for t in itertools.combinations(sub, 3)):
                return r
    return 0


def dl_bf(hs, n, L, x, y, pairwise=False, cache=None):
    """Largest separating family of pairwise-disjoint hyperplanes, L-well-separated consecutively.

    Consecutive order is the nesting order from ``x``: the x-side sizes of a
    nested family are strictly increasing.  ``cache`` may be shared across
    calls on the same hyperplanes to memoise degrees.
    """
    if x == y:
        return 0
    allv = frozenset(range(n))
    sep = [k for k in range(len(hs)) if separates(hs[k], x, y)]
    xside = {k: (hs[k] if x in hs[k] else allv - hs[k]) for k in sep}
    deg = {} if cache is None else cache

    def ws(p, q):
        if crossing(hs[p], hs[q], n):
            return False
        key = (min(p, q), max(p, q))
        if key not in deg:
            deg[key] = degree_bf(hs, n, p, q)
        return deg[key] <= L

    best = 1 if sep else 0
    for r in range(2, len(sep) + 1):
        found = False
        for sub in itertools.combinations(sep, r):
            if any(crossing(hs[p], hs[q], n) for p, q in itertools.combinations(sub, 2)):
                continue
            order = sorted(sub, key=lambda k: len(xside[k]))
            if pairwise:
                ok = all(ws(p, q) for p, q in itertools.combinations(order, 2))
            else:
                ok = all(ws(p, q) for p, q in zip(order, order[1:]))
            if ok:
                found = True
                break
        if not found:
            # dropping an end member keeps a family valid, so sizes are downward closed
            break
        best = r
    return best


def delta_bf(d):
    """Four-point constant over all ordered quadruples, with Gromov products at every basepoint."""
    n = len(d)
    best = Fraction(0)
    for o in range(n):
        for x in range(n):
            for y in range(n):
                pxy = Fraction(d[o][x] + d[o][y] - d[x][y], 2)
                for z in range(n):
                    pxz = Fraction(d[o][x] + d[o][z] - d[x][z], 2)
                    pzy = Fraction(d[o][z] + d[o][y] - d[z][y], 2)
                    best = max(best, min(pxz, pzy) - pxy)
    return best


def floyd_warshall(n, edges):
    INF = None
    d = [[INF] * n for _ in range(n)]
    for i in range(n):
        d[i][i] = Fraction(0)
    for u, v, w in edges:
        w = Fraction(w)
        if d[u][v] is None or w < d[u][v]:
            d[u][v] = d[v][u] = w
    for k in range(n):
        for i in range(n):
            if d[i][k] is None:
                continue
            for j in range(n):
                if d[k][j] is None:
                    continue
                c = d[i][k] + d[k][j]
                if d[i][j] is None or c < d[i][j]:
                    d[i][j] = c
    return d


def quasi_geodesic_ok(dist, times, K, C):
    K, C = Fraction(K), Fraction(C)
    m = len(times)
    for i in range(m):
        for j in range(m):
            dt = abs(Fraction(times[i]) - Fraction(times[j]))
            dd = dist[i][j]
            if dd > K * dt + C or dt / K - C > dd:
                return False
    return True


def ruler_ok(dist, D):
    D = Fraction(D)
    m = len(dist)
    for i in range(m):
        for j in range(i + 1, m):
            for k in range(j + 1, m):
                if dist[i][j] + dist[j][k] > dist[i][k] + D:
                    return False
    return all(dist[i][i + 1] < D for i in range(m - 1))


def median_defects_bf(d, mu):
    """(C2, C3) by direct quadruple loops over a median function on indices."""
    n = len(d)
    c2 = Fraction(0)
    c3 = Fraction(0)
    for a in range(n):
        for b in range(n):
            for c in range(n):
                for x in range(n):
                    c2 = max(c2, Fraction(d[mu(mu(a, x, b), x, c)][mu(a, x, mu(b, x, c))]))
                    c3 = max(c3, Fraction(d[mu(a, b, c)][mu(x, b, c)]) / (d[a][x] + 1))
    return c2, c3


def delta_np(d):
    """Vectorised four-point constant for integer matrices, one basepoint at a time."""
    import numpy as np

    m = np.asarray(d, dtype=np.int64)
    best = 0
    for o in range(len(m)):
        g = m[o][:, None] + m[o][None, :] - m
        gap = np.minimum(g[:, :, None], g.T[None, :, :]).max(axis=1) - g
        best = max(best, int(gap.max()))
    return Fraction(best, 2)


def _scaled(values, extra=()):
    """Scale a Fraction matrix (and extra scalars) to integers by one common factor."""
    values = [[Fraction(v) for v in row] for row in values]
    extra = [Fraction(v) for v in extra]
    q = math.lcm(1, *{v.denominator for row in values for v in row}, *(v.denominator for v in extra))
    mat = [[v.numerator * (q // v.denominator) for v in row] for row in values]
    return mat, [v.numerator * (q // v.denominator) for v in extra], q


def ruler_np(dist, D):
    """Vectorised quasi-ruler test on a Fraction distance matrix."""
    import numpy as np

    mat, (d,), _ = _scaled(dist, [D])
    m = np.array(mat, dtype=np.int64).reshape(len(dist), len(dist))
    n = len(m)
    for j in range(1, n - 1):
        excess = m[:j, j, None] + m[None, j, j + 1 :] - m[:j, j + 1 :]
        if (excess > d).any():
            return False
    return all(m[i, i + 1] < d for i in range(n - 1))


def quasi_geodesic_np(dist, times, K, C):
    """Vectorised version of ``quasi_geodesic_ok`` in exact integer arithmetic."""
    import numpy as np

    K = Fraction(K)
    mat, scalars, _ = _scaled(dist, [C, *times])
    c, t = scalars[0], np.array(scalars[1:], dtype=object)
    dd = np.array(mat, dtype=object).reshape(len(dist), len(dist))
    dt = np.abs(t[:, None] - t[None, :])
    p, r = K.numerator, K.denominator
    upper = r * dd <= p * dt + r * c
    lower = r * dt <= p * (dd + c)
    return bool(upper.all() and lower.all())
