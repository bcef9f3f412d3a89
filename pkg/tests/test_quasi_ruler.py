from fractions import Fraction

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from coarsegeom.cube_complex import generate_fixture
from coarsegeom.errors import ValidationError
from coarsegeom.metric_core import DiscretePath, FiniteMetricSpace, estimate_delta
from coarsegeom.quasi_ruler import (
    CompletionGraph,
    check_product_bound,
    check_ruler,
    geodesic_completion,
    reparametrisation_constants,
    reparametrise,
    select_anchors,
)
from oracles import floyd_warshall, quasi_geodesic_ok, ruler_ok


def line_space(positions):
    pts = sorted(set(positions))
    return FiniteMetricSpace(tuple(pts), [[abs(Fraction(a) - Fraction(b)) for b in pts] for a in pts])


def path_matrix(path):
    return [[path.space.d(p, q) for q in path.points] for p in path.points]


@st.composite
def line_rulers(draw, max_len=25):
    """Mostly forward walks on a line with small backtracks."""
    D = draw(st.sampled_from([Fraction(1), Fraction(3, 2), Fraction(2), Fraction(5, 2)]))
    n = draw(st.integers(1, max_len))
    pos = [Fraction(0)]
    for _ in range(n - 1):
        step = draw(st.integers(-int(4 * D) // 3, int(4 * D)))
        pos.append(pos[-1] + Fraction(step, 4))
    sp = line_space(pos)
    return DiscretePath(sp, tuple(pos)), D


# -- ruler test --------------------------------------------------------------


def test_ruler_examples():
    sp = line_space([0, 1, 2, 3])
    assert check_ruler(DiscretePath(sp, (0, 1)), 2).verdict
    assert check_ruler(DiscretePath(sp, (0, 1, 2, 3)), Fraction(11, 10)).verdict
    star = FiniteMetricSpace.from_graph(["o", "a", "b"], [("o", "a", 1), ("o", "b", 1)])
    back = DiscretePath(star, ("o", "a", "o", "b"))
    cert = check_ruler(back, Fraction(3, 2))
    assert not cert.verdict and cert.violation == ("triple", 0, 1, 2)
    assert check_ruler(back, 2).verdict
    jump = check_ruler(DiscretePath(sp, (0, 3)), 3)
    assert jump.violation == ("jump", 0)
    with pytest.raises(ValidationError):
        check_ruler(back, 0)


@given(line_rulers())
def test_ruler_test_matches_oracle(case):
    path, D = case
    assert check_ruler(path, D).verdict == ruler_ok(path_matrix(path), D)


@given(line_rulers(), st.fractions(min_value=0, max_value=3, max_denominator=4))
def test_ruler_verdict_monotone_in_D(case, extra):
    path, D = case
    if check_ruler(path, D).verdict:
        assert check_ruler(path, D + extra).verdict


# -- reparametrisation ----------------------------------------------------


def test_constants_example():
    K, C = reparametrisation_constants(1, Fraction(1, 2))
    assert K == Fraction(5, 2)
    # 2(3D+eps) + 3D + eps + 1/K evaluated at D = 1, eps = 1/2
    assert C == 7 + 3 + Fraction(1, 2) + Fraction(2, 5) == Fraction(109, 10)
    assert reparametrisation_constants(2, Fraction(1, 10))[0] == 10
    for bad in [(1, 0), (1, 1), (0, Fraction(1, 2)), (1, 2)]:
        with pytest.raises(ValidationError) as e:
            reparametrisation_constants(*bad)
        assert e.value.code == "bad-constants"


def test_reparametrise_examples():
    sp = line_space([Fraction(i, 2) for i in range(21)])
    path = DiscretePath(sp, tuple(Fraction(i, 2) for i in range(21)))
    rep = reparametrise(path, 1, Fraction(1, 2))
    assert (rep.K, rep.C) == (Fraction(5, 2), Fraction(109, 10))
    gaps = [path.points[b] - path.points[a] for a, b in zip(rep.anchors, rep.anchors[1:])]
    assert all(Fraction(3, 2) < g <= Fraction(5, 2) for g in gaps[:-1])
    assert rep.anchors[0] == 0 and rep.anchors[-1] == 20
    assert quasi_geodesic_ok(path_matrix(path), rep.times, rep.K, rep.C)

    one = reparametrise(DiscretePath(sp, (Fraction(3),)), 1, Fraction(1, 2))
    assert one.anchors == (0,) and one.times == (0,)

    wiggle = DiscretePath(sp, (0, Fraction(1, 2), 0, Fraction(1, 2), 1, Fraction(1, 2)))
    rep = reparametrise(wiggle, 2, Fraction(1, 2))
    assert rep.anchors == (0, 5)
    assert quasi_geodesic_ok(path_matrix(wiggle), rep.times, rep.K, rep.C)


def test_reparametrise_rejects_non_rulers():
    star = FiniteMetricSpace.from_graph(["o", "a", "b"], [("o", "a", 1), ("o", "b", 1)])
    with pytest.raises(ValidationError) as e:
        reparametrise(DiscretePath(star, ("o", "a", "o", "b")), Fraction(3, 2), Fraction(1, 2))
    assert e.value.code == "not-a-ruler" and e.value.witness == ["triple", 0, 1, 2]


@given(line_rulers(), st.data())
def test_reparametrise_passes_independent_verifier(case, data):
    path, D = case
    assume(check_ruler(path, D).verdict)
    eps = data.draw(st.fractions(min_value=Fraction(1, 8), max_value=D - Fraction(1, 8), max_denominator=8))
    rep = reparametrise(path, D, eps)
    assert (rep.K, rep.C) == reparametrisation_constants(D, eps)
    assert rep.anchors == tuple(select_anchors(path, D, eps))
    assert list(rep.times) == sorted(set(rep.times))
    assert quasi_geodesic_ok(path_matrix(path), rep.times, rep.K, rep.C)


# -- geodesic completion ---------------------------------------------------


def test_completion_two_point_examples():
    far = FiniteMetricSpace(("x", "y"), [[0, Fraction(4, 5)], [Fraction(4, 5), 0]])
    g = geodesic_completion(far, {}, 1)
    assert g.dprime[0][1] == Fraction(4, 5)
    near = FiniteMetricSpace(("x", "y"), [[0, Fraction(1, 5)], [Fraction(1, 5), 0]])
    g = geodesic_completion(near, {}, 1)
    assert g.dprime[0][1] == Fraction(1, 2) and g.certificate["ok"]


def test_completion_collinear_points():
    sp = line_space([0, 1, 2])
    g = geodesic_completion(sp, {(0, 2): DiscretePath(sp, (0, 1, 2))}, Fraction(3, 2))
    assert [list(r[:3]) for r in g.dprime[:3]] == [list(r) for r in sp.dist]
    assert g.certificate["ok"] and g.certificate["equals_max_d_half_D"]


def test_completion_subdivides_long_lines():
    pts = [Fraction(i, 2) for i in range(13)]
    sp = line_space(pts)
    rulers = {(pts[0], pts[-1]): DiscretePath(sp, tuple(pts))}
    for i, a in enumerate(pts):
        for b in pts[i + 1 :]:
            if b - a > 1:
                rulers[(a, b)] = DiscretePath(sp, tuple(p for p in pts if a <= p <= b))
    g = geodesic_completion(sp, rulers, 1)
    kinds = {k for _, k, _ in g.nodes}
    assert kinds == {"base", "subdivision"}
    assert g.certificate["ok"]
    n = len(pts)
    fw = floyd_warshall(len(g.nodes), [(u, v, w) for u, v, w, _ in g.edges])
    assert [r[:n] for r in fw[:n]] == [list(r[:n]) for r in g.dprime[:n]]
    assert CompletionGraph.from_json(g.to_json()) == g


def test_completion_errors():
    sp = line_space([0, 1, 3])
    with pytest.raises(ValidationError) as e:
        geodesic_completion(sp, {}, 1)
    assert e.value.code == "missing-ruler"
    with pytest.raises(ValidationError) as e:
        geodesic_completion(sp, {(0, 3): DiscretePath(sp, (0, 3))}, 1)
    assert e.value.code == "bad-ruler"
    with pytest.raises(ValidationError) as e:
        geodesic_completion(sp, {(0, 3): DiscretePath(sp, (0, 1))}, 4)
    assert e.value.code == "bad-ruler"


@given(st.integers(2, 7), st.data())
def test_completion_idempotent_on_geodesic_spaces(n, data):
    D = Fraction(2)
    edges = [(i, data.draw(st.integers(0, i - 1)), data.draw(st.sampled_from([1, Fraction(3, 2)])))
             for i in range(1, n)]
    sp = FiniteMetricSpace.from_graph(list(range(n)), edges)
    parent = {i: j for i, j, _ in edges}

    def to_root(v):
        out = [v]
        while out[-1] in parent:
            out.append(parent[out[-1]])
        return out

    rulers = {}
    for a in range(n):
        for b in range(a + 1, n):
            pa, pb = to_root(a), to_root(b)
            common = next(x for x in pa if x in pb)
            route = pa[: pa.index(common) + 1] + pb[: pb.index(common)][::-1]
            rulers[(a, b)] = DiscretePath(sp, tuple(route))
    g = geodesic_completion(sp, rulers, D)
    assert g.certificate["ok"]
    for i in range(n):
        for j in range(n):
            if sp.dist[i][j] >= D / 2:
                assert g.dprime[i][j] == sp.dist[i][j]


# -- product bound ------------------------------------------------------------


def test_product_bound_examples():
    t = generate_fixture("tree(3,3)")
    sp = t.metric_space("r")
    ray = DiscretePath(sp, ("r", "r.0", "r.0.0", "r.0.0.0"))
    rep = check_product_bound(sp, ray, ray, "r", 2, 0, 2, 2)
    assert rep.status == "pass"
    other = DiscretePath(sp, ("r", "r.0", "r.0.0", "r.0.0.1"))
    rep = check_product_bound(sp, ray, other, "r", 2, 0, 2, 1)
    assert rep.status == "pass" and rep.stand_in == 2 and rep.distance == 1
    # equality in the distance bound: d = D + 2 delta + |d(o,x') - d(o,y')| with D = 1
    rep = check_product_bound(sp, ray, other, "r", Fraction(3, 2), 0, 2, 2)
    assert rep.distance == 0 and rep.status == "pass"

    g = generate_fixture("grid(3,3)")
    gs = g.metric_space("0,0")
    delta = estimate_delta(gs)
    diag = DiscretePath(gs, ("0,0", "1,0", "1,1", "2,1", "2,2"))
    horiz = DiscretePath(gs, ("0,0", "1,0", "2,0", "3,0"))
    for xp in range(len(diag)):
        for yp in range(len(horiz)):
            rep = check_product_bound(gs, diag, horiz, "0,0", 2, delta, xp, yp)
            assert rep.status in ("pass", "inconclusive")
            if rep.status == "pass":
                assert rep.product_ok and rep.distance_ok


def test_product_bound_rejects_bad_rulers():
    sp = line_space([0, 1, 2])
    with pytest.raises(ValidationError):
        check_product_bound(sp, DiscretePath(sp, (1, 2)), DiscretePath(sp, (0, 1)), 0, 2, 0, 0, 0)
    with pytest.raises(ValidationError):
        check_product_bound(sp, DiscretePath(sp, (0, 2)), DiscretePath(sp, (0, 1)), 0, 2, 0, 0, 0)
