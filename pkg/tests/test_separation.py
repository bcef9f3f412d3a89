import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coarsegeom.cube_complex import generate_fixture, geodesic_between, l1_distance
from coarsegeom.errors import ValidationError
from coarsegeom.metric_core import Constant, Log
from coarsegeom.separation import (
    build_dl_space,
    chain_profile,
    check_chain_surgery,
    common_separator_chain,
    crosses,
    crossed_facing_triple,
    degree_matrix,
    dl_chain,
    dl_distance,
    dl_matrix,
    is_facing_triple,
    well_separation_degree,
)
from oracles import bfs_matrix, crossing, degree_bf, dl_bf, facing_bf, delta_np
from test_cube_complex import fixture_specs


def oracle_halfspaces(s):
    """BFS-derived halfspace per package hyperplane, aligned with package ids."""
    d = bfs_matrix(list(range(len(s.vertices))), list(s.edges))
    out = []
    for h in s.hyperplanes:
        u, v = next(iter(h.edge_class))
        out.append(frozenset(w for w in range(len(s.vertices)) if d[w][u] < d[w][v]))
    return out


def hid(s, a, b):
    return s.edge_hyperplane[tuple(sorted((s.idx(a), s.idx(b))))]


# -- facing triples and degrees ---------------------------------------------


def test_facing_triple_examples():
    t = generate_fixture("tree(3,1)")
    assert is_facing_triple(t, "h0", "h1", "h2")
    p = generate_fixture("path(3)")
    assert not is_facing_triple(p, 0, 1, 2)
    g = generate_fixture("grid(1,2)")
    a, b = hid(g, "0,0", "1,0"), hid(g, "0,0", "0,1")
    c = hid(g, "0,1", "0,2")
    assert crosses(g, a, b)
    assert not is_facing_triple(g, a, b, c)


@pytest.mark.parametrize("spec", ["tree(3,2)", "grid(2,2)", "tree_x_path(tree(3,1),1)", "grid(1,3)"])
def test_facing_and_degree_match_oracle(spec):
    s = generate_fixture(spec)
    hs = oracle_halfspaces(s)
    n = len(s.vertices)
    H = range(len(hs))
    for a, b, c in itertools.combinations(H, 3):
        assert is_facing_triple(s, a, b, c) == facing_bf(hs, n, a, b, c)
    for a, b in itertools.combinations(H, 2):
        rep = well_separation_degree(s, a, b)
        assert rep.disjoint == (not crossing(hs[a], hs[b], n))
        assert rep.degree == degree_bf(hs, n, a, b)
        assert len(rep.witness) == rep.degree


def test_tree_hyperplanes_are_zero_well_separated():
    s = generate_fixture("tree(3,2)")
    for a, b in itertools.combinations(range(len(s.hyperplanes)), 2):
        rep = well_separation_degree(s, a, b)
        assert rep.disjoint and rep.degree == 0 and rep.well_separated(0)


@pytest.mark.parametrize("a,b", [(2, 2), (3, 2), (2, 4)])
def test_parallel_grid_walls_have_degree_b(a, b):
    s = generate_fixture(f"grid({a},{b})")
    h1, h2 = hid(s, "0,0", "1,0"), hid(s, "1,0", "2,0")
    rep = well_separation_degree(s, h1, h2)
    assert rep.disjoint and rep.degree == b


def test_crossing_pair_never_well_separated():
    s = generate_fixture("grid(1,1)")
    rep = well_separation_degree(s, 0, 1)
    assert not rep.disjoint and not rep.well_separated(10**6)


@given(fixture_specs())
def test_degree_matrix_symmetric(spec):
    s = generate_fixture(spec)
    m = degree_matrix(s)
    assert (m == m.T).all()


# -- d_L -------------------------------------------------------------------


def test_dl_examples():
    g = generate_fixture("grid(2,2)")
    assert dl_distance(g, 0, "1,1", "1,1") == 0
    # frozen from the exhaustive family enumeration
    assert [dl_distance(g, L, "0,0", "2,2") for L in (0, 1, 2)] == [1, 1, 2]
    hs = oracle_halfspaces(g)
    a, b = g.idx("0,0"), g.idx("2,2")
    assert [dl_bf(hs, 9, L, a, b) for L in (0, 1, 2)] == [1, 1, 2]
    chain = dl_chain(g, 2, "0,0", "2,2")
    assert len(chain) == 2


@pytest.mark.parametrize("spec", ["path(5)", "tree(3,2)", "tree(2/3,3)"])
def test_dl_equals_l1_on_trees(spec):
    s = generate_fixture(spec)
    for L in (0, 1, 2):
        assert (dl_matrix(s, L) == s.l1_matrix).all()


@pytest.mark.parametrize("spec", ["grid(2,2)", "grid(1,3)", "tree_x_path(tree(3,1),2)", "grid(2,3)"])
def test_dl_matches_oracle_both_conventions(spec):
    s = generate_fixture(spec)
    hs = oracle_halfspaces(s)
    n = len(s.vertices)
    for L in (0, 1, 2):
        cons, pair = dl_matrix(s, L), dl_matrix(s, L, pairwise=True)
        for x, y in itertools.combinations(range(n), 2):
            assert cons[x, y] == dl_bf(hs, n, L, x, y)
            assert pair[x, y] == dl_bf(hs, n, L, x, y, pairwise=True)


@given(fixture_specs())
def test_dl_monotone_dominated_and_metric(spec):
    s = generate_fixture(spec)
    prev = None
    for L in (0, 1, 2, 3):
        m = dl_matrix(s, L)
        assert (m <= s.l1_matrix).all()
        assert (m == m.T).all()
        for z in range(len(m)):
            assert not (m[:, z, None] + m[None, z, :] < m).any()
        if prev is not None:
            assert (prev <= m).all()
        prev = m


def test_build_dl_space_examples():
    p = build_dl_space(generate_fixture("path(6)"), 2)
    assert (p.dl == p.base.l1_matrix).all()
    s = build_dl_space(generate_fixture("grid(4,4)"), 1)
    assert s.report["triangle_inequality"]
    assert Fraction(s.report["delta"]) <= 27 and s.report["delta_within_bound"]
    assert Fraction(s.report["delta"]) == delta_np(s.dl)
    one = build_dl_space(generate_fixture("path(0)"), 0)
    assert one.dl.tolist() == [[0]]


def test_dl_space_reports_collapse():
    rep = build_dl_space(generate_fixture("grid(1,1)"), 0).report
    assert rep["zero_distance_pairs"] == []
    with pytest.raises(ValidationError):
        dl_distance(generate_fixture("path(2)"), -1, "0", "1")


# -- chain profiles -----------------------------------------------------------


def test_chain_profile_examples():
    t = generate_fixture("tree(3,3)")
    geo = ["r.0.0.0", "r.0.0", "r.0", "r", "r.1", "r.1.0"]
    prof = chain_profile(t, geo, 0, Constant(1), 1)
    assert prof.m == len(geo) - 1 and prof.dl_endpoints == 5
    g = generate_fixture("grid(6,3)")
    row = [f"{i},1" for i in range(7)]
    prof = chain_profile(g, row, 0, Constant(1), Fraction(1, 2))
    assert prof.m == 1
    wide = chain_profile(g, row, 0, Constant(1), 3)
    assert wide.m == 6
    assert chain_profile(g, ["2,2"], 0, Constant(1), 1).m == 0
    with pytest.raises(ValidationError) as e:
        chain_profile(g, ["0,0", "1,0", "0,0"], 0, Constant(1), 1)
    assert e.value.code == "non-geodesic"


@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_chain_profile_is_a_valid_chain(seed, c):
    s = generate_fixture("grid(4,3)")
    rng = np.random.default_rng(seed)
    x, y = rng.choice(len(s.vertices), 2, replace=False)
    path = geodesic_between(s, s.vertices[x], s.vertices[y], rng)
    k = Log(1, 1)
    prof = chain_profile(s, path, 0, k, c)
    assert 1 <= prof.m <= l1_distance(s, path[0], path[-1])
    assert list(prof.times) == sorted(prof.times)
    for (t_prev, t), (a, b), dg in zip(
        zip(prof.times, prof.times[1:]), zip(prof.hyperplanes, prof.hyperplanes[1:]), prof.degrees
    ):
        rep = well_separation_degree(s, a, b)
        assert rep.disjoint and rep.degree == dg
        assert dg <= c * float(k(t))


# -- chain surgery ---------------------------------------------------------


def test_surgery_tree_ray():
    s = generate_fixture("tree(3,6)")
    x, y = "r.0.0.0.0.0.0", "r.0.0.0.0.0.1"
    chain = common_separator_chain(s, 0, "r", x, y)
    rep = check_chain_surgery(s, 0, chain, x, y, "r")
    assert rep.l0 == 5 and rep.bound == 3 and rep.product >= 3 and rep.status == "pass"


def test_surgery_vacuous_and_grid():
    g = generate_fixture("grid(4,1)")
    dl = build_dl_space(g, 1, verify=False)
    x, y = "3,1", "4,0"
    chain = [hid(g, "0,0", "1,0"), hid(g, "1,0", "2,0"), hid(g, "2,0", "3,0")]
    rep = check_chain_surgery(g, 1, chain, x, y, "0,0", dl)
    assert rep.l0 == 3 and rep.bound == 0 and rep.ok
    assert rep.product == dl.gromov_product(x, y, "0,0")
    bad = check_chain_surgery(g, 1, [chain[0], hid(g, "0,0", "0,1")], x, y, "0,0", dl)
    assert bad.status == "hypothesis-unmet"


def test_facing_triple_finder():
    t = generate_fixture("tree(3,1)")
    assert crossed_facing_triple(t, ["r.0", "r", "r.1"]) is None
