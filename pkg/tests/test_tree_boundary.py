import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from coarsegeom.errors import ValidationError
from coarsegeom.tree_boundary import (
    EntwinedFamily,
    TruncatedTree,
    VertexBijection,
    boundary_image_identity,
    build_phi,
    eligible_vertices,
    find_auxiliary_with_open_ends,
    generate_family,
    is_auxiliary,
    verify_phi,
)


def single_member_family(root_kids, kids, depth):
    """One-member family: the root has ``root_kids`` children, every other vertex ``kids``."""
    children, counts, level = {}, {}, {}
    frontier = ["r"]
    level["r"] = 1
    for g in range(depth + 1):
        nxt = []
        for u in frontier:
            c = root_kids if u == "r" else kids
            counts[u] = (c,)
            children[u] = tuple(f"{u}.{j}" for j in range(c)) if g < depth else ()
            for w in children[u]:
                level[w] = 1
            nxt.extend(children[u])
        frontier = nxt
    amb = TruncatedTree("r", depth, children, {u: math.inf for u in level})
    return EntwinedFamily(amb, level, counts, 1)


def corrupt(bij):
    """Swap the images of two deepest mapped vertices lying in different top-level branches."""
    A = bij.family.ambient
    deep = max(
        g for g in range(2, A.depth + 1)
        if len({A.path[u][1] for u in bij.forward if A.generation[u] == g}) > 1
    )
    cands = sorted((u for u in bij.forward if A.generation[u] == deep), key=A.rank.get)
    a = cands[0]
    b = next(u for u in cands if A.path[u][1] != A.path[a][1])
    fwd = dict(bij.forward)
    fwd[a], fwd[b] = fwd[b], fwd[a]
    inv = {v: u for u, v in fwd.items()}
    return VertexBijection(bij.family, bij.family_p, fwd, inv, bij.pairings, bij.frontier), a, b


# -- family generation -------------------------------------------------------


def test_regular_rule_degrees():
    fam = generate_family({"levels": 4, "rule": "regular:+1", "seed": 7}, depth=4, width_cap=64)
    assert fam.strongly_entwined and fam.filling
    assert [fam.declared_at("r", i) for i in range(1, 5)] == [3, 4, 5, 6]
    child = fam.ambient.kids("r")[0]
    assert fam.member(1).declared(child) + 1 == 3
    assert fam.min_member_degree == 3


def test_one_level_family_is_ambient():
    fam = generate_family({"levels": 1, "rule": "regular:+1"}, depth=3, width_cap=1000)
    assert fam.m == 1 and fam.filling
    assert set(fam.member(1).order) == set(fam.ambient.order)


def test_random_rule_seeds_differ():
    a = generate_family({"levels": 3, "rule": "random:+1..3", "seed": 1}, depth=5, width_cap=64)
    b = generate_family({"levels": 3, "rule": "random:+1..3", "seed": 2}, depth=5, width_cap=64)
    assert a.strongly_entwined and b.strongly_entwined
    assert a.to_json() != b.to_json()
    again = generate_family({"levels": 3, "rule": "random:+1..3", "seed": 1}, depth=5, width_cap=64)
    assert again.to_json() == a.to_json()


@pytest.mark.parametrize("rule,code", [("regular:+0", "rule-not-entwined"), ("random:+0..2", "rule-not-entwined"),
                                       ("spiral", "bad-rule")])
def test_bad_rules(rule, code):
    with pytest.raises(ValidationError) as e:
        generate_family({"levels": 2, "rule": rule}, depth=2)
    assert e.value.code == code


def test_width_cap_truncates_whole_generations_tail():
    fam = generate_family({"levels": 2, "rule": "regular:+2"}, depth=4, width_cap=20)
    A = fam.ambient
    for g in range(5):
        gen = [u for u in A.order if A.generation[u] == g]
        assert len(gen) <= 20
        flags = [A.kids(u) == () for u in gen]
        assert flags == sorted(flags)


def test_family_json_round_trip():
    fam = generate_family({"levels": 3, "rule": "random:+1..2", "seed": 3}, depth=4, width_cap=40)
    back = EntwinedFamily.from_json(fam.to_json())
    assert back == fam and back.to_json() == fam.to_json()


# -- auxiliary subtrees -------------------------------------------------------


def test_is_auxiliary_examples():
    T = single_member_family(3, 2, 3).member(1)
    ok, wit = is_auxiliary(T, "r", ["r", "r.0", "r.1", "r.2"])
    assert ok and wit is None
    ok, wit = is_auxiliary(T, "r", ["r"])
    assert not ok and wit["condition"] == "root-children"
    ok, wit = is_auxiliary(T, "r", ["r", "r.0", "r.1", "r.2", "r.0.0", "r.0.1"])
    assert not ok and wit == {"condition": "open-end", "vertex": "r.0"}
    with pytest.raises(ValidationError):
        is_auxiliary(T, "r", ["r", "r.0.0"])


def test_find_auxiliary_examples():
    T = single_member_family(3, 2, 3).member(1)
    S = find_auxiliary_with_open_ends(T, "r", 3)
    assert S.vertices == ("r", "r.0", "r.1", "r.2") and S.open_ends == ("r.0", "r.1", "r.2")
    B = single_member_family(2, 2, 3).member(1)
    S = find_auxiliary_with_open_ends(B, "r", 3)
    assert S.vertices == ("r", "r.0", "r.1", "r.0.0")
    with pytest.raises(ValidationError) as e:
        find_auxiliary_with_open_ends(B, "r", 1)
    assert e.value.code == "bad-k"
    with pytest.raises(ValidationError) as e:
        find_auxiliary_with_open_ends(single_member_family(2, 2, 1).member(1), "r", 5)
    assert e.value.code == "exhausted"


@given(st.integers(2, 4), st.integers(1, 3), st.integers(0, 20))
def test_find_auxiliary_open_end_count(root_kids, kids, extra):
    T = single_member_family(root_kids, kids, 4).member(1)
    k = root_kids + extra
    try:
        S = find_auxiliary_with_open_ends(T, "r", k)
    except ValidationError as e:
        assert e.code == "exhausted"
        return
    assert len(S.open_ends) == k and len(S.vertices) == k + 1
    assert is_auxiliary(T, "r", S.vertices) == (True, None)


# -- the bijection ------------------------------------------------------------


def test_phi_identity_on_equal_families():
    fam = generate_family({"levels": 1, "rule": "regular:+1"}, depth=5, width_cap=200)
    bij = build_phi(fam, fam)
    assert all(u == v for u, v in bij.forward.items())
    assert verify_phi(bij)["ok"]


def test_phi_step_one_unequal_degrees():
    A = single_member_family(3, 2, 4)
    B = single_member_family(2, 2, 4)
    bij = build_phi(A, B)
    first = bij.pairings[0]
    assert first.S.vertices == ("r", "r.0", "r.1", "r.2")
    assert first.S_p.vertices == ("r", "r.0", "r.1", "r.0.0")
    assert len(first.sigma) == 3
    assert verify_phi(bij)["ok"]


def test_phi_depth_zero():
    fam = generate_family({"levels": 2, "rule": "regular:+1"}, depth=0)
    bij = build_phi(fam, fam)
    assert bij.forward == {"r": "r"}


def test_phi_errors():
    a = generate_family({"levels": 2, "rule": "regular:+1"}, depth=3, width_cap=64)
    b = generate_family({"levels": 2, "rule": "regular:+1"}, depth=4, width_cap=64)
    c = generate_family({"levels": 3, "rule": "regular:+1"}, depth=3, width_cap=64)
    with pytest.raises(ValidationError) as e:
        build_phi(a, b)
    assert e.value.code == "depth-insufficient"
    with pytest.raises(ValidationError) as e:
        build_phi(a, c)
    assert e.value.code == "level-mismatch"


@pytest.mark.parametrize("seed", range(6))
def test_phi_on_random_pairs(seed):
    A = generate_family({"levels": 3, "rule": "random:+1..3", "seed": 2 * seed}, depth=6, width_cap=32)
    B = generate_family({"levels": 3, "rule": "random:+1..3", "seed": 2 * seed + 1}, depth=6, width_cap=32)
    bij = build_phi(A, B)
    rep = verify_phi(bij)
    assert rep["ok"], rep
    back = build_phi(B, A)
    assert dict(back.forward) == dict(bij.inverse)
    assert set(back.pairings) == set(bij.reversed().pairings)
    assert VertexBijection.from_json(bij.to_json()) == bij
    for v in eligible_vertices(bij, 4):
        assert boundary_image_identity(bij, v)["status"] == "pass"


def test_corrupted_phi_is_caught():
    A = generate_family({"levels": 2, "rule": "regular:+1", "seed": 0}, depth=6, width_cap=64)
    B = generate_family({"levels": 2, "rule": "random:+1..2", "seed": 5}, depth=6, width_cap=64)
    bij = build_phi(A, B)
    bad, a, b = corrupt(bij)
    rep = verify_phi(bad)
    assert rep["prop1"]["ok"] and not rep["prop4"]["ok"]
    top = bad.family.ambient.path[a][1]
    res = boundary_image_identity(bad, top)
    assert res["status"] == "fail" and not (res["forward_ok"] and res["converse_ok"])


def test_boundary_identity_examples():
    fam = generate_family({"levels": 1, "rule": "regular:+1"}, depth=6, width_cap=400)
    bij = build_phi(fam, fam)
    v = "r.0"
    res = boundary_image_identity(bij, v)
    assert res["D_v"] == [v]
    assert res["status"] == "pass" and res["forward_ok"] and res["converse_ok"]
    assert all(bij.forward[w] == w for w in res["C_v"])
    with pytest.raises(ValidationError):
        boundary_image_identity(bij, "r")
    deep = [u for u in fam.ambient.order if fam.ambient.generation[u] == 6][0]
    assert boundary_image_identity(bij, deep)["status"] == "inconclusive"
