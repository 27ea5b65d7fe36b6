import random

import pytest
from hypothesis import given, settings, strategies as st

from treemoves.moves import (
    MoveError,
    MoveRecord,
    Op,
    apply_move,
    apply_spr,
    apply_tbr,
    classify_move,
    enumerate_moves,
    invert_move,
    neighbors,
    neighbors_by_enumeration,
    tbr_as_two_sprs,
)
from treemoves.tree import canonicalize, caterpillar, enumerate_trees, is_isomorphic, parse_newick, random_tree

TBR_LEFT = "(0,((1,2),(3,(4,(5,6)))));"
TBR_RIGHT = "(0,(1,(2,((3,4),(5,6)))));"


def spr_neighbourhood_size(n_leaves):
    return 2 * (n_leaves - 3) * (2 * n_leaves - 7)


def moves_reaching(a, b, op):
    target = canonicalize(b)
    return [m for m in enumerate_moves(a, op) if canonicalize(apply_move(a, m)) == target]


# --- Op ------------------------------------------------------------------


def test_op_parse_and_names():
    assert Op.parse("rSPR") is Op.RSPR
    assert str(Op.TBR) == "TBR"
    with pytest.raises(ValueError):
        Op.parse("nni")


def test_record_json_round_trip():
    m = MoveRecord.tbr((3, 4), (3, 1), 4)
    assert MoveRecord.from_json(m.to_json()) == m
    s = MoveRecord.spr(5, 1, 2, 3, 6, 7, rooted=True)
    assert MoveRecord.from_dict(s.to_dict()) == s
    with pytest.raises(MoveError):
        MoveRecord.from_dict({"kind": "spr", "x": 1})


# --- TBR -------------------------------------------------------------------


def test_tbr_pair_is_one_move_apart():
    a, b = parse_newick(TBR_LEFT), parse_newick(TBR_RIGHT)
    found = moves_reaching(a, b, Op.TBR)
    assert found
    for m in found:
        apply_tbr(a, m).validate()
    assert not moves_reaching(a, b, Op.SPR)


def test_pendant_bisection_back_in_place():
    t = parse_newick(TBR_LEFT)
    leaf = t.leaf(3)
    (p,) = t.neighbors(leaf)
    q = min(w for w in t.neighbors(p) if w != leaf)
    m = MoveRecord.tbr((leaf, p), leaf, (p, q))
    assert is_isomorphic(apply_tbr(t, m), t)


def test_tbr_from_four_leaf_tree_reaches_the_others():
    t = parse_newick("(0,(1,(2,3)));")
    reached = {canonicalize(apply_tbr(t, m)) for m in enumerate_moves(t, Op.TBR)}
    others = {canonicalize(u) for u in enumerate_trees(range(4))} - {canonicalize(t)}
    assert reached - {canonicalize(t)} == others


def test_tbr_rejects_bad_targets():
    t = parse_newick(TBR_LEFT)
    leaf = t.leaf(1)
    (p,) = t.neighbors(leaf)
    with pytest.raises(MoveError):
        apply_tbr(t, MoveRecord.tbr((leaf, p), (leaf, p), t.leaf(0)))
    with pytest.raises((MoveError, ValueError)):
        apply_tbr(t, MoveRecord.tbr((t.leaf(0), t.leaf(1)), t.leaf(0), t.leaf(1)))


# --- SPR -------------------------------------------------------------------


def test_spr_moves_root_leaf_of_caterpillar():
    n = 5
    a = caterpillar(range(n + 1))
    b = caterpillar([0] + list(range(n, 0, -1)))
    y = a.leaf(0)
    (x,) = a.neighbors(y)
    p, q = sorted(w for w in a.neighbors(x) if w != y)
    end = a.leaf(n)
    (c,) = a.neighbors(end)
    m = MoveRecord.spr(x, y, p, q, c, end)
    out = apply_spr(a, m)
    out.validate()
    assert is_isomorphic(out, b)
    assert classify_move(a, m) is Op.SPR


def test_spr_validity_clauses():
    t = caterpillar(range(6))
    y = t.leaf(3)
    (x,) = t.neighbors(y)
    p, q = sorted(w for w in t.neighbors(x) if w != y)
    with pytest.raises(MoveError, match="distinct"):
        apply_spr(t, MoveRecord.spr(x, y, p, q, p, x))

    # y internal: its side holds leaves 2..5, so regrafting onto leaf 4 breaks the path clause
    x = t.neighbors(t.leaf(1))[0]
    y = next(w for w in t.neighbors(x) if 4 in t.side_labels(x, w))
    p, q = sorted(w for w in t.neighbors(x) if w != y)
    four = t.leaf(4)
    with pytest.raises(MoveError, match="path"):
        apply_spr(t, MoveRecord.spr(x, y, p, q, t.neighbors(four)[0], four))

    r = t.leaf(0)
    (rx,) = t.neighbors(r)
    a, b = sorted(w for w in t.neighbors(rx) if w != r)
    end = t.leaf(5)
    with pytest.raises(MoveError, match="root"):
        apply_spr(t, MoveRecord.spr(rx, r, a, b, t.neighbors(end)[0], end, rooted=True))


def test_rspr_pruning_away_from_root():
    t = parse_newick(TBR_LEFT)
    y = t.leaf(6)
    (x,) = t.neighbors(y)
    a, b = sorted(w for w in t.neighbors(x) if w != y)
    one = t.leaf(1)
    (c,) = t.neighbors(one)
    m = MoveRecord.spr(x, y, a, b, c, one, rooted=True)
    apply_spr(t, m).validate()
    assert classify_move(t, m) is Op.RSPR


def test_spr_inverse_swaps_edges():
    t = random_tree(6, seed=1)
    for rec in list(enumerate_moves(t, Op.SPR))[:40]:
        inv = invert_move(t, rec)
        assert (inv.x, inv.y) == (rec.x, rec.y)
        assert (inv.a, inv.b, inv.c, inv.d) == (rec.c, rec.d, rec.a, rec.b)


def test_classify_genuine_tbr():
    a, b = parse_newick(TBR_LEFT), parse_newick(TBR_RIGHT)
    for m in moves_reaching(a, b, Op.TBR):
        assert classify_move(a, m) is Op.TBR


# --- neighbourhoods --------------------------------------------------------


def test_three_leaf_neighbourhood():
    for t in enumerate_trees(range(4)):
        others = {canonicalize(u) for u in enumerate_trees(range(4))} - {canonicalize(t)}
        for op in Op:
            assert neighbors(t, op) == others


def test_three_leaf_tree_has_no_neighbours():
    t = parse_newick("(0,(1,2));")
    for op in Op:
        assert neighbors(t, op) == set()
        assert all(is_isomorphic(apply_move(t, m), t) for m in enumerate_moves(t, op))


@pytest.mark.parametrize("n", [3, 4, 5])
def test_split_engine_matches_enumeration(n):
    for t in enumerate_trees(range(n + 1)):
        for op in Op:
            assert neighbors(t, op) == neighbors_by_enumeration(t, op)


@pytest.mark.parametrize("n", [4, 5, 6, 7])
def test_spr_neighbourhood_size(n):
    t = random_tree(n, seed=n)
    assert len(neighbors(t, Op.SPR)) == spr_neighbourhood_size(n + 1)


@pytest.mark.parametrize("n", [4, 5, 6])
def test_neighbourhood_containment(n):
    rng = random.Random(n)
    for _ in range(10):
        t = random_tree(n, rng=rng)
        r, s, b = (neighbors(t, op) for op in (Op.RSPR, Op.SPR, Op.TBR))
        assert r <= s <= b


# --- inverse and decomposition --------------------------------------------


def random_move(tree, op, rng):
    moves = list(enumerate_moves(tree, op))
    return moves[rng.randrange(len(moves))]


@settings(max_examples=120, deadline=None)
@given(st.integers(min_value=3, max_value=8), st.integers(min_value=0, max_value=10**6), st.sampled_from(list(Op)))
def test_inverse_round_trip(n, seed, op):
    rng = random.Random(seed)
    t = random_tree(n, rng=rng)
    m = random_move(t, op, rng)
    out = apply_move(t, m)
    out.validate()
    inv = invert_move(t, m)
    assert inv.kind == m.kind
    assert canonicalize(apply_move(out, inv)) == canonicalize(t)


def test_tbr_inverse_round_trip_five_leaves():
    rng = random.Random(5)
    for _ in range(500):
        t = random_tree(5, rng=rng)
        m = random_move(t, Op.TBR, rng)
        back = apply_tbr(apply_tbr(t, m), invert_move(t, m))
        assert canonicalize(back) == canonicalize(t)


def test_tbr_pair_splits_into_two_sprs():
    a, b = parse_newick(TBR_LEFT), parse_newick(TBR_RIGHT)
    m = moves_reaching(a, b, Op.TBR)[0]
    c, s1, s2 = tbr_as_two_sprs(a, b, m)
    assert s1 is not None and s2 is not None
    assert canonicalize(apply_spr(a, s1)) == canonicalize(c)
    assert canonicalize(apply_spr(c, s2)) == canonicalize(b)


def test_spr_shaped_tbr_needs_one_spr():
    t = parse_newick(TBR_LEFT)
    leaf = t.leaf(5)
    (p,) = t.neighbors(leaf)
    one = t.leaf(1)
    (c,) = t.neighbors(one)
    m = MoveRecord.tbr((leaf, p), leaf, (c, one))
    b = apply_tbr(t, m)
    mid, s1, s2 = tbr_as_two_sprs(t, b, m)
    assert s2 is None
    assert is_isomorphic(mid, b)


def test_two_spr_decomposition_at_seven_leaves():
    rng = random.Random(77)
    for _ in range(200):
        a = random_tree(7, rng=rng)
        m = random_move(a, Op.TBR, rng)
        b = apply_tbr(a, m)
        c, s1, s2 = tbr_as_two_sprs(a, b, m)
        end = a if s1 is None else apply_spr(a, s1)
        assert canonicalize(end) == canonicalize(c)
        if s2 is not None:
            end = apply_spr(c, s2)
        assert canonicalize(end) == canonicalize(b)


def test_two_spr_decomposition_rejects_wrong_target():
    a = parse_newick(TBR_LEFT)
    m = next(iter(enumerate_moves(a, Op.TBR)))
    with pytest.raises(MoveError):
        tbr_as_two_sprs(a, parse_newick(TBR_RIGHT), m)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_classification_agrees_with_neighbourhoods(n):
    order = [Op.RSPR, Op.SPR, Op.TBR]
    for t in enumerate_trees(range(n + 1)):
        own = canonicalize(t)
        hoods = {op: neighbors(t, op) for op in Op}
        for m in enumerate_moves(t, Op.TBR):
            form = canonicalize(apply_tbr(t, m))
            if form == own:
                continue
            cls = classify_move(t, m)
            for op in order[order.index(cls):]:
                assert form in hoods[op]


def test_isolated_root_leaf_is_not_rspr():
    t = parse_newick("(0,(((1,3),4),2));")
    root = t.leaf(0)
    (p,) = t.neighbors(root)
    one = t.leaf(1)
    m = MoveRecord.tbr((root, p), root, (t.neighbors(one)[0], one))
    out = apply_tbr(t, m)
    assert classify_move(t, m) is Op.SPR
    assert canonicalize(out) not in neighbors(t, Op.RSPR)
