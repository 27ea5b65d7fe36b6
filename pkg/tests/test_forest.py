import random

import pytest

from treemoves.forest import (
    ForestError,
    LabelPartition,
    SearchTooLarge,
    forest_to_moves,
    min_forest_bruteforce,
    moves_to_forest,
    validate_forest,
)
from treemoves.moves import MoveRecord, Op, apply_move, classify_move, enumerate_moves
from treemoves.search import exact_distance
from treemoves.tree import canonicalize, caterpillar, is_isomorphic, parse_newick, random_tree, restrict

PAIR_A = "(0,(4,(3,(1,2))));"
PAIR_B = "(0,(1,(2,(3,4))));"
KNOWN_MINIMAL_FORESTS = [[[0, 1, 4], [2], [3]], [[0, 3, 4], [1], [2]], [[0, 1, 2], [3], [4]]]


def naive_is_forest(trees, blocks, rooted):
    """Direct check: isomorphic restrictions plus vertex-disjoint spanning subtrees."""
    for blk in blocks:
        labels = set(blk) | ({0} if rooted else set())
        if len(labels) > 1:
            forms = {canonicalize(restrict(t, labels)) for t in trees}
            if len(forms) != 1:
                return False
    for t in trees:
        used = set()
        for blk in blocks:
            span = restrict(t, blk, suppress=False).vertices
            if used & span:
                return False
            used |= span
    return True


def set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]


def naive_min_forest(trees, rooted):
    labels = sorted(trees[0].label_set)
    return min(len(p) for p in set_partitions(labels) if naive_is_forest(trees, p, rooted))


# --- LabelPartition -------------------------------------------------------


def test_partition_text_round_trip():
    p = LabelPartition([[3, 1], [0], [2, 4]])
    assert p.to_lists() == [[0], [1, 3], [2, 4]]
    assert LabelPartition.from_text(p.to_text()) == p
    assert LabelPartition.from_text("0 1  # comment\n\n2,3\n").to_lists() == [[0, 1], [2, 3]]


def test_partition_rejects_overlap_and_empty():
    with pytest.raises(ForestError):
        LabelPartition([[0, 1], [1, 2]])
    with pytest.raises(ForestError):
        LabelPartition([[0], []])
    with pytest.raises(ForestError):
        LabelPartition.from_text("0 x\n")


# --- validation -------------------------------------------------------------


def test_single_block_on_equal_trees():
    t = random_tree(6, seed=3)
    assert validate_forest([t, t], LabelPartition([t.label_set]))
    assert validate_forest([t, t], LabelPartition([t.label_set]), rooted=True)


def test_known_minimal_forests_validate():
    a, b = parse_newick(PAIR_A), parse_newick(PAIR_B)
    for blocks in KNOWN_MINIMAL_FORESTS:
        assert validate_forest([a, b], LabelPartition(blocks), rooted=True)
        assert naive_is_forest([a, b], blocks, rooted=True)


def test_trivial_forest_always_valid():
    rng = random.Random(1)
    for _ in range(20):
        a, b = random_tree(6, rng=rng), random_tree(6, rng=rng)
        singles = LabelPartition([[x] for x in range(7)])
        assert validate_forest([a, b], singles)
        # rooted: 0 joins any one other label, the rest are singletons
        assert validate_forest([a, b], LabelPartition([[0, 1]] + [[x] for x in range(2, 7)]), rooted=True)


def test_validation_rejects_wrong_label_set():
    a, b = parse_newick(PAIR_A), parse_newick(PAIR_B)
    with pytest.raises(ForestError):
        validate_forest([a, b], LabelPartition([[0, 1, 2, 3]]))
    with pytest.raises(ForestError):
        validate_forest([a, parse_newick("(0,(1,(2,3)));")], LabelPartition([[0, 1, 2, 3, 4]]))


def test_validation_agrees_with_naive_check():
    rng = random.Random(11)
    for _ in range(40):
        a, b = random_tree(5, rng=rng), random_tree(5, rng=rng)
        for blocks in set_partitions(list(range(6))):
            for rooted in (False, True):
                assert validate_forest([a, b], LabelPartition(blocks), rooted) == naive_is_forest([a, b], blocks, rooted)


# --- brute force -------------------------------------------------------------


def test_min_forest_equal_trees():
    t = random_tree(7, seed=2)
    assert min_forest_bruteforce([t, t])[0] == 1
    assert min_forest_bruteforce([t, t], rooted=True)[0] == 1


def test_reversed_pair_minimum_and_count():
    a, b = parse_newick(PAIR_A), parse_newick(PAIR_B)
    m, part, count = min_forest_bruteforce([a, b], rooted=True, count_all=True)
    assert m == 3
    assert validate_forest([a, b], part, rooted=True)
    minimal = [p for p in set_partitions(list(range(5))) if len(p) == 3 and naive_is_forest([a, b], p, True)]
    assert count == len(minimal) == 7
    found = {tuple(map(tuple, LabelPartition(p).to_lists())) for p in minimal}
    for blocks in KNOWN_MINIMAL_FORESTS:
        assert tuple(map(tuple, LabelPartition(blocks).to_lists())) in found


def test_caterpillar_pair_rooted_lower_bound():
    a, b = caterpillar(range(6)), caterpillar([0, 5, 4, 3, 2, 1])
    m, _ = min_forest_bruteforce([a, b], rooted=True)
    assert m >= (5 - 1) / 2
    assert m == naive_min_forest([a, b], True)


@pytest.mark.parametrize("n", [4, 5, 6])
def test_bruteforce_matches_partition_scan(n):
    rng = random.Random(n)
    for _ in range(6):
        a, b = random_tree(n, rng=rng), random_tree(n, rng=rng)
        for rooted in (False, True):
            assert min_forest_bruteforce([a, b], rooted)[0] == naive_min_forest([a, b], rooted)


def test_bruteforce_three_trees():
    rng = random.Random(9)
    trees = [random_tree(5, rng=rng) for _ in range(3)]
    m, part = min_forest_bruteforce(trees)
    assert validate_forest(trees, part)
    assert m == naive_min_forest(trees, False)


def test_bruteforce_size_guard():
    t = random_tree(10, seed=0)
    with pytest.raises(SearchTooLarge):
        min_forest_bruteforce([t, t])


# --- forests to moves ------------------------------------------------------


def test_equal_trees_need_no_moves():
    t = random_tree(6, seed=4)
    assert forest_to_moves(t, t, LabelPartition([t.label_set])) == []


def test_reversed_pair_two_rspr_moves():
    a, b = parse_newick(PAIR_A), parse_newick(PAIR_B)
    moves = forest_to_moves(a, b, LabelPartition(KNOWN_MINIMAL_FORESTS[0]), rooted=True)
    assert len(moves) == 2
    cur = a
    for m in moves:
        assert classify_move(cur, m) is Op.RSPR
        cur = apply_move(cur, m)
    assert is_isomorphic(cur, b)
    back = moves_to_forest(a, moves, rooted=True)
    assert validate_forest([a, b], back, rooted=True)
    assert back.m <= 3


def test_forest_to_moves_rejects_non_forest():
    a, b = parse_newick(PAIR_A), parse_newick(PAIR_B)
    with pytest.raises(ForestError):
        forest_to_moves(a, b, LabelPartition([a.label_set]))


@pytest.mark.parametrize("rooted", [False, True])
def test_minimal_forest_replays_with_m_minus_one_moves(rooted):
    rng = random.Random(70 + rooted)
    for _ in range(40):
        n = rng.randint(3, 7)
        a, b = random_tree(n, rng=rng), random_tree(n, rng=rng)
        m, part = min_forest_bruteforce([a, b], rooted)
        moves = forest_to_moves(a, b, part, rooted)
        assert len(moves) == m - 1
        cur = a
        for mv in moves:
            cur = apply_move(cur, mv)
            if rooted:
                assert mv.kind is Op.RSPR
        assert canonicalize(cur) == canonicalize(b)


def test_move_count_matches_distance():
    rng = random.Random(5)
    for _ in range(15):
        a, b = random_tree(6, rng=rng), random_tree(6, rng=rng)
        assert min_forest_bruteforce([a, b])[0] == exact_distance(a, b, "tbr", with_path=False).distance + 1
        assert min_forest_bruteforce([a, b], True)[0] == exact_distance(a, b, "rspr", with_path=False).distance + 1


# --- moves to forests --------------------------------------------------------


def test_no_moves_gives_one_block():
    t = random_tree(5, seed=8)
    assert moves_to_forest(t, []).to_lists() == [sorted(t.label_set)]


def test_single_tbr_gives_bisection_sides():
    t = random_tree(6, seed=12)
    for m in list(enumerate_moves(t, Op.TBR))[::37]:
        part = moves_to_forest(t, [m])
        u, v = m.bisection
        assert set(map(frozenset, part.blocks)) == {t.side_labels(u, v), t.side_labels(v, u)}


def test_moves_to_forest_bounds_block_count():
    rng = random.Random(21)
    for _ in range(30):
        a = random_tree(6, rng=rng)
        moves, cur = [], a
        for _ in range(rng.randint(1, 3)):
            opts = list(enumerate_moves(cur, Op.TBR))
            m = opts[rng.randrange(len(opts))]
            moves.append(m)
            cur = apply_move(cur, m)
        part = moves_to_forest(a, moves)
        assert part.m <= len(moves) + 1
        assert validate_forest([a, cur], part)


def test_moves_to_forest_rejects_non_rspr_in_rooted_mode():
    a = caterpillar(range(6))
    y = a.leaf(0)
    (x,) = a.neighbors(y)
    p, q = sorted(w for w in a.neighbors(x) if w != y)
    end = a.leaf(5)
    m = MoveRecord.spr(x, y, p, q, a.neighbors(end)[0], end)
    with pytest.raises(ForestError):
        moves_to_forest(a, [m], rooted=True)
