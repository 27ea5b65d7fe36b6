import math
import random
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from treemoves.tree import (
    BinaryTree,
    NewickError,
    TreeError,
    canonicalize,
    caterpillar,
    count_trees,
    enumerate_trees,
    is_isomorphic,
    parse_newick,
    random_tree,
    restrict,
    tree_from_key,
    to_newick,
)

FOUR_LEAF = "(0,((1,2),3));"


def double_factorial(m):
    return math.prod(range(m, 0, -2)) if m > 0 else 1


# --- parsing and printing ------------------------------------------------


def test_parse_four_leaf():
    t = parse_newick(FOUR_LEAF)
    assert t.label_set == {0, 1, 2, 3}
    assert t.n == 3
    assert len(t.vertices) == 6
    assert len(t.edges) == 5


def test_two_leaf_tree_round_trips():
    t = parse_newick("(0,1);")
    assert to_newick(t) == "(0,1);"


def test_single_leaf():
    t = parse_newick("5;")
    assert to_newick(t) == "5;"
    assert t.n_leaves == 1


@pytest.mark.parametrize("bad", ["(0,(1,2);", "(0,(1,2)));", "(0,(1,2))", "(0,a);", "(0,(1,1));", "(0,1,2,3);", ""])
def test_parse_errors(bad):
    with pytest.raises((NewickError, TreeError)):
        parse_newick(bad)


def test_newick_error_reports_position():
    with pytest.raises(NewickError) as info:
        parse_newick("(0,(1,2);")
    assert info.value.position >= 0


def test_unrooted_trifurcation_accepted():
    t = parse_newick("(0,1,(2,3));")
    assert is_isomorphic(t, parse_newick("(0,(1,(2,3)));"))


def test_to_newick_is_canonical():
    a = parse_newick("(0,(3,(2,1)));")
    b = parse_newick("((1,2),3,0);")
    assert to_newick(a) == to_newick(b)
    assert is_isomorphic(parse_newick(to_newick(a)), a)


def test_validate_rejects_degree_two():
    with pytest.raises(TreeError):
        BinaryTree.from_edges([(0, 3), (3, 1)], {0: 0, 1: 1})


# --- isomorphism ---------------------------------------------------------


def test_same_tree_two_drawings():
    a = parse_newick("(0,((1,2),3));")
    b = parse_newick("(3,(0,(2,1)));")
    assert canonicalize(a) == canonicalize(b)
    assert is_isomorphic(a, b)


def test_relabelled_trees_differ():
    a = parse_newick("(0,(1,(2,3)));")
    b = parse_newick("(0,(2,(1,3)));")
    assert not is_isomorphic(a, b)
    assert canonicalize(a) != canonicalize(b)


def test_all_fifteen_four_taxon_trees_distinct():
    forms = {canonicalize(t) for t in enumerate_trees(range(5))}
    assert len(forms) == 15


# --- restriction ----------------------------------------------------------


def test_restrict_caterpillar_to_three_labels():
    cat = caterpillar(range(9))
    r = restrict(cat, {4, 5, 6})
    assert r.label_set == {4, 5, 6}
    assert len(r.vertices) == 4


def test_restrict_identity_and_singleton():
    t = parse_newick("(0,((1,2),(3,(4,(5,6)))));")
    assert is_isomorphic(restrict(t, t.label_set), t)
    assert restrict(t, {4}).n_leaves == 1
    sub = restrict(t, {4}, suppress=False)
    assert sub.vertices == {t.leaf(4)} and not sub.edges


def test_restrict_without_suppression_keeps_path_vertices():
    t = parse_newick("(0,((1,2),(3,(4,(5,6)))));")
    sub = restrict(t, {1, 6}, suppress=False)
    assert set(sub.vertices) == t.spanning_vertices({1, 6})
    assert len(sub.edges) == len(sub.vertices) - 1


def test_restrict_unknown_label():
    with pytest.raises(TreeError):
        restrict(parse_newick(FOUR_LEAF), {0, 9})


# --- counting and enumeration --------------------------------------------


@pytest.mark.parametrize("n,expected", [(1, 1), (2, 1), (3, 3), (4, 15), (5, 105), (6, 945), (10, 34459425)])
def test_count_trees(n, expected):
    assert count_trees(n) == expected
    assert count_trees(n) == double_factorial(2 * n - 3)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_enumeration_matches_count(n):
    trees = list(enumerate_trees(range(n + 1)))
    assert len(trees) == count_trees(n)
    assert len({canonicalize(t) for t in trees}) == len(trees)
    for t in trees:
        t.validate()


def test_split_key_round_trip():
    for t in enumerate_trees(range(6)):
        back = tree_from_key(t.split_key(), t.label_set)
        assert canonicalize(back) == canonicalize(t)


# --- random trees ----------------------------------------------------------


def test_random_tree_three_leaves_is_unique():
    assert len({canonicalize(random_tree(2, seed=s)) for s in range(20)}) == 1


def test_random_tree_is_deterministic():
    assert to_newick(random_tree(30, seed=7)) == to_newick(random_tree(30, seed=7))


def test_random_tree_uniform_on_fifteen():
    rng = random.Random(2024)
    samples = 30000
    counts = Counter(canonicalize(random_tree(4, rng=rng)) for _ in range(samples))
    assert len(counts) == 15
    expected = samples / 15
    chi2 = sum((c - expected) ** 2 / expected for c in counts.values())
    # 14 degrees of freedom; 36.1 is the 0.999 quantile
    assert chi2 < 36.1
    sigma = math.sqrt(samples * (1 / 15) * (14 / 15))
    assert all(abs(c - expected) < 4 * sigma for c in counts.values())


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=1, max_value=40), st.integers(min_value=0, max_value=10**6))
def test_random_tree_valid(n, seed):
    t = random_tree(n, seed=seed)
    t.validate()
    assert t.label_set == set(range(n + 1))
    assert is_isomorphic(parse_newick(to_newick(t)), t)


def test_caterpillar_shape():
    cat = caterpillar([0, 3, 1, 2])
    internal = [v for v in cat.vertices if not cat.is_leaf(v)]
    assert len(internal) == 2
    assert is_isomorphic(cat, parse_newick("(0,(3,(1,2)));"))


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=2, max_value=25), st.integers(min_value=0, max_value=10**6))
def test_canonical_form_ignores_vertex_ids(n, seed):
    t = random_tree(n, seed=seed)
    ids = list(t.vertices)
    shuffled = ids[:]
    random.Random(seed).shuffle(shuffled)
    new = dict(zip(ids, (v + 1000 for v in shuffled)))
    adj = {new[v]: [new[w] for w in t.neighbors(v)] for v in ids}
    labels = {new[v]: lab for lab, v in ((lab, t.leaf(lab)) for lab in t.label_set)}
    moved = BinaryTree(adj, labels)
    assert canonicalize(moved) == canonicalize(t)
    assert to_newick(moved) == to_newick(t)
