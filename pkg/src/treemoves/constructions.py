"""Explicit constructions behind the diameter and expectation bounds.

* :func:`cut_edge` and :func:`decompose` split a tree rooted at its lowest
  label into connected pieces with a controlled number of leaves.
* :func:`token_forest` and :func:`super_pair_forest` build rooted agreement
  forests (upper bounds on the rooted forest size, hence on rSPR distance).
* :func:`ordering_family`, :func:`adversarial_labeling` and
  :func:`deletion_lower_bound` produce checkable lower-bound certificates
  for unrooted forests.
* :func:`caterpillar_pair` is the pair of reversed caterpillars one SPR move
  apart that needs many rSPR moves.

Thresholds with fractional parts are compared in exact integer or
:class:`fractions.Fraction` arithmetic.
"""

from __future__ import annotations

import math
import random
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

from .forest import ForestCertificate, LabelPartition
from .tree import BinaryTree, _edge, canonicalize, caterpillar


class ConstructionError(ValueError):
    """Parameters outside the range where a construction is defined."""


# ---------------------------------------------------------------------- #
# cutting and decomposing
# ---------------------------------------------------------------------- #

@dataclass(frozen=True)
class SubtreeDecomposition:
    """A partition of a tree's vertices into connected parts.

    ``parts`` holds vertex sets and ``labels`` the leaf labels of each part,
    in the same order.  :func:`decompose` lists parts in pruning order with
    the part containing the root last.
    """

    parts: tuple[frozenset, ...]
    labels: tuple[frozenset, ...]
    hot_edges: tuple[tuple[int, int], ...]

    @property
    def leaf_counts(self) -> tuple[int, ...]:
        return tuple(len(x) for x in self.labels)

    @property
    def t(self) -> int:
        return len(self.parts)

    def part_of_label(self) -> dict[int, int]:
        return {x: i for i, labs in enumerate(self.labels) for x in labs}

    @classmethod
    def from_parts(cls, tree: BinaryTree, parts: Iterable[Iterable[int]]) -> "SubtreeDecomposition":
        """Check that ``parts`` are disjoint, connected and cover every vertex."""
        parts = tuple(frozenset(p) for p in parts)
        owner: dict[int, int] = {}
        for i, p in enumerate(parts):
            if not p:
                raise ConstructionError(f"part {i} is empty")
            for v in p:
                if v in owner:
                    raise ConstructionError(f"vertex {v} lies in parts {owner[v]} and {i}")
                owner[v] = i
        missing = set(tree.vertices) - owner.keys()
        if missing or len(owner) != len(tree.vertices):
            raise ConstructionError(f"parts do not cover the tree's vertices exactly (missing {sorted(missing)[:5]})")
        hot = []
        inner = defaultdict(int)
        for u, v in tree.edges:
            if owner[u] == owner[v]:
                inner[owner[u]] += 1
            else:
                hot.append((u, v))
        for i, p in enumerate(parts):
            # a vertex set of a tree is connected iff it spans |p| - 1 edges
            if inner[i] != len(p) - 1:
                raise ConstructionError(f"part {i} is not connected")
        labels = tuple(frozenset(tree.label_of(v) for v in p if tree.is_leaf(v)) for p in parts)
        return cls(parts, labels, tuple(hot))


def _rooted_counts(tree: BinaryTree):
    root, parent, _, order = tree.rooting()
    count = {}
    for v in reversed(order):
        if tree.is_leaf(v) and v != root:
            count[v] = 1
        else:
            count[v] = sum(count[w] for w in tree.neighbors(v) if w != parent[v])
    return root, parent, count


def _descend(tree: BinaryTree, parent, count, alive, start: int, a) -> int:
    """Walk down from ``start`` while the leaf count is at least ``a``.

    At each step go to the child with more remaining leaves (ties to the
    smaller vertex id); that child keeps at least half of its parent's
    leaves, so the first vertex below ``a`` has at least ``a/2`` leaves.
    """
    v = start
    while count[v] >= a:
        kids = [w for w in tree.neighbors(v) if w != parent[v] and w in alive]
        v = max(kids, key=lambda w: (count[w], -w))
    return v


def _check_a(tree: BinaryTree, a, upper: bool):
    n = tree.n
    if n < 1:
        raise ConstructionError("need at least two leaves")
    if not a > 1:
        raise ConstructionError(f"a must exceed 1, got {a}")
    if upper and a > 2 * n:
        raise ConstructionError(f"a must be at most 2n = {2 * n}, got {a}")


def cut_edge(tree: BinaryTree, a) -> tuple[int, int]:
    """Edge ``(p, v)`` whose removal leaves ``[a/2, a)`` leaves on ``v``'s side.

    The tree is rooted at its lowest label; ``v`` is the side away from it.
    Requires ``1 < a <= 2n``.
    """
    _check_a(tree, a, upper=True)
    root, parent, count = _rooted_counts(tree)
    (start,) = tree.neighbors(root)
    v = _descend(tree, parent, count, set(tree.vertices), start, a)
    return (parent[v], v)


def decompose(tree: BinaryTree, a) -> SubtreeDecomposition:
    """Split ``tree`` into connected parts with fewer than ``a`` leaves each.

    Subtrees with ``[a/2, a)`` leaves are pruned off repeatedly until fewer
    than ``a`` leaves remain; the remainder, which holds the root and may be
    small, is the last part.  Only the remainder can have fewer than ``a/2``
    leaves.
    """
    _check_a(tree, a, upper=False)
    root, parent, count = _rooted_counts(tree)
    count = dict(count)
    alive = set(tree.vertices)
    (start,) = tree.neighbors(root)
    parts = []
    hot = []
    while count[start] + 1 >= a:
        v = _descend(tree, parent, count, alive, start, a)
        stack, part = [v], set()
        while stack:
            w = stack.pop()
            part.add(w)
            stack.extend(x for x in tree.neighbors(w) if x != parent[w] and x in alive)
        alive -= part
        removed = count[v]
        p = parent[v]
        while p is not None:
            count[p] -= removed
            p = parent[p]
        parts.append(frozenset(part))
        hot.append(_edge(parent[v], v))
        if v == start:
            break
    parts.append(frozenset(alive))
    labels = tuple(frozenset(tree.label_of(v) for v in p if tree.is_leaf(v)) for p in parts)
    return SubtreeDecomposition(tuple(parts), labels, tuple(hot))


# ---------------------------------------------------------------------- #
# token forests
# ---------------------------------------------------------------------- #

def _iroot(x: int, k: int) -> int:
    """Largest integer ``r`` with ``r**k <= x``."""
    if x < 0:
        raise ValueError("negative radicand")
    r = int(round(x ** (1.0 / k)))
    while r ** k > x:
        r -= 1
    while (r + 1) ** k <= x:
        r += 1
    return r


def _same_labels(trees: Sequence[BinaryTree]) -> frozenset:
    if len(trees) < 2:
        raise ConstructionError("need at least two trees")
    labels = trees[0].label_set
    if any(t.label_set != labels for t in trees[1:]):
        raise ConstructionError("trees have different label sets")
    return labels


def _group_by_parts(decomps: Sequence[SubtreeDecomposition], labels) -> dict[tuple, list[int]]:
    where = [d.part_of_label() for d in decomps]
    groups: dict[tuple, list[int]] = defaultdict(list)
    for x in sorted(labels):
        groups[tuple(w.get(x) for w in where)].append(x)
    return groups


def token_forest(trees: Sequence[BinaryTree]) -> ForestCertificate:
    """Rooted agreement forest from a maximal set of compatible good tokens.

    Each tree is decomposed into at most ``t`` parts of fewer than
    ``2(n+1)/t`` leaves, where ``t = floor(((n+1)/(k+1))**(1/k))``.  A token
    picks one part per tree; it is good when at least two labels lie in all
    of its parts, and two tokens are compatible when they differ in every
    coordinate.  Good tokens are taken greedily in lexicographic order; each
    contributes a block of the two smallest labels it holds.

    ``info`` records ``t``, the chosen tokens and the two bound checks.
    """
    labels = _same_labels(trees)
    k = len(trees)
    n = len(labels) - 1
    if 0 not in labels:
        raise ConstructionError("rooted forests need a leaf labelled 0")
    if n <= k:
        raise ConstructionError(f"need n > k, got n={n}, k={k}")
    t = _iroot((n + 1) // (k + 1), k)
    a = Fraction(2 * (n + 1), t)
    decomps = [decompose(tree, a) for tree in trees]
    groups = _group_by_parts(decomps, labels)
    chosen: list[tuple] = []
    for tok in sorted(tok for tok, labs in groups.items() if len(labs) >= 2):
        if all(all(x != y for x, y in zip(tok, other)) for other in chosen):
            chosen.append(tok)
    paired = [groups[tok][:2] for tok in chosen]
    used = {x for pair in paired for x in pair}
    blocks = paired + [[x] for x in sorted(labels) if x not in used]
    part = LabelPartition(blocks)
    size = len(chosen)
    info = {
        "k": k, "n": n, "t": t, "a": a,
        "tokens": tuple(chosen),
        "token_bound_ok": 2 * (k + 1) * size >= t + 1,
        # m < n + 1 - ((n+1)/(k+1))**(1/k) / (2(k+1))  <=>  (2(k+1)|T|)**k (k+1) > n+1
        "size_bound_ok": (2 * (k + 1) * size) ** k * (k + 1) > n + 1,
    }
    return ForestCertificate(part, True, tuple(canonicalize(x) for x in trees), info)


def token_size_bound(n: int, k: int) -> float:
    """Right-hand side ``n - ((n+1)/(k+1))**(1/k) / (2(k+1)) + 1``."""
    return n - ((n + 1) / (k + 1)) ** (1 / k) / (2 * (k + 1)) + 1


# ---------------------------------------------------------------------- #
# orderings
# ---------------------------------------------------------------------- #

@dataclass(frozen=True)
class PermutationFamily:
    """``k`` rank maps on ``{0..n}``; ``perms[j][x]`` is the rank of ``x``."""

    n: int
    k: int
    b: int
    perms: tuple[tuple[int, ...], ...]

    def digits(self, x: int) -> tuple[int, ...]:
        return _digits(x, self.b, self.k)

    def inverse(self, j: int) -> list[int]:
        inv = [0] * (self.n + 1)
        for x, r in enumerate(self.perms[j]):
            inv[r] = x
        return inv

    def threshold(self) -> tuple[int, int]:
        """``(scale, limit)``: a pair is separated in ``phi`` when ``|d| * scale > limit``."""
        return _threshold(self.b, self.k)

    def separated(self, x: int, y: int) -> bool:
        scale, limit = self.threshold()
        return any(abs(p[x] - p[y]) * scale > limit for p in self.perms)

    def violations(self, pairs: Iterable[tuple[int, int]] | None = None) -> list[tuple[int, int]]:
        """Pairs not separated in any permutation (all pairs by default)."""
        if pairs is None:
            pairs = combinations(range(self.n + 1), 2)
        return [(x, y) for x, y in pairs if not self.separated(x, y)]


def _digits(x: int, b: int, k: int) -> tuple[int, ...]:
    out = []
    for _ in range(k - 1):
        x, r = divmod(x, b)
        out.append(r)
    out.append(x)
    return tuple(reversed(out))


def _threshold(b: int, k: int) -> tuple[int, int]:
    # b**(k-1) - 2 b**(k-3), multiplied through by b**m to stay integral
    m = max(0, 3 - k)
    return b ** m, b ** (k - 1 + m) - 2 * b ** (k - 3 + m)


def ordering_family(n: int, b: int, k: int) -> PermutationFamily:
    """Permutations separating every pair by more than ``b**(k-1) - 2 b**(k-3)``.

    ``phi_1`` is the identity.  For ``j >= 2`` write ``x`` in mixed radix
    (``x_1`` unbounded, other digits below ``b``) and rank ``x`` above ``y``
    when ``x_j < y_j``, or ``x_j == y_j`` and ``x > y``.  Requires
    ``k >= 1`` and ``2 <= b`` with ``b**k <= n + 1``.
    """
    if k < 1:
        raise ConstructionError("k must be positive")
    if b < 2 or b ** k > n + 1:
        raise ConstructionError(f"need 2 <= b and b**k <= n+1, got b={b}, k={k}, n={n}")
    xs = range(n + 1)
    perms = [tuple(xs)]
    digits = [_digits(x, b, k) for x in xs]
    for j in range(1, k):
        order = sorted(xs, key=lambda x: (-digits[x][j], x))
        rank = [0] * (n + 1)
        for r, x in enumerate(order):
            rank[x] = r
        perms.append(tuple(rank))
    return PermutationFamily(n, k, b, tuple(perms))


# ---------------------------------------------------------------------- #
# lower-bound certificates
# ---------------------------------------------------------------------- #

@dataclass(frozen=True)
class LowerBoundCertificate:
    """Evidence that every unrooted agreement forest has at least ``bound`` blocks."""

    n: int
    k: int
    t: int
    z: int
    bound: int
    decompositions: tuple[SubtreeDecomposition, ...]
    info: dict = field(default_factory=dict, compare=False)

    def report(self) -> str:
        """Plain-text listing meant for diffing."""
        lines = [f"n = {self.n}", f"k = {self.k}"]
        for i, d in enumerate(self.decompositions, 1):
            lines.append(f"tree {i}: {d.t} parts, {len(d.hot_edges)} hot edges")
            for j, labs in enumerate(d.labels, 1):
                lines.append(f"  part {j} ({len(labs)} leaves): " + " ".join(map(str, sorted(labs))))
        lines.append(f"t = {self.t}")
        lines.append(f"z = {self.z}")
        lines.append(f"bound = n - k*t + k - z + 1 = {self.n} - {self.k}*{self.t} + {self.k} - {self.z} + 1"
                     f" = {self.bound}")
        for key in sorted(self.info):
            lines.append(f"{key} = {self.info[key]}")
        return "\n".join(lines) + "\n"


def deletion_lower_bound(trees: Sequence[BinaryTree],
                         decomps: Sequence[SubtreeDecomposition]) -> LowerBoundCertificate:
    """Certificate ``M >= n - k t + k - z + 1`` from per-tree decompositions.

    ``t`` is the largest number of parts in any decomposition and ``z`` the
    number of label pairs sharing a part in every tree.  Each decomposition
    is re-checked for disjoint, connected parts covering all vertices.
    """
    labels = _same_labels(trees)
    if len(decomps) != len(trees):
        raise ConstructionError("need one decomposition per tree")
    checked = tuple(SubtreeDecomposition.from_parts(tr, d.parts) for tr, d in zip(trees, decomps))
    k, n = len(trees), len(labels) - 1
    t = max(d.t for d in checked)
    groups = _group_by_parts(checked, labels)
    z = sum(len(g) * (len(g) - 1) // 2 for g in groups.values())
    return LowerBoundCertificate(n, k, t, z, n - k * t + k - z + 1, checked)


def _leaf_order(tree: BinaryTree, decomp: SubtreeDecomposition) -> list[int]:
    """Leaf vertices part by part, preorder within a part."""
    pos = {v: i for i, v in enumerate(tree.rooting()[3])}
    out = []
    for p in decomp.parts:
        out.extend(sorted((v for v in p if tree.is_leaf(v)), key=pos.__getitem__))
    return out


def adversarial_labeling(shapes: Sequence[BinaryTree], *, fixed_first: bool = False):
    """Label ``k`` tree shapes so that no two labels share a part in every tree.

    With ``b = floor((n+1)**(1/k))``, ``t = ceil(2n / (b**(k-1) - 2 b**(k-3)))``
    and ``a = 2n/t``, each shape is decomposed into parts of fewer than ``a``
    leaves and labelled part by part in the order of the ``i``-th permutation
    of :func:`ordering_family`.  Any two labels are then more than ``a``
    apart in some permutation, so ``z = 0``.  When ``a <= 1`` the
    decomposition uses single-leaf parts (``a = 2``).  Shapes are rooted at
    their lowest label; their labels are otherwise ignored.

    With ``fixed_first`` the labels are renamed so the first tree keeps the
    labels of the first shape; this leaves the certificate unchanged.

    Returns ``(trees, certificate)``.
    """
    k = len(shapes)
    if k < 2:
        raise ConstructionError("need at least two shapes")
    sizes = {s.n_leaves for s in shapes}
    if len(sizes) != 1:
        raise ConstructionError(f"shapes have different leaf counts: {sorted(sizes)}")
    n = sizes.pop() - 1
    if n < 1:
        raise ConstructionError("need at least two leaves")
    b = _iroot(n + 1, k)
    if b < 2:
        raise ConstructionError(f"need (n+1) >= 2**k, got n={n}, k={k}")
    gap = Fraction(b ** (k - 1)) - 2 * Fraction(b) ** (k - 3)
    t_param = math.ceil(Fraction(2 * n) / gap)
    a = Fraction(2 * n, t_param)
    a_used = a if a > 1 else Fraction(2)
    fam = ordering_family(n, b, k)
    trees = []
    decomps = []
    for i, shape in enumerate(shapes):
        d = decompose(shape, a_used)
        inv = fam.inverse(i)
        labels = {v: inv[pos] for pos, v in enumerate(_leaf_order(shape, d))}
        trees.append(BinaryTree(shape.adjacency(), labels, check=False))
        decomps.append(d)
    if fixed_first:
        rename = {trees[0].label_of(v): shapes[0].label_of(v) for v in trees[0].leaf_labels()}
        trees = [t.relabel(rename) for t in trees]
    # vertex ids are unchanged by labelling, so the decompositions carry over
    cert = deletion_lower_bound(trees, decomps)
    cert.info.update({
        "b": b, "t_param": t_param, "a": a, "a_used": a_used,
        "t_bound_ok": cert.t <= 3 * n ** (1 / k) + 1,
    })
    return trees, cert


# ---------------------------------------------------------------------- #
# super pairs
# ---------------------------------------------------------------------- #

def default_super_pair_b(n: int, k: int) -> int:
    """``floor((k n**(k-1) / 2)**(1/(k+1)))``, at least 2."""
    b = _iroot(k * n ** (k - 1) // 2, k + 1)
    return max(b, 2)


def _exact_b_parts(tree: BinaryTree, b: int, s: int) -> list[frozenset]:
    """Label sets of ``s`` disjoint subtrees with exactly ``b`` leaves each."""
    if s == 0:
        return []
    d = decompose(tree, 2 * b)
    out = []
    for labs in d.labels:
        if len(labs) >= b:
            # the b smallest labels span a connected subtree inside the part
            out.append(frozenset(sorted(labs)[:b]))
            if len(out) == s:
                break
    if len(out) < s:
        raise ConstructionError("decomposition produced too few large parts")
    return out


def super_pairs(trees: Sequence[BinaryTree], b: int) -> tuple[list[tuple[int, int]], int]:
    """Super pairs for subtrees of exactly ``b`` leaves, plus the count ``s`` of subtrees.

    A pair is good when in every tree both labels lie in the same chosen
    subtree, and super when no other good pair shares that subtree in any
    tree.
    """
    labels = _same_labels(trees)
    n = len(labels) - 1
    s = (n + 1) // (2 * b)
    pieces = [_exact_b_parts(t, b, s) for t in trees]
    where = [{x: i for i, labs in enumerate(ps) for x in labs} for ps in pieces]
    groups: dict[tuple, list[int]] = defaultdict(list)
    for x in sorted(labels):
        key = tuple(w.get(x) for w in where)
        if None not in key:
            groups[key].append(x)
    crowded = [defaultdict(int) for _ in trees]
    for key, labs in groups.items():
        if len(labs) >= 2:
            for i, part in enumerate(key):
                crowded[i][part] += 1
    pairs = []
    for key, labs in groups.items():
        if len(labs) == 2 and all(crowded[i][part] == 1 for i, part in enumerate(key)):
            pairs.append(tuple(labs))
    return sorted(pairs), s


def super_pair_forest(trees: Sequence[BinaryTree], b: int | None = None) -> ForestCertificate:
    """Rooted agreement forest with one block per super pair.

    ``b`` defaults to :func:`default_super_pair_b`.  When ``b`` is so large
    that no subtree fits (``s = 0``) the forest is all singletons.
    """
    labels = _same_labels(trees)
    if 0 not in labels:
        raise ConstructionError("rooted forests need a leaf labelled 0")
    k, n = len(trees), len(labels) - 1
    if b is None:
        b = default_super_pair_b(n, k)
    if b < 2:
        raise ConstructionError(f"b must be at least 2, got {b}")
    pairs, s = super_pairs(trees, b)
    used = {x for p in pairs for x in p}
    part = LabelPartition([list(p) for p in pairs] + [[x] for x in sorted(labels) if x not in used])
    info = {"k": k, "n": n, "b": b, "s": s, "S": len(pairs)}
    return ForestCertificate(part, True, tuple(canonicalize(x) for x in trees), info)


# ---------------------------------------------------------------------- #
# caterpillars
# ---------------------------------------------------------------------- #

def caterpillar_pair(n: int) -> tuple[BinaryTree, BinaryTree]:
    """Caterpillars ``(0,(1,(2,...)))`` and ``(0,(n,(n-1,...)))``."""
    if n < 3:
        raise ConstructionError("caterpillar pairs need n >= 3")
    return caterpillar(range(n + 1)), caterpillar([0] + list(range(n, 0, -1)))


def random_labelling(shape: BinaryTree, rng: random.Random) -> BinaryTree:
    """The shape with its labels permuted uniformly at random."""
    labs = sorted(shape.label_set)
    perm = labs[:]
    rng.shuffle(perm)
    return shape.relabel(dict(zip(labs, perm)))
