"""Binary leaf-labelled trees.

A tree is stored as an undirected adjacency map over small integer vertex
ids plus a bijection between leaf vertices and integer labels.  Vertex ids
are private to one tree; comparing two trees always goes through either the
canonical Newick-style text (:func:`canonicalize`) or the split key
(:meth:`BinaryTree.split_key`), which identify the same isomorphism classes.

Split keys are the workhorse for small-n searches: every edge is encoded as
the bitmask of labels on the side away from the minimum label, so a tree
over a fixed label set is identified by a frozenset of ``2|X| - 3`` ints.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping


class TreeError(ValueError):
    """Raised when a structure is not a valid binary leaf-labelled tree."""


class NewickError(ValueError):
    """Malformed Newick input; ``position`` is the 0-based offending offset."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


@dataclass(frozen=True, order=True)
class CanonicalForm:
    """Nested-parenthesis serialization rooted at the minimum label."""

    text: str

    def __str__(self) -> str:
        return self.text


@dataclass(frozen=True)
class Subtree:
    """The minimal subgraph ``A|S`` of a host tree spanning a label set."""

    vertices: frozenset
    edges: frozenset
    labels: frozenset


def _edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


class BinaryTree:
    """Unrooted binary tree whose leaves carry distinct integer labels.

    Every vertex has degree 1 (a labelled leaf) or 3, except the single-vertex
    tree on one label.  The leaf carrying label 0, when present, plays the
    role of the root for rooted notions (rSPR moves, rooted agreement forests,
    decompositions).

    Instances are treated as immutable; all editing operations return new
    trees.
    """

    def __init__(self, adjacency: Mapping[int, Iterable[int]],
                 labels: Mapping[int, int], *, check: bool = True):
        self._adj = {v: tuple(sorted(nbrs)) for v, nbrs in adjacency.items()}
        self._label = dict(labels)
        self._leaf = {lab: v for v, lab in self._label.items()}
        self._rooting = None
        self._preorder = None
        self._key = None
        self._edges = None
        if check:
            self.validate()

    # ------------------------------------------------------------------ #
    # construction helpers
    # ------------------------------------------------------------------ #

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[int, int]],
                   labels: Mapping[int, int], *, check: bool = True) -> "BinaryTree":
        adj: dict[int, list[int]] = {v: [] for v in labels}
        for u, v in edges:
            adj.setdefault(u, []).append(v)
            adj.setdefault(v, []).append(u)
        return cls(adj, labels, check=check)

    def validate(self) -> None:
        """Raise :class:`TreeError` unless the degree and tree invariants hold."""
        adj, lab = self._adj, self._label
        if not adj:
            raise TreeError("tree has no vertices")
        if len(self._leaf) != len(lab):
            raise TreeError("duplicate leaf labels")
        for v in lab:
            if v not in adj:
                raise TreeError(f"labelled vertex {v} is not in the tree")
        if len(adj) == 1:
            (v,) = adj
            if adj[v] or v not in lab:
                raise TreeError("single-vertex tree must be one labelled leaf")
            return
        n_edges = 0
        for v, nbrs in adj.items():
            if len(set(nbrs)) != len(nbrs) or v in nbrs:
                raise TreeError(f"vertex {v} has a loop or repeated neighbour")
            for w in nbrs:
                if w not in adj or v not in adj[w]:
                    raise TreeError(f"edge {v}-{w} is not symmetric")
            d = len(nbrs)
            if d == 1:
                if v not in lab:
                    raise TreeError(f"degree-1 vertex {v} is unlabelled")
            elif d == 3:
                if v in lab:
                    raise TreeError(f"labelled vertex {v} has degree 3")
            else:
                raise TreeError(f"vertex {v} has degree {d}")
            n_edges += d
        n_edges //= 2
        if n_edges != len(adj) - 1:
            raise TreeError("graph is not a tree (edge count)")
        seen = {next(iter(adj))}
        stack = list(seen)
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        if len(seen) != len(adj):
            raise TreeError("graph is disconnected")

    # ------------------------------------------------------------------ #
    # basic accessors
    # ------------------------------------------------------------------ #

    @property
    def vertices(self) -> list[int]:
        return sorted(self._adj)

    @property
    def edges(self) -> list[tuple[int, int]]:
        if self._edges is None:
            self._edges = sorted({_edge(u, v) for u, nb in self._adj.items() for v in nb})
        return list(self._edges)

    @property
    def label_set(self) -> frozenset:
        return frozenset(self._leaf)

    @property
    def n_leaves(self) -> int:
        return len(self._leaf)

    @property
    def n(self) -> int:
        """``|X| - 1``: the number of non-root leaves when ``X = {0..n}``."""
        return len(self._leaf) - 1

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self._adj[v]

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def is_leaf(self, v: int) -> bool:
        return v in self._label

    def label_of(self, v: int) -> int:
        return self._label[v]

    def leaf(self, label: int) -> int:
        """Vertex id of the leaf carrying ``label``."""
        return self._leaf[label]

    def leaf_labels(self) -> dict[int, int]:
        return dict(self._label)

    def has_edge(self, u: int, v: int) -> bool:
        return u in self._adj and v in self._adj[u]

    def adjacency(self) -> dict[int, list[int]]:
        """A fresh mutable copy of the adjacency map."""
        return {v: list(nb) for v, nb in self._adj.items()}

    def next_vertex_id(self) -> int:
        return max(self._adj) + 1

    def relabel(self, mapping: Mapping[int, int]) -> "BinaryTree":
        """Tree with every leaf label ``x`` replaced by ``mapping[x]``."""
        return BinaryTree(self._adj, {v: mapping[x] for v, x in self._label.items()})

    def __repr__(self) -> str:
        return f"BinaryTree({to_newick(self)!r})"

    # ------------------------------------------------------------------ #
    # rooted view (at the minimum label) and derived quantities
    # ------------------------------------------------------------------ #

    def rooting(self):
        """``(root, parent, depth, preorder)`` with the root at the min label."""
        if self._rooting is None:
            root = self._leaf[min(self._leaf)]
            parent = {root: None}
            depth = {root: 0}
            order = []
            stack = [root]
            while stack:
                v = stack.pop()
                order.append(v)
                for w in self._adj[v]:
                    if w != parent[v]:
                        parent[w] = v
                        depth[w] = depth[v] + 1
                        stack.append(w)
            self._rooting = (root, parent, depth, order)
        return self._rooting

    def children(self, v: int) -> list[int]:
        parent = self.rooting()[1]
        return [w for w in self._adj[v] if w != parent[v]]

    def split_key(self) -> frozenset:
        """Frozenset of edge bitmasks (labels away from the minimum label).

        Two trees over the same label set are isomorphic iff their split keys
        are equal.
        """
        if self._key is None:
            root, parent, _, order = self.rooting()
            below: dict[int, int] = {}
            key = []
            for v in reversed(order):
                if v == root:
                    continue
                if v in self._label:
                    m = 1 << self._label[v]
                else:
                    m = 0
                    for w in self._adj[v]:
                        if w != parent[v]:
                            m |= below[w]
                below[v] = m
                key.append(m)
            self._key = frozenset(key)
        return self._key

    def path(self, u: int, v: int) -> list[int]:
        """Vertices of the unique path from ``u`` to ``v``, endpoints included."""
        _, parent, depth, _ = self.rooting()
        left, right = [], []
        while depth[u] > depth[v]:
            left.append(u)
            u = parent[u]
        while depth[v] > depth[u]:
            right.append(v)
            v = parent[v]
        while u != v:
            left.append(u)
            right.append(v)
            u, v = parent[u], parent[v]
        return left + [u] + right[::-1]

    def spanning_vertices(self, labels: Iterable[int]) -> set[int]:
        """Vertex set of ``A|S``; linear in the size of the spanning subtree."""
        leaves = [self._leaf[x] for x in labels]
        if not leaves:
            return set()
        if len(leaves) > 1:
            pos = self._preorder_index()
            leaves.sort(key=pos.__getitem__)
        out = {leaves[0]}
        for a, b in zip(leaves, leaves[1:]):
            out.update(self.path(a, b))
        return out

    def _preorder_index(self) -> dict[int, int]:
        if self._preorder is None:
            self._preorder = {v: i for i, v in enumerate(self.rooting()[3])}
        return self._preorder

    def side(self, u: int, v: int) -> set[int]:
        """Vertices on ``v``'s side after deleting edge ``uv``."""
        if v not in self._adj.get(u, ()):
            raise TreeError(f"{u}-{v} is not an edge")
        seen = {v}
        stack = [v]
        while stack:
            w = stack.pop()
            for x in self._adj[w]:
                if x != u and x not in seen:
                    seen.add(x)
                    stack.append(x)
        return seen

    def side_labels(self, u: int, v: int) -> frozenset:
        return frozenset(self._label[w] for w in self.side(u, v) if w in self._label)


# ---------------------------------------------------------------------- #
# Newick
# ---------------------------------------------------------------------- #

def parse_newick(text: str) -> BinaryTree:
    """Parse integer-labelled Newick into an unrooted :class:`BinaryTree`.

    Inner groups must have exactly two children.  The outermost group may
    have two children (the artificial degree-2 top vertex is suppressed) or
    three.  Branch lengths and internal labels are not accepted.
    """
    adj: dict[int, list[int]] = {}
    labels: dict[int, int] = {}
    groups: list[tuple[int, list[int]]] = []
    top = None
    expect_item = True
    i, n = 0, len(text)
    next_id = 0

    def fail(msg, at):
        raise NewickError(msg, at)

    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if top is not None and ch != ";":
            fail(f"unexpected {ch!r} after complete tree", i)
        if ch == "(":
            if not expect_item:
                fail("expected ',' or ')'", i)
            groups.append((i, []))
            i += 1
        elif ch.isdigit():
            if not expect_item:
                fail("expected ',' or ')'", i)
            j = i
            while j < n and text[j].isdigit():
                j += 1
            lab = int(text[i:j])
            if lab in labels.values():
                fail(f"duplicate label {lab}", i)
            v = next_id
            next_id += 1
            adj[v] = []
            labels[v] = lab
            if groups:
                groups[-1][1].append(v)
            else:
                top = v
            expect_item = False
            i = j
        elif ch == ",":
            if not groups or expect_item:
                fail("unexpected ','" if groups else "',' outside parentheses", i)
            expect_item = True
            i += 1
        elif ch == ")":
            if not groups:
                fail("unbalanced ')'", i)
            if expect_item:
                fail("missing label", i)
            start, kids = groups.pop()
            outermost = not groups
            if len(kids) < 2 or len(kids) > (3 if outermost else 2):
                fail(f"non-binary vertex with {len(kids)} children", start)
            if outermost and len(kids) == 2:
                a, b = kids
                adj[a].append(b)
                adj[b].append(a)
                top = a
            else:
                v = next_id
                next_id += 1
                adj[v] = list(kids)
                for k in kids:
                    adj[k].append(v)
                if groups:
                    groups[-1][1].append(v)
                else:
                    top = v
            expect_item = False
            i += 1
        elif ch == ";":
            if groups:
                fail("unbalanced '(': missing ')'", i)
            if top is None:
                fail("empty tree", i)
            rest = text[i + 1:]
            if rest.strip():
                fail("trailing characters after ';'", i + 1)
            return BinaryTree(adj, labels)
        else:
            fail(f"unexpected character {ch!r}", i)
    if groups:
        fail("unbalanced '(': missing ')'", n)
    fail("missing terminating ';'", n)


def _nested_text(tree: BinaryTree) -> str:
    root, parent, _, order = tree.rooting()
    if len(order) == 1:
        return str(tree.label_of(root))
    text: dict[int, str] = {}
    for v in reversed(order):
        if v == root:
            continue
        if tree.is_leaf(v):
            text[v] = str(tree.label_of(v))
        else:
            a, b = sorted(text.pop(w) for w in tree.neighbors(v) if w != parent[v])
            text[v] = f"({a},{b})"
    (child,) = tree.neighbors(root)
    return f"({tree.label_of(root)},{text[child]})"


def canonicalize(tree: BinaryTree) -> CanonicalForm:
    """Canonical text: rooted at the minimum label, children sorted as strings."""
    return CanonicalForm(_nested_text(tree))


def to_newick(tree: BinaryTree) -> str:
    """Newick rooted at the minimum label's leaf, e.g. ``"(0,(1,(2,3)));"``."""
    return _nested_text(tree) + ";"


def is_isomorphic(a: BinaryTree, b: BinaryTree) -> bool:
    if a.label_set != b.label_set:
        raise TreeError("trees have different label sets")
    return a.split_key() == b.split_key()


# ---------------------------------------------------------------------- #
# restriction
# ---------------------------------------------------------------------- #

def restrict(tree: BinaryTree, labels: Iterable[int], suppress: bool = True):
    """``A/S`` (``suppress=True``) or the spanning subgraph ``A|S``."""
    s = frozenset(labels)
    if not s:
        raise TreeError("cannot restrict to an empty label set")
    missing = s - tree.label_set
    if missing:
        raise TreeError(f"labels {sorted(missing)} are not in the tree")
    keep = tree.spanning_vertices(s)
    if not suppress:
        edges = frozenset(_edge(u, v) for u in keep for v in tree.neighbors(u)
                          if v in keep)
        return Subtree(frozenset(keep), edges, s)
    adj = {v: {w for w in tree.neighbors(v) if w in keep} for v in keep}
    for v in list(adj):
        if len(adj[v]) == 2:
            a, b = adj.pop(v)
            adj[a].discard(v)
            adj[b].discard(v)
            adj[a].add(b)
            adj[b].add(a)
    return BinaryTree(adj, {tree.leaf(x): x for x in s}, check=False)


def restricted_key(key: Iterable[int], subset: int) -> frozenset:
    """Split key of ``A/S`` computed from ``A``'s split key and a label mask."""
    low = subset & -subset
    out = set()
    for t in key:
        m = t & subset
        if m and m != subset:
            out.add(m ^ subset if m & low else m)
    return frozenset(out)


def tree_from_key(key: Iterable[int], labels: Iterable[int]) -> BinaryTree:
    """Rebuild a concrete tree from its split key."""
    labs = sorted(labels)
    if len(labs) == 1:
        return BinaryTree({0: []}, {0: labs[0]})
    root_label = labs[0]
    clades = sorted(key, key=lambda m: (bin(m).count("1"), m))
    vid = {}
    labels_map = {}
    for i, x in enumerate(labs):
        vid[1 << x] = i
        labels_map[i] = x
    nxt = len(labs)
    adj: dict[int, list[int]] = {i: [] for i in labels_map}
    for c in clades:
        if c not in vid:
            vid[c] = nxt
            adj[nxt] = []
            nxt += 1
    for i, c in enumerate(clades):
        parent = None
        for d in clades[i + 1:]:
            if d != c and d & c == c:
                parent = d
                break
        u = vid[c]
        w = vid[parent] if parent is not None else vid[1 << root_label]
        adj[u].append(w)
        adj[w].append(u)
    return BinaryTree(adj, labels_map)


# ---------------------------------------------------------------------- #
# counting, enumeration, sampling
# ---------------------------------------------------------------------- #

def count_trees(n: int) -> int:
    """``|B({0..n})| = 1 * 3 * 5 * ... * (2n - 3)`` (and 1 for ``n = 1``)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    total = 1
    for odd in range(3, 2 * n - 2, 2):
        total *= odd
    return total


def _label_list(labels) -> list[int]:
    if isinstance(labels, int):
        return list(range(labels + 1))
    labs = sorted(set(labels))
    if not labs:
        raise ValueError("label set must be non-empty")
    return labs


def enumerate_trees(labels) -> Iterator[BinaryTree]:
    """Every tree in ``B(X)`` once, by inserting labels into every edge in turn.

    ``labels`` is an iterable of labels, or an int ``n`` meaning ``{0..n}``.
    """
    labs = _label_list(labels)
    leaf_ids = {i: x for i, x in enumerate(labs)}
    if len(labs) == 1:
        yield BinaryTree({0: []}, leaf_ids)
        return
    m = len(labs)
    edges = [(0, 1)]

    def grow(i):
        if i == m:
            yield BinaryTree.from_edges(edges, leaf_ids, check=False)
            return
        w = m + i - 2
        for j in range(len(edges)):
            u, v = edges[j]
            edges[j] = (u, w)
            edges.append((w, v))
            edges.append((w, i))
            yield from grow(i + 1)
            edges.pop()
            edges.pop()
            edges[j] = (u, v)

    yield from grow(2)


def random_tree(n: int, seed=None, *, rng: random.Random | None = None) -> BinaryTree:
    """Uniform sample from ``B({0..n})`` by uniform edge insertion."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if rng is None:
        rng = random.Random(seed)
    edges = [(0, 1)]
    nxt = n + 1
    for leaf in range(2, n + 1):
        j = rng.randrange(len(edges))
        u, v = edges[j]
        w = nxt
        nxt += 1
        edges[j] = (u, w)
        edges.append((w, v))
        edges.append((w, leaf))
    return BinaryTree.from_edges(edges, {x: x for x in range(n + 1)}, check=False)


def caterpillar(order: Iterable[int]) -> BinaryTree:
    """Caterpillar ``(x0,(x1,(x2,...(x_{m-2},x_{m-1}))))`` for a label order."""
    labs = list(order)
    m = len(labs)
    labels = {i: x for i, x in enumerate(labs)}
    if m == 1:
        return BinaryTree({0: []}, labels)
    if m == 2:
        return BinaryTree.from_edges([(0, 1)], labels)
    edges = []
    spine = list(range(m, m + m - 2))
    edges.append((0, spine[0]))
    for i, s in enumerate(spine):
        edges.append((s, i + 1))
        if i + 1 < len(spine):
            edges.append((s, spine[i + 1]))
    edges.append((spine[-1], m - 1))
    return BinaryTree.from_edges(edges, labels)
