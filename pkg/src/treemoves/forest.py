"""Agreement forests: validation, exhaustive minimisation and move conversion.

A forest is a partition of the label set.  It is an (unrooted) agreement
forest of a set of trees when, in every tree, the blocks span pairwise
disjoint subtrees and every block induces the same restricted tree in all
trees.  The rooted variant adds label 0 to each block before comparing the
restricted trees.

In a binary tree two spanning subtrees share a vertex exactly when they share
an edge (a shared internal vertex would need four incident edges), so the
exhaustive search works with per-block edge bitmasks while
:func:`validate_forest` checks vertex sets directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .moves import MoveError, MoveRecord, Op, apply_move, apply_spr, apply_tbr, classify_move
from .tree import BinaryTree, CanonicalForm, _edge, canonicalize, restrict, restricted_key

SEARCH_LIMIT = 9


class ForestError(ValueError):
    """Invalid partition, or a forest that fails for the given trees."""


class SearchTooLarge(ValueError):
    """Exhaustive search refused because the label set is too big."""


@dataclass(frozen=True)
class LabelPartition:
    """Blocks of labels, stored sorted by their minimum label."""

    blocks: tuple[frozenset, ...]

    def __init__(self, blocks: Iterable[Iterable[int]]):
        bl = [frozenset(int(x) for x in b) for b in blocks]
        if any(not b for b in bl):
            raise ForestError("partition has an empty block")
        seen: set[int] = set()
        for b in bl:
            if seen & b:
                raise ForestError(f"label(s) {sorted(seen & b)} appear in two blocks")
            seen |= b
        object.__setattr__(self, "blocks", tuple(sorted(bl, key=min)))

    @property
    def m(self) -> int:
        return len(self.blocks)

    @property
    def labels(self) -> frozenset:
        return frozenset().union(*self.blocks)

    def block_of(self, label: int) -> frozenset:
        for b in self.blocks:
            if label in b:
                return b
        raise KeyError(label)

    def check_covers(self, labels: Iterable[int]) -> None:
        want = frozenset(labels)
        if self.labels != want:
            extra = sorted(self.labels - want)
            missing = sorted(want - self.labels)
            raise ForestError(f"not a partition of the label set (missing {missing}, extra {extra})")

    def to_text(self) -> str:
        return "".join(" ".join(map(str, sorted(b))) + "\n" for b in self.blocks)

    @classmethod
    def from_text(cls, text: str) -> "LabelPartition":
        """One block per non-blank line, labels separated by spaces."""
        blocks = []
        for i, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                blocks.append([int(tok) for tok in line.replace(",", " ").split()])
            except ValueError:
                raise ForestError(f"line {i}: labels must be integers") from None
        return cls(blocks)

    def to_lists(self) -> list[list[int]]:
        return [sorted(b) for b in self.blocks]

    def __len__(self) -> int:
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)


@dataclass(frozen=True)
class ForestCertificate:
    """A partition together with the trees it was checked against.

    ``info`` carries construction-specific parameters and checks.
    """

    partition: LabelPartition
    rooted: bool
    trees: tuple[CanonicalForm, ...]
    info: dict = field(default_factory=dict, compare=False)

    @property
    def m(self) -> int:
        return self.partition.m


def _check_trees(trees: Sequence[BinaryTree], rooted: bool) -> frozenset:
    if len(trees) < 2:
        raise ForestError("need at least two trees")
    labels = trees[0].label_set
    for t in trees[1:]:
        if t.label_set != labels:
            raise ForestError("trees have different label sets")
    if rooted and 0 not in labels:
        raise ForestError("rooted forests need a leaf labelled 0")
    return labels


def _disjoint(tree: BinaryTree, partition: LabelPartition) -> bool:
    seen: set[int] = set()
    for b in partition.blocks:
        if len(b) == 1:
            continue
        span = tree.spanning_vertices(b)
        if seen & span:
            return False
        seen |= span
    return True


def validate_forest(trees: Sequence[BinaryTree], partition: LabelPartition,
                    rooted: bool = False) -> bool:
    """Whether ``partition`` is a (rooted) agreement forest of ``trees``.

    Raises :class:`ForestError` if the partition does not cover exactly the
    label set or the trees disagree on it.
    """
    labels = _check_trees(trees, rooted)
    partition.check_covers(labels)
    if not all(_disjoint(t, partition) for t in trees):
        return False
    for b in partition.blocks:
        s = b | {0} if rooted else b
        if len(s) <= 3:
            continue
        forms = {canonicalize(restrict(t, s)) for t in trees}
        if len(forms) > 1:
            return False
    return True


def certify(trees: Sequence[BinaryTree], partition: LabelPartition,
            rooted: bool = False) -> ForestCertificate:
    """Validate and wrap a forest; raises :class:`ForestError` if invalid."""
    if not validate_forest(trees, partition, rooted):
        raise ForestError("partition is not an agreement forest of these trees")
    return ForestCertificate(partition, rooted, tuple(canonicalize(t) for t in trees))


# ---------------------------------------------------------------------- #
# exhaustive minimisation
# ---------------------------------------------------------------------- #

class _Oracle:
    """Memoised per-block tests on split keys."""

    def __init__(self, trees: Sequence[BinaryTree], rooted: bool):
        self.keys = [tuple(sorted(t.split_key())) for t in trees]
        self.full = 0
        for x in trees[0].label_set:
            self.full |= 1 << x
        self.root = 1 << min(trees[0].label_set) if rooted else 0
        self._ok: dict[int, bool] = {}
        self._em: dict[int, tuple[int, ...]] = {}

    def ok(self, mask: int) -> bool:
        got = self._ok.get(mask)
        if got is None:
            s = mask | self.root
            if s.bit_count() <= 3:
                got = True
            else:
                first = restricted_key(self.keys[0], s)
                got = all(restricted_key(k, s) == first for k in self.keys[1:])
            self._ok[mask] = got
        return got

    def edges(self, mask: int) -> tuple[int, ...]:
        got = self._em.get(mask)
        if got is None:
            out = []
            for key in self.keys:
                em = 0
                for j, s in enumerate(key):
                    if mask & s and mask & ~s:
                        em |= 1 << j
                out.append(em)
            got = tuple(out)
            self._em[mask] = got
        return got


def _search(oracle: _Oracle, labels: list[int], m: int, count_all: bool):
    blocks: list[int] = []
    emasks: list[tuple[int, ...]] = []
    found: list[list[int]] = []
    count = 0
    n_trees = len(oracle.keys)

    def fits(j: int, em: tuple[int, ...]) -> bool:
        for i, other in enumerate(emasks):
            if i != j and any(em[t] & other[t] for t in range(n_trees)):
                return False
        return True

    def rec(i: int) -> bool:
        nonlocal count
        if i == len(labels):
            if len(blocks) != m:
                return False
            count += 1
            if not found:
                found.append(list(blocks))
            return not count_all
        # blocks still to open must fit in the remaining labels
        if m - len(blocks) > len(labels) - i:
            return False
        bit = 1 << labels[i]
        for j in range(len(blocks)):
            new = blocks[j] | bit
            if not oracle.ok(new):
                continue
            em = oracle.edges(new)
            if not fits(j, em):
                continue
            old, old_em = blocks[j], emasks[j]
            blocks[j], emasks[j] = new, em
            stop = rec(i + 1)
            blocks[j], emasks[j] = old, old_em
            if stop:
                return True
        if len(blocks) < m:
            blocks.append(bit)
            emasks.append((0,) * n_trees)
            stop = rec(i + 1)
            blocks.pop()
            emasks.pop()
            if stop:
                return True
        return False

    rec(0)
    return count, (found[0] if found else None)


def _to_partition(masks: list[int]) -> LabelPartition:
    return LabelPartition([[x for x in range(m.bit_length()) if m >> x & 1] for m in masks])


def min_forest_bruteforce(trees: Sequence[BinaryTree], rooted: bool = False, *,
                          count_all: bool = False, limit: int = SEARCH_LIMIT):
    """Minimum number of blocks of an agreement forest, by exhaustive search.

    Block counts are tried in increasing order; labels are assigned in
    increasing order, joining existing blocks before opening a new one, so
    the returned witness is deterministic.  Returns ``(m, witness)`` or, with
    ``count_all``, ``(m, witness, number_of_minimal_forests)``.

    Raises :class:`SearchTooLarge` when ``|X| - 1`` exceeds ``limit``.
    """
    labels = sorted(_check_trees(trees, rooted))
    if len(labels) - 1 > limit:
        raise SearchTooLarge(f"exhaustive forest search is limited to n <= {limit}, got n = {len(labels) - 1}")
    if labels[0] < 0:
        raise ForestError("labels must be non-negative")
    oracle = _Oracle(trees, rooted)
    for m in range(1, len(labels) + 1):
        count, witness = _search(oracle, labels, m, count_all)
        if witness is not None:
            part = _to_partition(witness)
            return (m, part, count) if count_all else (m, part)
    raise AssertionError("the all-singletons partition is always a forest")


# ---------------------------------------------------------------------- #
# forests -> moves
# ---------------------------------------------------------------------- #

def _below(tree: BinaryTree, v: int) -> set[int]:
    parent = tree.rooting()[1]
    return tree.side(parent[v], v)


def _connecting_path(tree: BinaryTree, span_from: set[int], span_to: set[int], start: int, end: int):
    """Shortest path from the subtree ``span_from`` to the subtree ``span_to``."""
    path = tree.path(start, end)
    last_from = max(i for i, v in enumerate(path) if v in span_from)
    first_to = next(i for i in range(last_from, len(path)) if path[i] in span_to)
    return path[last_from:first_to + 1]


def _merge_ok(a: BinaryTree, b: BinaryTree, blocks: list[frozenset], rooted: bool) -> bool:
    return validate_forest([a, b], LabelPartition(blocks), rooted)


def _rooted_step(a: BinaryTree, b: BinaryTree, blocks: list[frozenset]):
    """One rSPR move merging the root block with a neighbouring block.

    Returns ``(move_or_None, new_a, new_blocks)``.
    """
    l1 = next(blk for blk in blocks if 0 in blk)
    others = sorted((blk for blk in blocks if blk is not l1), key=min)
    span_b = {blk: b.spanning_vertices(blk) for blk in blocks}
    s1 = span_b[l1]
    chosen = None
    for blk in others:
        path = _connecting_path(b, span_b[blk], s1, b.leaf(min(blk)), b.leaf(0))
        inner = set(path[1:-1])
        if not any(inner & span_b[o] for o in others if o is not blk):
            chosen, p_b = blk, path
            break
    if chosen is None:
        raise ForestError("no block is joined to the root block by a free path")
    l2 = chosen
    merged = [blk for blk in blocks if blk is not l1 and blk is not l2] + [l1 | l2]
    span_a1 = a.spanning_vertices(l1)
    span_a2 = a.spanning_vertices(l2)
    p_a = _connecting_path(a, span_a2, span_a1, a.leaf(min(l2)), a.leaf(0))
    y, x = p_a[0], p_a[1]
    if _merge_ok(a, b, merged, True):
        return None, a, merged
    if a.is_leaf(x):
        raise ForestError("forest is not a rooted agreement forest of the trees")
    ax, xb = (_edge(x, w) for w in a.neighbors(x) if w != y)
    if l1 == frozenset({0}):
        root = a.leaf(0)
        candidates = [_edge(root, a.neighbors(root)[0])]
    else:
        w = p_b[-1]
        clade = frozenset(lab for lab in l1 if b.leaf(lab) in _below(b, w))
        candidates = []
        for e in a.edges:
            if e[0] in span_a1 and e[1] in span_a1:
                lower = e[0] if a.rooting()[1].get(e[0]) == e[1] else e[1]
                if frozenset(lab for lab in l1 if a.leaf(lab) in _below(a, lower)) == clade:
                    candidates.append(e)
    candidates = [e for e in candidates if e not in (ax, xb)]
    if not candidates:
        raise ForestError("forest is not a rooted agreement forest of the trees")
    c, d = candidates[0]
    (na, nb) = sorted(w for w in a.neighbors(x) if w != y)
    move = MoveRecord.spr(x, y, na, nb, c, d, rooted=True)
    new_a = apply_spr(a, move)
    if not _merge_ok(new_a, b, merged, True):
        raise ForestError("forest is not a rooted agreement forest of the trees")
    return move, new_a, merged


def _split_edge(tree: BinaryTree, span: set[int], block: frozenset, part: frozenset, skip=()):
    """Smallest edge of ``tree|block`` separating ``part`` from the rest."""
    other = block - part
    for e in tree.edges:
        if e in skip or e[0] not in span or e[1] not in span:
            continue
        side = tree.side(e[0], e[1])
        got = frozenset(lab for lab in block if tree.leaf(lab) in side)
        if got == part or got == other:
            return e
    raise ForestError("forest is not an agreement forest of the trees")


def _unrooted_target(a: BinaryTree, b: BinaryTree, blk: frozenset, v: int, toward: int,
                     end: int, bis: tuple[int, int]):
    """Reconnection target in ``a`` for block ``blk`` at the path vertex ``v`` of ``b``.

    ``toward`` is the next vertex of the connecting path in ``b``; ``end`` is
    the endpoint of the bisection edge on ``blk``'s side.
    """
    if len(blk) == 1:
        (lab,) = blk
        leaf = a.leaf(lab)
        if leaf == end:
            return leaf
        return _edge(leaf, a.neighbors(leaf)[0])
    span_b = b.spanning_vertices(blk)
    inside = [w for w in b.neighbors(v) if w in span_b and w != toward]
    side = b.side(v, inside[0])
    part = frozenset(lab for lab in blk if b.leaf(lab) in side)
    return _split_edge(a, a.spanning_vertices(blk), blk, part, skip=(bis,))


def _unrooted_step(a: BinaryTree, b: BinaryTree, blocks: list[frozenset]):
    span_a = {blk: a.spanning_vertices(blk) for blk in blocks}
    used = set()
    for blk, span in span_a.items():
        used.update(_edge(u, w) for u in span for w in a.neighbors(u) if w in span)
    e = next((e for e in a.edges if e not in used), None)
    if e is None:
        raise ForestError("forest is not an agreement forest of the trees")
    u, v = e
    side_v = a.side(u, v)
    in_2 = {blk: a.leaf(min(blk)) in side_v for blk in blocks}
    lx = min((blk for blk in blocks if not in_2[blk]), key=min)
    ly = min((blk for blk in blocks if in_2[blk]), key=min)
    p_b = b.path(b.leaf(min(lx)), b.leaf(min(ly)))
    span_b = {blk: b.spanning_vertices(blk) for blk in blocks}
    owner = {}
    for blk, span in span_b.items():
        for w in span:
            owner[w] = blk
    i1 = max(i for i, w in enumerate(p_b) if w in owner and not in_2[owner[w]])
    i2 = next(i for i in range(i1 + 1, len(p_b)) if p_b[i] in owner)
    l1, l2 = owner[p_b[i1]], owner[p_b[i2]]
    if not in_2[l2]:
        raise ForestError("forest is not an agreement forest of the trees")
    t1 = _unrooted_target(a, b, l1, p_b[i1], p_b[i1 + 1], u, e)
    t2 = _unrooted_target(a, b, l2, p_b[i2], p_b[i2 - 1], v, e)
    move = MoveRecord.tbr(e, t1, t2)
    new_a = apply_tbr(a, move)
    merged = [blk for blk in blocks if blk is not l1 and blk is not l2] + [l1 | l2]
    if not _merge_ok(new_a, b, merged, False):
        raise ForestError("forest is not an agreement forest of the trees")
    return move, new_a, merged


def forest_to_moves(a: BinaryTree, b: BinaryTree, forest: LabelPartition,
                    rooted: bool = False) -> list[MoveRecord]:
    """Moves turning ``a`` into ``b`` guided by an agreement forest.

    Each step merges two blocks: in rooted mode with an rSPR move joining the
    block of label 0 to a block whose connecting path in ``b`` avoids every
    other block; in unrooted mode with a TBR move across an edge lying in no
    block.  For a minimal forest exactly ``m - 1`` moves are returned; a
    merge that already holds without moving anything costs no move.
    """
    if not validate_forest([a, b], forest, rooted):
        raise ForestError("partition is not an agreement forest of the trees")
    blocks = list(forest.blocks)
    moves: list[MoveRecord] = []
    cur = a
    step = _rooted_step if rooted else _unrooted_step
    while len(blocks) > 1:
        move, cur, blocks = step(cur, b, blocks)
        if move is not None:
            moves.append(move)
    if canonicalize(cur) != canonicalize(b):
        raise ForestError("merging all blocks did not reach the target tree")
    return moves


# ---------------------------------------------------------------------- #
# moves -> forests
# ---------------------------------------------------------------------- #

def moves_to_forest(a: BinaryTree, moves: Sequence[MoveRecord], rooted: bool = False) -> LabelPartition:
    """Partition left by performing only the prune or bisection steps.

    Each move cuts the labels of its current tree into two sides (the ``y``
    side of an SPR, the two sides of a TBR bisection edge); the result is
    the common refinement of all these cuts.
    """
    blocks = [a.label_set]
    cur = a
    for i, move in enumerate(moves, 1):
        try:
            if rooted and classify_move(cur, move) != Op.RSPR:
                raise MoveError("move is not an rSPR move")
            if move.kind == Op.TBR:
                side = cur.side_labels(*move.bisection)
            else:
                side = cur.side_labels(move.x, move.y)
            nxt = apply_move(cur, move)
        except (MoveError, KeyError) as exc:
            raise ForestError(f"replay failed at move {i}: {exc}") from None
        blocks = [part for blk in blocks for part in (blk & side, blk - side) if part]
        cur = nxt
    return LabelPartition(blocks)
