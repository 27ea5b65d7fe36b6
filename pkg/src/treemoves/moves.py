"""TBR, SPR and rSPR moves on :class:`~treemoves.tree.BinaryTree`.

Moves are recorded against vertex ids of the source tree.  Applying a move
keeps every vertex id: the suppressed vertex of a bisection or prune step is
reused as the subdivision vertex of the reconnection, so ids in the source
and the result refer to the same vertices and an inverse move can be written
against the result directly.

TBR records name the bisection edge ``(u, v)`` and one reconnection target on
each side.  A target is an edge of that side after suppression; the new edge
created by suppressing ``u`` may be written either as its surviving endpoints
``(p, q)`` or as ``(u, p)``.  When ``u`` is a leaf its side is an isolated
vertex and the target is the vertex ``u`` itself.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Iterator

from . import _splits
from .tree import BinaryTree, CanonicalForm, TreeError, _edge, canonicalize, tree_from_key


class MoveError(ValueError):
    """A move record does not describe a legal move on the given tree."""


class Op(str, Enum):
    TBR = "tbr"
    SPR = "spr"
    RSPR = "rspr"

    @classmethod
    def parse(cls, value) -> "Op":
        if isinstance(value, Op):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown move class {value!r}; expected tbr, spr or rspr") from None

    def __str__(self) -> str:
        return {"tbr": "TBR", "spr": "SPR", "rspr": "rSPR"}[self.value]


_STRENGTH = {Op.RSPR: 0, Op.SPR: 1, Op.TBR: 2}


def contains(weaker: Op, stronger: Op) -> bool:
    """Whether every ``weaker`` move is also a ``stronger`` move."""
    return _STRENGTH[weaker] <= _STRENGTH[stronger]


@dataclass(frozen=True)
class MoveRecord:
    """One move against concrete vertex ids.

    TBR moves use ``bisection``, ``reconnect_a`` (target on the side of
    ``bisection[0]``) and ``reconnect_b``.  SPR and rSPR records detach
    vertex ``x`` (carrying the ``y`` side) from between ``a`` and ``b`` and
    insert it into edge ``cd``.
    """

    kind: Op
    bisection: tuple[int, int] | None = None
    reconnect_a: tuple[int, int] | int | None = None
    reconnect_b: tuple[int, int] | int | None = None
    x: int | None = None
    y: int | None = None
    a: int | None = None
    b: int | None = None
    c: int | None = None
    d: int | None = None

    @classmethod
    def tbr(cls, bisection, reconnect_a, reconnect_b) -> "MoveRecord":
        return cls(Op.TBR, tuple(bisection), _target(reconnect_a), _target(reconnect_b))

    @classmethod
    def spr(cls, x, y, a, b, c, d, *, rooted: bool = False) -> "MoveRecord":
        return cls(Op.RSPR if rooted else Op.SPR, x=x, y=y, a=a, b=b, c=c, d=d)

    @property
    def is_tbr(self) -> bool:
        return self.kind == Op.TBR

    def to_dict(self) -> dict:
        out = {"kind": str(self.kind)}
        for k, v in asdict(self).items():
            if k != "kind" and v is not None:
                out[k] = list(v) if isinstance(v, tuple) else v
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "MoveRecord":
        kind = Op.parse(data["kind"])
        if kind == Op.TBR:
            try:
                return cls.tbr(data["bisection"], data["reconnect_a"], data["reconnect_b"])
            except KeyError as exc:
                raise MoveError(f"TBR record is missing {exc.args[0]!r}") from None
        try:
            return cls.spr(*(int(data[k]) for k in "xyabcd"), rooted=kind == Op.RSPR)
        except KeyError as exc:
            raise MoveError(f"SPR record is missing {exc.args[0]!r}") from None

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "MoveRecord":
        return cls.from_dict(json.loads(text))


def _target(t):
    if isinstance(t, (list, tuple)):
        if len(t) != 2:
            raise MoveError(f"reconnection edge must have two endpoints, got {t!r}")
        return (int(t[0]), int(t[1]))
    return int(t)


# ---------------------------------------------------------------------- #
# TBR
# ---------------------------------------------------------------------- #

def _tbr_side(tree: BinaryTree, u: int, v: int, target):
    """Resolve the target on ``u``'s side of bisection edge ``uv``.

    Returns ``(new_edge, edge)``: the new edge created by suppressing ``u``
    (``None`` for an isolated leaf) and the resolved target edge (``None``
    when ``u`` is isolated).  ``edge`` equal to ``new_edge`` means ``u``
    returns to its old place.
    """
    if tree.is_leaf(u):
        if target != u:
            raise MoveError(f"side of {u} is an isolated vertex; target must be {u}, got {target!r}")
        return None, None
    p, q = sorted(w for w in tree.neighbors(u) if w != v)
    new = (p, q)
    if not isinstance(target, tuple):
        raise MoveError(f"target {target!r} on the side of {u} must be an edge")
    c, d = target
    if u in (c, d):
        other = d if c == u else c
        if other not in new:
            raise MoveError(f"{c}-{d} is not an edge on the side of {u}")
        return new, new
    e = _edge(c, d)
    if e == new:
        return new, new
    if not tree.has_edge(c, d):
        raise MoveError(f"reconnection target {c}-{d} is not an edge")
    comp = tree.side(v, u)
    if c not in comp or d not in comp:
        raise MoveError(f"reconnection target {c}-{d} is in the wrong component")
    return new, e


def apply_tbr(tree: BinaryTree, move: MoveRecord) -> BinaryTree:
    """Bisect at ``move.bisection``, suppress, and reconnect.

    Raises :class:`MoveError` for a missing bisection edge or a target that
    is not an edge of the right component.
    """
    if move.kind != Op.TBR:
        raise MoveError("apply_tbr needs a TBR record")
    if tree.n_leaves < 3:
        raise MoveError("TBR moves need at least 3 leaves")
    u, v = move.bisection
    if not tree.has_edge(u, v):
        raise MoveError(f"bisection edge {u}-{v} is not an edge")
    side_u = _tbr_side(tree, u, v, move.reconnect_a)
    side_v = _tbr_side(tree, v, u, move.reconnect_b)
    adj = {w: set(nb) for w, nb in tree.adjacency().items()}
    for w, (new, target) in ((u, side_u), (v, side_v)):
        if new is None or new == target:
            continue
        p, q = new
        adj[w] = {u if w == v else v}
        adj[p].discard(w)
        adj[q].discard(w)
        adj[p].add(q)
        adj[q].add(p)
        c, d = target
        adj[c].discard(d)
        adj[d].discard(c)
        adj[c].add(w)
        adj[d].add(w)
        adj[w] |= {c, d}
    return BinaryTree(adj, tree.leaf_labels(), check=False)


# ---------------------------------------------------------------------- #
# SPR / rSPR
# ---------------------------------------------------------------------- #

def _check_spr(tree: BinaryTree, m: MoveRecord) -> set[int]:
    """Validate an SPR record and return the vertex set on ``y``'s side."""
    names = "xyabcd"
    vals = [getattr(m, k) for k in names]
    for k, val in zip(names, vals):
        if val is None or val not in tree._adj:
            raise MoveError(f"vertex {k}={val!r} is not in the tree")
    x, y, a, b, c, d = vals
    pairs = {"xy": (x, y), "ax": (a, x), "xb": (x, b), "cd": (c, d)}
    for name, (p, q) in pairs.items():
        if not tree.has_edge(p, q):
            raise MoveError(f"distinctness clause: {name} = {p}-{q} is not an edge")
    if len({_edge(*e) for e in pairs.values()}) != 4:
        raise MoveError("distinctness clause: xy, ax, xb, cd must be distinct edges")
    y_side = tree.side(x, y)
    if c in y_side or d in y_side:
        raise MoveError("path clause: the path from c to y does not contain x")
    if m.kind == Op.RSPR:
        if 0 not in tree.label_set:
            raise MoveError("rSPR moves need a leaf labelled 0")
        if tree.leaf(0) in y_side:
            raise MoveError("root clause: the path from 0 to y does not pass through x")
    return y_side


def apply_spr(tree: BinaryTree, move: MoveRecord) -> BinaryTree:
    """Lift ``x`` out of ``a-x-b``, join ``ab``, then subdivide ``cd`` with ``x``."""
    if move.kind == Op.TBR:
        raise MoveError("apply_spr needs an SPR or rSPR record")
    _check_spr(tree, move)
    x, a, b, c, d = move.x, move.a, move.b, move.c, move.d
    adj = {w: set(nb) for w, nb in tree.adjacency().items()}
    for p, q in ((a, x), (x, b)):
        adj[p].discard(q)
        adj[q].discard(p)
    adj[a].add(b)
    adj[b].add(a)
    adj[c].discard(d)
    adj[d].discard(c)
    for p in (c, d):
        adj[p].add(x)
        adj[x].add(p)
    return BinaryTree(adj, tree.leaf_labels(), check=False)


def apply_move(tree: BinaryTree, move: MoveRecord) -> BinaryTree:
    return apply_tbr(tree, move) if move.kind == Op.TBR else apply_spr(tree, move)


# ---------------------------------------------------------------------- #
# classification, inversion, decomposition
# ---------------------------------------------------------------------- #

def _root_free(tree: BinaryTree, vertices: set[int]) -> bool:
    return 0 in tree.label_set and tree.leaf(0) not in vertices


def classify_move(tree: BinaryTree, move: MoveRecord) -> Op:
    """Strongest class the move belongs to: rSPR, SPR or TBR.

    A TBR move is SPR-shaped when one side is an isolated leaf or returns to
    its own new edge; it is rSPR-shaped when such a side can be taken as the
    pruned side without containing leaf 0.
    """
    if move.kind != Op.TBR:
        y_side = _check_spr(tree, move)
        return Op.RSPR if _root_free(tree, y_side) else Op.SPR
    apply_tbr(tree, move)
    u, v = move.bisection
    best = Op.TBR
    for w, other, target in ((u, v, move.reconnect_a), (v, u, move.reconnect_b)):
        new, edge = _tbr_side(tree, w, other, target)
        if new == edge:
            # w's side is reattached at w itself: it is the pruned subtree
            moved = tree.side(other, w)
            cls = Op.RSPR if _root_free(tree, moved) else Op.SPR
            if _STRENGTH[cls] < _STRENGTH[best]:
                best = cls
    return best


def invert_move(tree: BinaryTree, move: MoveRecord) -> MoveRecord:
    """A move of the same kind on the result that restores ``tree``."""
    result = apply_move(tree, move)
    if move.kind != Op.TBR:
        return MoveRecord(move.kind, x=move.x, y=move.y, a=move.c, b=move.d, c=move.a, d=move.b)
    u, v = move.bisection
    targets = []
    for w, other in ((u, v), (v, u)):
        if tree.is_leaf(w):
            targets.append(w)
            continue
        p, q = sorted(z for z in tree.neighbors(w) if z != other)
        targets.append((p, q) if result.has_edge(p, q) else (w, p))
    return MoveRecord.tbr((u, v), targets[0], targets[1])


def _spr_for_side(tree: BinaryTree, x: int, y: int, edge) -> MoveRecord:
    """SPR moving the ``y`` side of ``xy`` onto ``edge`` of the ``x`` side."""
    a, b = sorted(w for w in tree.neighbors(x) if w != y)
    c, d = edge
    rooted = _root_free(tree, tree.side(x, y))
    return MoveRecord.spr(x, y, a, b, c, d, rooted=rooted)


def tbr_as_two_sprs(a: BinaryTree, b: BinaryTree, move: MoveRecord):
    """Split a TBR move from ``a`` to ``b`` into at most two SPR moves.

    Returns ``(c, spr1, spr2)`` with ``apply_spr(a, spr1) == c`` and
    ``apply_spr(c, spr2)`` isomorphic to ``b``; ``spr2`` is ``None`` when
    the move already is an SPR.  For a TBR that reproduces ``a`` exactly,
    ``spr1`` is ``None`` as well and ``c`` is ``a``.  The endpoint of the
    bisection edge with the smaller id is pruned first.
    """
    if move.kind != Op.TBR:
        raise MoveError("tbr_as_two_sprs needs a TBR record")
    result = apply_tbr(a, move)
    if canonicalize(result) != canonicalize(b):
        raise MoveError("second tree is not the result of this TBR move")
    u, v = move.bisection
    new_u, edge_u = _tbr_side(a, u, v, move.reconnect_a)
    new_v, edge_v = _tbr_side(a, v, u, move.reconnect_b)
    stay_u, stay_v = new_u == edge_u, new_v == edge_v
    if stay_u and stay_v:
        return a, None, None
    if stay_v:
        spr = _spr_for_side(a, u, v, edge_u)
        return apply_spr(a, spr), spr, None
    if stay_u:
        spr = _spr_for_side(a, v, u, edge_v)
        return apply_spr(a, spr), spr, None
    order = [(u, v, edge_u), (v, u, edge_v)]
    if v < u:
        order.reverse()
    (x1, y1, e1), (x2, y2, e2) = order
    spr1 = _spr_for_side(a, x1, y1, e1)
    mid = apply_spr(a, spr1)
    spr2 = _spr_for_side(mid, x2, y2, e2)
    return mid, spr1, spr2


# ---------------------------------------------------------------------- #
# enumeration
# ---------------------------------------------------------------------- #

def _side_edges(tree: BinaryTree, comp: set[int], skip: int):
    return [e for e in tree.edges if e[0] in comp and e[1] in comp
            and skip not in e]


def enumerate_moves(tree: BinaryTree, op) -> Iterator[MoveRecord]:
    """Every move record of class ``op`` on ``tree`` (identity moves included).

    Each TBR move is listed once per choice of targets, with the new edge
    written as ``(u, p)``.  SPR records are listed for each ordered pair
    ``(x, y)`` with ``x`` internal.
    """
    op = Op.parse(op)
    if tree.n_leaves < 3:
        return
    if op == Op.TBR:
        for u, v in tree.edges:
            options = []
            for w, other in ((u, v), (v, u)):
                if tree.is_leaf(w):
                    options.append([w])
                    continue
                p = min(z for z in tree.neighbors(w) if z != other)
                comp = tree.side(other, w)
                options.append([(w, p)] + _side_edges(tree, comp, w))
            for ta in options[0]:
                for tb in options[1]:
                    yield MoveRecord.tbr((u, v), ta, tb)
        return
    for x in tree.vertices:
        if tree.is_leaf(x):
            continue
        for y in tree.neighbors(x):
            y_side = tree.side(x, y)
            rooted = _root_free(tree, y_side)
            if op == Op.RSPR and not rooted:
                continue
            a, b = sorted(w for w in tree.neighbors(x) if w != y)
            banned = {_edge(a, x), _edge(x, b)}
            for c, d in tree.edges:
                if c in y_side or d in y_side or (c, d) in banned:
                    continue
                yield MoveRecord.spr(x, y, a, b, c, d, rooted=op == Op.RSPR)


def neighbor_keys(tree: BinaryTree, op) -> set[frozenset]:
    """Split keys of all trees one ``op`` move away from ``tree``."""
    op = Op.parse(op)
    labels = tree.label_set
    if op == Op.RSPR and 0 not in labels:
        raise TreeError("rSPR moves need a leaf labelled 0")
    full = 0
    for x in labels:
        full |= 1 << x
    return _splits.neighbor_keys(tree.split_key(), full, op.value)


def neighbors(tree: BinaryTree, op) -> set[CanonicalForm]:
    """Canonical forms of all trees exactly one ``op`` move away.

    The source tree itself is excluded.  Trees with fewer than 3 leaves have
    no neighbours.
    """
    labels = tree.label_set
    return {canonicalize(tree_from_key(k, labels)) for k in neighbor_keys(tree, op)}


def neighbors_by_enumeration(tree: BinaryTree, op) -> set[CanonicalForm]:
    """Same as :func:`neighbors` but by applying every enumerated move."""
    own = canonicalize(tree)
    out = {canonicalize(apply_move(tree, m)) for m in enumerate_moves(tree, op)}
    out.discard(own)
    return out
