"""Exact move distances over small tree spaces, and Monte-Carlo experiments.

Trees are identified by split keys (:meth:`BinaryTree.split_key`).  Pairwise
searches use bidirectional breadth-first search over a lazily built move
graph; whole-space tables build the graph once and get all distances from
boolean matrix powers.
"""

from __future__ import annotations

import math
import random
import statistics
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import _splits
from .constructions import decompose, deletion_lower_bound, super_pair_forest
from .moves import MoveRecord, Op, apply_move, enumerate_moves
from .tree import BinaryTree, TreeError, canonicalize, enumerate_trees, random_tree

DISTANCE_LIMIT = 8
TABLE_LIMIT = 6


class SearchLimitError(ValueError):
    """The instance exceeds an explicit size guard."""


# ---------------------------------------------------------------------- #
# move graph
# ---------------------------------------------------------------------- #

class MoveGraph:
    """Interned split keys with cached ``op`` neighbourhoods."""

    def __init__(self, labels: frozenset, op: Op):
        self.labels = labels
        self.op = op
        self.full = sum(1 << x for x in labels)
        self._ids: dict[frozenset, int] = {}
        self._keys: list[frozenset] = []
        self._nbrs: dict[int, tuple[int, ...]] = {}

    def __len__(self) -> int:
        return len(self._keys)

    def node(self, key: frozenset) -> int:
        i = self._ids.get(key)
        if i is None:
            i = self._ids[key] = len(self._keys)
            self._keys.append(key)
        return i

    def key(self, i: int) -> frozenset:
        return self._keys[i]

    def neighbors(self, i: int) -> tuple[int, ...]:
        got = self._nbrs.get(i)
        if got is None:
            keys = _splits.neighbor_keys(self._keys[i], self.full, self.op.value)
            got = self._nbrs[i] = tuple(sorted(self.node(k) for k in keys))
        return got


@lru_cache(maxsize=6)
def _graph(labels: frozenset, op: Op) -> MoveGraph:
    return MoveGraph(labels, op)


def move_graph(labels, op) -> MoveGraph:
    """Shared graph for ``labels``; cached for reuse across queries."""
    return _graph(frozenset(labels), Op.parse(op))


# ---------------------------------------------------------------------- #
# pairwise distances
# ---------------------------------------------------------------------- #

@dataclass
class DistanceResult:
    distance: int
    path: list[MoveRecord] | None
    explored: int


def _check_pair(a: BinaryTree, b: BinaryTree, op: Op, limit: int) -> None:
    if a.label_set != b.label_set:
        raise TreeError("trees have different label sets")
    if a.n > limit:
        raise SearchLimitError(f"exact search is limited to n <= {limit}, got n = {a.n}")
    if op == Op.RSPR and 0 not in a.label_set:
        raise TreeError("rSPR distances need a leaf labelled 0")


def _bidirectional(g: MoveGraph, s: int, t: int):
    if s == t:
        return 0, [s], 1
    par = [{s: None}, {t: None}]
    frontier = [[s], [t]]
    while frontier[0] and frontier[1]:
        side = 0 if len(frontier[0]) <= len(frontier[1]) else 1
        mine, other = par[side], par[1 - side]
        nxt = []
        meets = []
        for u in frontier[side]:
            for w in g.neighbors(u):
                if w not in mine:
                    mine[w] = u
                    nxt.append(w)
                    if w in other:
                        meets.append(w)
        frontier[side] = nxt
        if meets:
            mid = meets[0]
            left, w = [], mid
            while w is not None:
                left.append(w)
                w = par[0][w]
            right, w = [], par[1][mid]
            while w is not None:
                right.append(w)
                w = par[1][w]
            path = left[::-1] + right
            return len(path) - 1, path, len(par[0]) + len(par[1])
    raise AssertionError("move graph is connected")


def _concrete_path(a: BinaryTree, keys: list[frozenset], op: Op) -> list[MoveRecord]:
    """Move records on concrete trees following a sequence of split keys."""
    moves = []
    cur = a
    for key in keys[1:]:
        for m in enumerate_moves(cur, op):
            nxt = apply_move(cur, m)
            if nxt.split_key() == key:
                moves.append(m)
                cur = nxt
                break
        else:
            raise AssertionError("no move realises a step of the search path")
    return moves


def exact_distance(a: BinaryTree, b: BinaryTree, op, *, with_path: bool = True,
                   limit: int = DISTANCE_LIMIT) -> DistanceResult:
    """Minimum number of ``op`` moves turning ``a`` into ``b``.

    Bidirectional breadth-first search, always expanding the smaller
    frontier.  Raises :class:`SearchLimitError` for ``n > limit``.
    """
    op = Op.parse(op)
    _check_pair(a, b, op, limit)
    g = move_graph(a.label_set, op)
    s, t = g.node(a.split_key()), g.node(b.split_key())
    d, nodes, explored = _bidirectional(g, s, t)
    path = _concrete_path(a, [g.key(i) for i in nodes], op) if with_path else None
    return DistanceResult(d, path, explored)


# ---------------------------------------------------------------------- #
# whole-space tables
# ---------------------------------------------------------------------- #

def _check_table_n(n: int, limit: int) -> None:
    if n < 2 or n > limit:
        raise SearchLimitError(f"whole-space tables need 2 <= n <= {limit}, got n = {n}")


@lru_cache(maxsize=8)
def _space(n: int):
    trees = list(enumerate_trees(n))
    index = {t.split_key(): i for i, t in enumerate(trees)}
    return trees, index


@lru_cache(maxsize=24)
def _matrix(n: int, op: Op) -> np.ndarray:
    trees, index = _space(n)
    size = len(trees)
    full = (1 << (n + 1)) - 1
    adj = np.zeros((size, size), dtype=np.float32)
    for i, t in enumerate(trees):
        for key in _splits.neighbor_keys(t.split_key(), full, op.value):
            adj[i, index[key]] = 1.0
    dist = np.full((size, size), -1, dtype=np.int16)
    np.fill_diagonal(dist, 0)
    reach = np.eye(size, dtype=np.float32)
    step = 0
    while (dist < 0).any():
        step += 1
        reach = ((reach @ adj) + reach > 0).astype(np.float32)
        dist[(dist < 0) & (reach > 0)] = step
    dist.setflags(write=False)
    return dist


def distance_matrix(n: int, op, *, limit: int = TABLE_LIMIT):
    """``(trees, D)`` with ``D[i, j]`` the ``op`` distance between all of ``B({0..n})``."""
    op = Op.parse(op)
    _check_table_n(n, limit)
    return _space(n)[0], _matrix(n, op)


@dataclass
class TableRow:
    n: int
    R_TBR: int
    D_TBR: int
    R_SPR: int
    D_SPR: int
    R_rSPR: int
    D_rSPR: int
    centers: dict = field(default_factory=dict, compare=False)

    COLUMNS = ("n", "R_TBR", "D_TBR", "R_SPR", "D_SPR", "R_rSPR", "D_rSPR")

    def values(self) -> tuple[int, ...]:
        return tuple(getattr(self, c) for c in self.COLUMNS)

    def csv(self) -> str:
        return ",".join(map(str, self.values()))


def eccentricity_table(n: int, *, limit: int = TABLE_LIMIT) -> TableRow:
    """Radius and diameter of ``B({0..n})`` under TBR, SPR and rSPR.

    ``centers`` maps each move class to one tree of minimum eccentricity.
    """
    _check_table_n(n, limit)
    out = {"n": n}
    centers = {}
    for op, name in ((Op.TBR, "TBR"), (Op.SPR, "SPR"), (Op.RSPR, "rSPR")):
        trees, dist = distance_matrix(n, op, limit=limit)
        ecc = dist.max(axis=1)
        out["R_" + name] = int(ecc.min())
        out["D_" + name] = int(ecc.max())
        centers[name] = canonicalize(trees[int(ecc.argmin())]).text
    return TableRow(**out, centers=centers)


# ---------------------------------------------------------------------- #
# expectation experiment
# ---------------------------------------------------------------------- #

def _stderr(xs: Sequence[float]) -> float:
    return statistics.stdev(xs) / math.sqrt(len(xs)) if len(xs) > 1 else 0.0


def _bounds(trees: Sequence[BinaryTree]) -> dict:
    k, n = len(trees), trees[0].n
    up = super_pair_forest(trees)
    a = (n + 1) ** ((k - 1) / (k + 1))
    t_param = math.ceil(2 * (n + 1) ** (2 / (k + 1)))
    cert = deletion_lower_bound(trees, [decompose(t, a) for t in trees])
    return {
        "upper_m": up.m, "S": up.info["S"], "b": up.info["b"],
        "lower_m": cert.bound, "t": cert.t, "t_param": t_param, "z": cert.z,
        "upper_gap": n + 1 - up.m, "lower_gap": n + 1 - cert.bound,
    }


@dataclass
class ExperimentReport:
    """Per-trial rows plus summary statistics for one ``n``."""

    n: int
    k: int
    seed: int
    rows: list[dict]
    summary: dict

    def to_dict(self) -> dict:
        return asdict(self)


def expectation_experiment(n: int, trials: int, seed: int, *, k: int = 2,
                           exhaustive: bool = False) -> ExperimentReport:
    """Constructive upper and lower bounds on forest sizes for random trees.

    Trial ``i`` draws ``k`` uniform trees from ``random.Random(seed + i)``.
    The upper bound is the super-pair forest (a rooted forest, so it bounds
    ``M_r >= M``); the lower bound is the deleting-edges certificate with
    ``a = (n+1)**((k-1)/(k+1))``.  Gaps are ``n + 1 - m``, so the upper
    bound's gap never exceeds the lower bound's.

    With ``exhaustive`` (``k = 2`` and ``n <= 6`` only) every ordered pair of
    trees is used instead of sampling, and exact distances are added.
    """
    if trials < 1 and not exhaustive:
        raise ValueError("trials must be at least 1")
    if k < 2:
        raise ValueError("k must be at least 2")
    rows = []
    if exhaustive:
        if k != 2:
            raise ValueError("exhaustive mode compares pairs of trees (k = 2)")
        trees, d_tbr = distance_matrix(n, Op.TBR)
        _, d_rspr = distance_matrix(n, Op.RSPR)
        for i, a in enumerate(trees):
            for j, b in enumerate(trees):
                row = {"trial": len(rows), **_bounds([a, b]),
                       "d_TBR": int(d_tbr[i, j]), "d_rSPR": int(d_rspr[i, j])}
                rows.append(row)
    else:
        for i in range(trials):
            rng = random.Random(seed + i)
            trees = [random_tree(n, rng=rng) for _ in range(k)]
            rows.append({"trial": i, "seed": seed + i, **_bounds(trees)})
    summary = {"n": n, "k": k, "trials": len(rows)}
    for col in ("S", "upper_gap", "lower_gap", "upper_m", "lower_m"):
        xs = [r[col] for r in rows]
        summary[col + "_mean"] = statistics.fmean(xs)
        summary[col + "_se"] = _stderr(xs)
    summary["violations"] = sum(r["upper_m"] < r["lower_m"] for r in rows)
    if exhaustive:
        summary["d_TBR_mean"] = statistics.fmean(r["d_TBR"] for r in rows)
        summary["d_rSPR_mean"] = statistics.fmean(r["d_rSPR"] for r in rows)
        summary["bracket_failures"] = sum(
            not (r["lower_m"] <= r["d_TBR"] + 1 and r["d_rSPR"] + 1 <= r["upper_m"]) for r in rows)
    return ExperimentReport(n, k, seed, rows, summary)


def fit_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    slope, _ = np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)
    return float(slope)


def scaling_experiment(ns: Sequence[int], trials: int, seed: int, *, k: int = 2):
    """Run :func:`expectation_experiment` for each ``n`` and fit log-log slopes.

    The ``j``-th size uses seeds ``seed + j * trials + i``.  Returns
    ``(reports, fit)`` where ``fit`` holds the slopes of the mean super-pair
    count and of the mean lower-bound gap against ``n``.
    """
    reports = [expectation_experiment(n, trials, seed + j * trials, k=k) for j, n in enumerate(ns)]
    fit = {
        "ns": list(ns),
        "S_slope": fit_slope(ns, [r.summary["S_mean"] for r in reports]),
        "lower_gap_slope": fit_slope(ns, [r.summary["lower_gap_mean"] for r in reports]),
        "violations": sum(r.summary["violations"] for r in reports),
    }
    return reports, fit
