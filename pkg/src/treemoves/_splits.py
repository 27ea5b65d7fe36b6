"""Move neighbourhoods computed directly on split keys.

A split key (see :meth:`BinaryTree.split_key`) lists every edge as the
bitmask of labels on the side away from the lowest label ``r``.  Cutting
edge ``s`` leaves ``P = full ^ s`` (holding ``r``) and ``Q = s``; the
restricted trees ``A/P`` and ``A/Q`` have edge sets obtainable by masking,
and reconnecting at edges ``P1`` of ``A/P`` and ``Q1`` of ``A/Q`` produces
a key assembled from three independent pieces.  No vertex-level trees are
built, which keeps exhaustive searches over ``B(X)`` cheap for ``|X| <= 10``.
"""

from __future__ import annotations

TBR, SPR, RSPR = "tbr", "spr", "rspr"


def parents(key) -> dict[int, int | None]:
    """Map each split to its minimal strict superset (``None`` for the top)."""
    ordered = sorted(key, key=int.bit_count)
    out: dict[int, int | None] = {}
    for i, s in enumerate(ordered):
        out[s] = None
        for t in ordered[i + 1:]:
            if t & s == s and t != s:
                out[s] = t
                break
    return out


def _p_side(s: int, key) -> dict:
    """Edge sets contributed by the ``r`` side for each reconnection edge."""
    ep = {t & ~s for t in key if t & ~s}
    if not ep:
        return {None: frozenset()}
    out = {}
    for p1 in ep:
        edges = {p1, p1 | s}
        for t in ep:
            if t != p1:
                edges.add(t | s if p1 & ~t == 0 else t)
        out[p1] = frozenset(edges)
    return out


def _q_side(s: int, key) -> dict:
    low = s & -s
    eq = {(t ^ s if t & low else t) for t in key if t & s == t and t != s}
    if not eq:
        return {None: frozenset()}
    out = {}
    for q1 in eq:
        rest = s ^ q1
        edges = {q1, rest}
        for q in eq:
            if q != q1:
                edges.add(q if (q & ~q1 == 0 or q & q1 == 0) else s ^ q)
        out[q1] = frozenset(edges)
    return out


def neighbor_keys(key: frozenset, full: int, op: str) -> set[frozenset]:
    """Split keys of every tree one ``op`` move away (the source excluded)."""
    if full.bit_count() < 3:
        return set()
    par = parents(key) if op != TBR else None
    out: set[frozenset] = set()
    for s in key:
        single = frozenset((s,))
        if op == TBR:
            ps, qs = _p_side(s, key), _q_side(s, key)
            for pe in ps.values():
                base = single | pe
                for qe in qs.values():
                    out.add(base | qe)
            continue
        qs = _q_side(s, key)
        ps = _p_side(s, key)
        # pruned side Q (away from r) keeps its attachment point
        if s.bit_count() == 1:
            q_own = qs[None]
        else:
            child = next(t for t in key if par[t] == s)
            q1 = child ^ s if child & (s & -s) else child
            q_own = qs[q1]
        for pe in ps.values():
            out.add(single | pe | q_own)
        if op == SPR:
            p = par[s]
            p_own = ps[None] if p is None else ps[p & ~s]
            for qe in qs.values():
                out.add(single | p_own | qe)
    out.discard(key)
    return out
