"""Exact max-flow on int64 capacities (Dinic), with residual reachability."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

MAX_TOTAL_CAPACITY = 2**62


@njit(cache=True)
def _dinic(n, s, t, start, head, tail, cap, rev):
    flow = 0
    level = np.empty(n, np.int64)
    it = np.empty(n, np.int64)
    queue = np.empty(n, np.int64)
    path = np.empty(n + 1, np.int64)
    while True:
        level[:] = -1
        level[s] = 0
        queue[0] = s
        qh, qt = 0, 1
        while qh < qt:
            v = queue[qh]
            qh += 1
            for e in range(start[v], start[v + 1]):
                w = head[e]
                if cap[e] > 0 and level[w] < 0:
                    level[w] = level[v] + 1
                    queue[qt] = w
                    qt += 1
        if level[t] < 0:
            break
        for v in range(n):
            it[v] = start[v]
        while True:
            depth = 0
            v = s
            found = False
            while True:
                if v == t:
                    found = True
                    break
                advanced = False
                while it[v] < start[v + 1]:
                    e = it[v]
                    w = head[e]
                    if cap[e] > 0 and level[w] == level[v] + 1:
                        path[depth] = e
                        depth += 1
                        v = w
                        advanced = True
                        break
                    it[v] += 1
                if not advanced:
                    if depth == 0:
                        break
                    # dead end: prune v and retreat one arc
                    level[v] = -1
                    depth -= 1
                    v = tail[path[depth]]
                    it[v] += 1
            if not found:
                break
            b = cap[path[0]]
            for i in range(1, depth):
                if cap[path[i]] < b:
                    b = cap[path[i]]
            for i in range(depth):
                e = path[i]
                cap[e] -= b
                cap[rev[e]] += b
            flow += b
    return flow


@njit(cache=True)
def _reach_from(n, s, start, head, cap):
    seen = np.zeros(n, np.bool_)
    stack = np.empty(n, np.int64)
    seen[s] = True
    stack[0] = s
    top = 1
    while top > 0:
        top -= 1
        v = stack[top]
        for e in range(start[v], start[v + 1]):
            w = head[e]
            if cap[e] > 0 and not seen[w]:
                seen[w] = True
                stack[top] = w
                top += 1
    return seen


@njit(cache=True)
def _reach_to(n, t, start, head, cap, rev):
    # v reaches t iff some residual arc v -> w has w reaching t
    seen = np.zeros(n, np.bool_)
    stack = np.empty(n, np.int64)
    seen[t] = True
    stack[0] = t
    top = 1
    while top > 0:
        top -= 1
        w = stack[top]
        for e in range(start[w], start[w + 1]):
            v = head[e]
            if cap[rev[e]] > 0 and not seen[v]:
                seen[v] = True
                stack[top] = v
                top += 1
    return seen


@dataclass
class FlowResult:
    value: int
    source_side_min: np.ndarray  # reachable from s in the residual graph
    source_side_max: np.ndarray  # complement of the nodes that reach t


class CapacityOverflowError(ValueError):
    """Scaled capacities exceed the int64 budget; ``factor`` is the needed reduction."""

    def __init__(self, total: int, factor: float):
        super().__init__(f"total capacity {total} exceeds 2^62; rescale by at least 1/{factor:.3g}")
        self.total = total
        self.factor = factor


def max_flow(n: int, tails, heads, cap_fwd, cap_rev, s: int, t: int) -> FlowResult:
    """Max flow on arcs tails[k] -> heads[k] (cap_fwd) paired with heads -> tails (cap_rev)."""
    tails = np.asarray(tails, dtype=np.int64)
    heads = np.asarray(heads, dtype=np.int64)
    cf = np.asarray(cap_fwd, dtype=np.int64)
    cr = np.asarray(cap_rev, dtype=np.int64)
    if (cf < 0).any() or (cr < 0).any():
        raise ValueError("capacities must be nonnegative")
    total = int(cf.sum()) + int(cr.sum())
    if total > MAX_TOTAL_CAPACITY:
        raise CapacityOverflowError(total, total / MAX_TOTAL_CAPACITY)
    m = len(tails)
    arc_tail = np.empty(2 * m, np.int64)
    arc_head = np.empty(2 * m, np.int64)
    arc_cap = np.empty(2 * m, np.int64)
    arc_tail[0::2], arc_tail[1::2] = tails, heads
    arc_head[0::2], arc_head[1::2] = heads, tails
    arc_cap[0::2], arc_cap[1::2] = cf, cr
    order = np.argsort(arc_tail, kind="stable")
    pos = np.empty(2 * m, np.int64)
    pos[order] = np.arange(2 * m)
    partner = np.arange(2 * m) ^ 1
    rev = pos[partner[order]]
    tail = arc_tail[order]
    head = arc_head[order]
    cap = arc_cap[order].copy()
    start = np.zeros(n + 1, np.int64)
    np.add.at(start, tail + 1, 1)
    start = np.cumsum(start)
    value = _dinic(n, s, t, start, head, tail, cap, rev) if m else 0
    smin = _reach_from(n, s, start, head, cap)
    smax = ~_reach_to(n, t, start, head, cap, rev)
    return FlowResult(int(value), smin, smax)
