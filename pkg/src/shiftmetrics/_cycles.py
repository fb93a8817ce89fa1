"""Max-plus machinery on graphs with a fixed in-degree.

A graph on nodes ``0..n-1`` is given by ``pred`` (shape ``(n, d)``) listing
the predecessors of every node and ``weight`` (same shape) holding the weight
of the edge ``pred[v, j] -> v``.  De Bruijn graphs over ``A^L`` have in-degree
``|A|`` and fit this layout directly.
"""

from __future__ import annotations

import math
from collections import deque

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components


def de_bruijn_pred(k: int, L: int) -> tuple[np.ndarray, np.ndarray]:
    """Predecessors of each ``L``-block and the symbol appended on that edge.

    Returns ``(pred, sym)``: the edge ``pred[v, a] -> v`` appends ``sym[v]``.
    """
    n = k**L
    v = np.arange(n)
    head = k ** (L - 1)
    pred = np.arange(k)[None, :] * head + (v // k)[:, None]
    return pred, v % k


def max_plus_step(values: np.ndarray, pred: np.ndarray, weight: np.ndarray) -> np.ndarray:
    return np.max(values[pred] + weight, axis=1)


def karp_max_mean(pred: np.ndarray, weight: np.ndarray) -> float:
    """Maximum cycle mean (Karp), in two passes with ``O(n)`` memory."""
    n = pred.shape[0]
    d = np.zeros(n)
    for _ in range(n):
        d = max_plus_step(d, pred, weight)
    d_n = d
    best = np.full(n, np.inf)
    d = np.zeros(n)
    for k in range(n):
        best = np.minimum(best, (d_n - d) / (n - k))
        d = max_plus_step(d, pred, weight)
    return float(np.max(best))


def longest_potential(pred, weight, init, max_passes=None):
    """Least fixed point of ``h = max(init, max_pred h + weight)``.

    Returns ``None`` when the relaxation has not settled after ``n + 1``
    passes, which signals a positive cycle.
    """
    n = pred.shape[0]
    h = np.array(init, dtype=float)
    passes = n + 1 if max_passes is None else max_passes
    for _ in range(passes):
        nxt = np.maximum(h, max_plus_step(h, pred, weight))
        if np.array_equal(nxt, h):
            return h
        h = nxt
    return None


def critical_cycle(pred, weight, lam, h, tol):
    """A cycle made of edges tight for the potential ``h``.

    Deterministic: the cycle goes through the smallest node lying on any
    tight cycle and is the shortest such cycle, successors explored in
    increasing order.  Returns a list of nodes or ``None``.
    """
    n, d = pred.shape
    slack = h[pred] + (weight - lam) - h[:, None]
    tight = slack >= -tol
    src = pred[tight]
    dst = np.repeat(np.arange(n), d).reshape(n, d)[tight]
    if src.size == 0:
        return None
    graph = sp.csr_matrix((np.ones(src.size), (src, dst)), shape=(n, n))
    graph.sum_duplicates()
    _, labels = connected_components(graph, directed=True, connection="strong")
    sizes = np.bincount(labels, minlength=labels.max() + 1)
    self_loops = np.zeros(n, dtype=bool)
    self_loops[src[src == dst]] = True
    on_cycle = (sizes[labels] > 1) | self_loops
    if not on_cycle.any():
        return None
    start = int(np.flatnonzero(on_cycle)[0])
    if self_loops[start]:
        return [start]
    succ = [sorted(set(graph.indices[graph.indptr[u] : graph.indptr[u + 1]].tolist())) for u in range(n)]
    parent = {start: None}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in succ[u]:
            if v == start:
                cycle = [u]
                while parent[cycle[-1]] is not None:
                    cycle.append(parent[cycle[-1]])
                return cycle[::-1]
            if v not in parent and labels[v] == labels[start]:
                parent[v] = u
                queue.append(v)
    return None


def cycle_mean(cycle, pred, weight) -> float:
    """Mean weight of the closed walk ``cycle[0] -> cycle[1] -> ... -> cycle[0]``."""
    terms = []
    for i, v in enumerate(cycle):
        u = cycle[i - 1]
        j = int(np.flatnonzero(pred[v] == u)[0])
        terms.append(weight[v, j])
    return math.fsum(terms) / len(cycle)


def canonical_rotation(cycle: list[int]) -> list[int]:
    i = cycle.index(min(cycle))
    return cycle[i:] + cycle[:i]
