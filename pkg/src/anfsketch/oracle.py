"""Exact references computed by breadth-first search from every node."""

from __future__ import annotations

import time

import numpy as np
from numba import njit, prange

from .errors import BudgetExceeded, EmptyGraphError, ParameterError, UndefinedMetricError
from .graph import Graph
from .hyperball import BallTable, set_threads
from .metrics import DistanceDistribution

# sources handled between two budget checks
_CHUNK = 256


@njit(cache=True, nogil=True)
def _bfs_hist(offsets, targets, source, max_depth, dist, queue, hist):
    dist[source] = 0
    queue[0] = source
    hist[0] += 1
    head = 0
    tail = 1
    while head < tail:
        u = queue[head]
        head += 1
        du = dist[u]
        if du == max_depth:
            continue
        for e in range(offsets[u], offsets[u + 1]):
            w = targets[e]
            if dist[w] < 0:
                dist[w] = du + 1
                hist[du + 1] += 1
                queue[tail] = w
                tail += 1
    for i in range(tail):
        dist[queue[i]] = -1


@njit(cache=True)
def _levels_seq(offsets, targets, lo, hi, max_depth, out):
    n = offsets.shape[0] - 1
    dist = np.full(n, -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    for s in range(lo, hi):
        _bfs_hist(offsets, targets, s, max_depth, dist, queue, out[s - lo])


@njit(cache=True, parallel=True)
def _levels_par(offsets, targets, lo, hi, max_depth, out):
    n = offsets.shape[0] - 1
    for s in prange(lo, hi):
        dist = np.full(n, -1, dtype=np.int64)
        queue = np.empty(n, dtype=np.int64)
        _bfs_hist(offsets, targets, s, max_depth, dist, queue, out[s - lo])


@njit(cache=True)
def _hist_seq(offsets, targets, lo, hi, hist):
    n = offsets.shape[0] - 1
    dist = np.full(n, -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    for s in range(lo, hi):
        _bfs_hist(offsets, targets, s, n, dist, queue, hist)


@njit(cache=True, parallel=True)
def _hist_par(offsets, targets, lo, hi, parts, hist):
    n = offsets.shape[0] - 1
    span = hi - lo
    for p in prange(parts):
        dist = np.full(n, -1, dtype=np.int64)
        queue = np.empty(n, dtype=np.int64)
        a = lo + span * p // parts
        b = lo + span * (p + 1) // parts
        for s in range(a, b):
            _bfs_hist(offsets, targets, s, n, dist, queue, hist[p])


def _run_chunks(n: int, work, budget: float | None) -> None:
    started = time.perf_counter()
    for lo in range(0, n, _CHUNK):
        work(lo, min(n, lo + _CHUNK))
        elapsed = time.perf_counter() - started
        if budget is not None and elapsed > budget and lo + _CHUNK < n:
            raise BudgetExceeded(budget, elapsed)


class ExactBallTable(BallTable):
    """A :class:`BallTable` whose sizes are integer ball cardinalities."""

    def __init__(self, sizes: np.ndarray, **kwargs):
        sizes = np.asarray(sizes)
        if sizes.dtype.kind not in "iu":
            raise ParameterError("exact ball sizes must be integers")
        kwargs.setdefault("exact", True)
        super().__init__(sizes.astype(np.int64), **kwargs)


def bfs_balls(
    g: Graph,
    max_depth: int,
    parallel: bool = False,
    threads: int | None = None,
    budget: float | None = None,
) -> ExactBallTable:
    """``sizes[v, t] = |B(v, t)|`` for ``t = 0..max_depth`` by truncated BFS."""
    if g.n == 0:
        raise EmptyGraphError("cannot run BFS on an empty graph")
    if max_depth < 0:
        raise ParameterError(f"max_depth must be non-negative, got {max_depth}")
    if parallel:
        set_threads(threads)
    levels = np.zeros((g.n, max_depth + 1), dtype=np.int64)
    kernel = _levels_par if parallel else _levels_seq

    def work(lo, hi):
        kernel(g.offsets, g.targets, lo, hi, max_depth, levels[lo:hi])

    _run_chunks(g.n, work, budget)
    sizes = np.cumsum(levels, axis=1)
    converged = max_depth >= 1 and bool(np.array_equal(sizes[:, -1], sizes[:, -2]))
    return ExactBallTable(sizes, converged=converged, rounds=max_depth)


def distance_histogram(
    g: Graph,
    parallel: bool = False,
    threads: int | None = None,
    budget: float | None = None,
) -> np.ndarray:
    """``hist[d]`` = number of ordered pairs ``(u, v)`` at shortest distance ``d``.

    ``hist[0]`` counts the ``n`` self pairs; unreachable pairs are not counted.
    """
    if g.n == 0:
        raise EmptyGraphError("cannot run BFS on an empty graph")
    parts = set_threads(threads) if parallel else 1
    hist = np.zeros((parts, g.n + 1), dtype=np.int64)

    def work(lo, hi):
        if parallel:
            _hist_par(g.offsets, g.targets, lo, hi, parts, hist)
        else:
            _hist_seq(g.offsets, g.targets, lo, hi, hist[0])

    _run_chunks(g.n, work, budget)
    total = hist.sum(axis=0)
    last = np.flatnonzero(total)
    return total[: last[-1] + 1] if last.size else total[:1]


def exact_distance_distribution(g: Graph, **kwargs) -> DistanceDistribution:
    hist = distance_histogram(g, **kwargs).astype(np.float64)
    counts = hist.copy()
    counts[0] = 0.0
    return DistanceDistribution(counts=counts, n=g.n, exact=True)


def exact_average_path_length(g: Graph, **kwargs) -> float:
    """Mean shortest-path distance over all reachable ordered pairs ``u != v``."""
    hist = distance_histogram(g, **kwargs)
    pairs = int(hist[1:].sum())
    if pairs == 0:
        raise UndefinedMetricError("graph has no reachable pairs of distinct nodes")
    weighted = int((np.arange(hist.size, dtype=np.int64)[1:] * hist[1:]).sum())
    return weighted / pairs


def eccentricities(g: Graph) -> np.ndarray:
    """Largest finite BFS distance from each node."""
    sizes = bfs_balls(g, g.n).sizes
    return np.argmax(sizes == sizes[:, -1:], axis=1)


def diameter(g: Graph) -> int:
    return int(eccentricities(g).max()) if g.n else 0


def warm_up() -> None:
    from .graph import path_graph

    g = path_graph(3)
    for parallel in (False, True):
        bfs_balls(g, 2, parallel=parallel)
        distance_histogram(g, parallel=parallel)

