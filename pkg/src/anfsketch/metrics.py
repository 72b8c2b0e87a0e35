"""Distance metrics read off a ball table, plus clustering and small-worldness."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from numba import njit

from .errors import UndefinedMetricError, UnsupportedMetricError
from .graph import Graph, gnm_random, lattice_degree_for, ring_lattice
from .hyperball import DEFAULT_MAX_DEPTH, BallTable, run_hyperball
from .sketch import DEFAULT_PRECISION


DEFAULT_SEED = 42
DEFAULT_RETRIES = 5


@dataclass
class DistanceDistribution:
    """Number of ordered pairs at each distance.

    ``counts[t]`` holds the (estimated) number of ordered pairs ``(u, v)``,
    ``u != v``, at distance exactly ``t``; ``counts[0]`` is always 0.
    """

    counts: np.ndarray
    n: int | None = None
    exact: bool = False

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.float64)
        if self.counts.size == 0:
            self.counts = np.zeros(1)

    @property
    def max_t(self) -> int:
        return self.counts.size - 1

    @property
    def total_pairs(self) -> float:
        return math.fsum(self.counts[1:])

    def mean(self) -> float:
        total = self.total_pairs
        if total <= 0:
            raise UndefinedMetricError("distance distribution holds no reachable pairs")
        t = np.arange(self.counts.size)
        return math.fsum(t * self.counts) / total

    def variance(self) -> float:
        mu = self.mean()
        t = np.arange(self.counts.size)
        return math.fsum((t[1:] - mu) ** 2 * self.counts[1:]) / self.total_pairs

    def probabilities(self) -> np.ndarray:
        total = self.total_pairs
        if total <= 0:
            raise UndefinedMetricError("distance distribution holds no reachable pairs")
        return self.counts / total

    def to_dict(self) -> dict:
        return {
            "counts": {str(t): float(c) for t, c in enumerate(self.counts) if t > 0},
            "total_pairs": self.total_pairs,
            "n": self.n,
            "exact": self.exact,
        }


def num_nodes_dist_from(bt: BallTable, v: int, t: int) -> float:
    """Estimated number of nodes at distance exactly ``t`` from ``v``.

    1 at ``t = 0`` and 0 from ``t = max_t`` onwards.
    """
    if not 0 <= v < bt.n:
        raise IndexError(f"node {v} out of range for {bt.n} nodes")
    if t == 0:
        return 1
    if t >= bt.max_t:
        return 0
    return bt.sizes[v, t] - bt.sizes[v, t - 1]


def _increments(bt: BallTable) -> np.ndarray:
    """``num_nodes_dist_from`` for every node and ``t = 1..max_t - 1``."""
    sizes = np.asarray(bt.sizes, dtype=np.float64)
    return sizes[:, 1:bt.max_t] - sizes[:, : bt.max_t - 1]


def distance_distribution(bt: BallTable) -> DistanceDistribution:
    counts = np.zeros(bt.max_t + 1)
    if bt.max_t >= 2:
        counts[1:bt.max_t] = _increments(bt).sum(axis=0)
    return DistanceDistribution(counts=counts, n=bt.n, exact=bt.exact)


def average_path_length(bt: BallTable) -> float:
    """Mean distance over the (estimated) reachable ordered pairs within ``max_t``."""
    return distance_distribution(bt).mean()


def dispersion_index(d: DistanceDistribution) -> float:
    """Variance-to-mean ratio of the distance distribution."""
    mu = d.mean()
    if mu == 0:
        raise UndefinedMetricError("distance distribution has zero mean")
    return d.variance() / mu


# --- clustering --------------------------------------------------------------


@njit(cache=True)
def _forward_triangles(n, fwd_offsets, fwd_targets):
    tri = np.zeros(n, dtype=np.int64)
    mark = np.full(n, -1, dtype=np.int64)
    for v in range(n):
        for e in range(fwd_offsets[v], fwd_offsets[v + 1]):
            mark[fwd_targets[e]] = v
        for e in range(fwd_offsets[v], fwd_offsets[v + 1]):
            u = fwd_targets[e]
            for f in range(fwd_offsets[u], fwd_offsets[u + 1]):
                w = fwd_targets[f]
                if mark[w] == v:
                    tri[v] += 1
                    tri[u] += 1
                    tri[w] += 1
    return tri


def triangles(g: Graph) -> np.ndarray:
    """Triangles through each node of an undirected graph."""
    if g.directed:
        raise UnsupportedMetricError("triangle counts need an undirected graph")
    deg = g.degrees()
    # orient every edge from lower to higher (degree, id) rank
    rank = np.empty(g.n, dtype=np.int64)
    rank[np.lexsort((np.arange(g.n), deg))] = np.arange(g.n)
    src, dst = g.arcs()
    keep = rank[dst] > rank[src]
    src, dst = src[keep], dst[keep]
    offsets = np.zeros(g.n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=g.n), out=offsets[1:])
    return _forward_triangles(g.n, offsets, dst)


def local_clustering(g: Graph) -> np.ndarray:
    deg = g.degrees().astype(np.float64)
    tri = triangles(g).astype(np.float64)
    pairs = deg * (deg - 1) / 2
    out = np.zeros(g.n)
    np.divide(tri, pairs, out=out, where=pairs > 0)
    return out


def avg_clustering(g: Graph) -> float:
    """Mean local clustering coefficient; nodes of degree < 2 count as 0."""
    if g.directed:
        raise UnsupportedMetricError("average clustering is defined here for undirected graphs only")
    if g.n == 0:
        raise UndefinedMetricError("average clustering of an empty graph")
    return math.fsum(local_clustering(g)) / g.n


# --- small world -------------------------------------------------------------


@dataclass
class SmallWorldReport:
    """``omega = l - c`` with ``l = APL(random) / APL(G)`` and ``c = C(G) / C(lattice)``."""

    l: float
    c: float
    omega: float
    apl_input: float
    apl_random: float
    clustering_input: float
    clustering_lattice: float
    random_seed: int
    lattice_k: int
    n: int
    edges: int
    precision: int | None
    max_depth: int
    mode: str
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _ball_apl(g: Graph, precision: int, max_depth: int, mode: str, seed: int, threads: int | None) -> float:
    bt = run_hyperball(g, precision=precision, max_depth=max_depth, mode=mode, seed=seed, threads=threads)
    return average_path_length(bt)


def small_world_coefficient(
    g: Graph,
    precision: int = DEFAULT_PRECISION,
    max_depth: int = DEFAULT_MAX_DEPTH,
    seed: int = DEFAULT_SEED,
    mode: str = "estimate",
    threads: int | None = 1,
    retries: int = DEFAULT_RETRIES,
) -> SmallWorldReport:
    """Compare ``g`` with a G(n, m) random graph and an even-degree ring lattice.

    The random graph is drawn with ``seed``; if it has no reachable pairs the
    draw is repeated with ``seed + 1``, ``seed + 2``, ... up to ``retries``
    times.  The lattice degree is the even integer closest to the mean degree.
    """
    if g.directed:
        raise UnsupportedMetricError("small-world coefficient needs an undirected graph")
    if g.n < 3:
        raise UndefinedMetricError("small-world coefficient needs at least 3 nodes")
    notes: list[str] = []
    apl_g = _ball_apl(g, precision, max_depth, mode, seed, threads)

    apl_r = None
    for attempt in range(retries + 1):
        r_seed = seed + attempt
        r = gnm_random(g.n, g.num_edges, r_seed)
        try:
            apl_r = _ball_apl(r, precision, max_depth, mode, seed, threads)
            break
        except UndefinedMetricError:
            notes.append(f"random graph with seed {r_seed} had no reachable pairs; redrawn")
    if apl_r is None:
        raise UndefinedMetricError(f"no usable random reference graph after {retries + 1} draws")

    k = lattice_degree_for(g)
    c_g = avg_clustering(g)
    c_l = avg_clustering(ring_lattice(g.n, k))
    if c_l > 0:
        c = c_g / c_l
    else:
        c = 0.0
        msg = f"lattice with k={k} has zero clustering; clustering ratio set to 0"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes.append(msg)
    notes.append(f"lattice degree k={k} is the even integer nearest the mean degree {g.mean_degree():.3f}")
    l_ratio = apl_r / apl_g
    return SmallWorldReport(
        l=l_ratio,
        c=c,
        omega=l_ratio - c,
        apl_input=apl_g,
        apl_random=apl_r,
        clustering_input=c_g,
        clustering_lattice=c_l,
        random_seed=r_seed,
        lattice_k=k,
        n=g.n,
        edges=g.num_edges,
        precision=None if mode == "exact" else precision,
        max_depth=max_depth,
        mode=mode,
        notes=notes,
    )
