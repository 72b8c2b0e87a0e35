"""Compressed adjacency graphs, edge-list I/O and reference-graph generators."""

from __future__ import annotations

import gzip
import logging
import math
from dataclasses import dataclass, field
from os import PathLike
from typing import BinaryIO, Sequence, Union

import numpy as np

from .errors import CapacityError, EmptyGraphError, ParameterError, ParseError

log = logging.getLogger(__name__)

_GZIP_MAGIC = b"\x1f\x8b"

Source = Union[str, PathLike, bytes, BinaryIO]


@dataclass(frozen=True)
class LoadStats:
    lines: int = 0
    self_loops: int = 0
    duplicates: int = 0


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable CSR graph over dense ids ``0..n-1``.

    ``targets[offsets[v]:offsets[v + 1]]`` are the out-neighbours of ``v``,
    sorted ascending.  Undirected graphs store each edge as two arcs.
    """

    offsets: np.ndarray
    targets: np.ndarray
    directed: bool = False
    labels: tuple | None = None
    stats: LoadStats = field(default_factory=LoadStats)

    @classmethod
    def from_arcs(
        cls,
        n: int,
        sources,
        destinations,
        directed: bool = False,
        labels: Sequence | None = None,
        lines: int = 0,
    ) -> "Graph":
        """Build a graph from parallel arc arrays.

        Self-loops are dropped, duplicate arcs collapsed and, for undirected
        graphs, every arc mirrored.
        """
        if n < 0:
            raise ParameterError("node count must be non-negative")
        src = np.asarray(sources, dtype=np.int64).reshape(-1)
        dst = np.asarray(destinations, dtype=np.int64).reshape(-1)
        if src.shape != dst.shape:
            raise ParameterError("source and destination arrays differ in length")
        if src.size and (min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= n):
            raise ParameterError("arc endpoint outside [0, n)")
        loops = src == dst
        n_loops = int(loops.sum())
        src, dst = src[~loops], dst[~loops]
        if directed:
            codes = src * n + dst
            n_input = codes.size
        else:
            lo, hi = np.minimum(src, dst), np.maximum(src, dst)
            codes = lo * n + hi
            n_input = codes.size
        codes = np.unique(codes)
        n_dups = n_input - codes.size
        src, dst = np.divmod(codes, max(n, 1))
        if not directed:
            src, dst = np.concatenate([src, dst]), np.concatenate([dst, src])
            order = np.lexsort((dst, src))
            src, dst = src[order], dst[order]
        counts = np.bincount(src, minlength=n)
        offsets = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=offsets[1:])
        stats = LoadStats(lines=lines, self_loops=n_loops, duplicates=int(n_dups))
        if n_loops or n_dups:
            log.info("dropped %d self-loops and %d duplicate arcs", n_loops, n_dups)
        return cls(
            offsets=offsets,
            targets=dst.astype(np.int32 if n < 2**31 else np.int64),
            directed=bool(directed),
            labels=tuple(labels) if labels is not None else None,
            stats=stats,
        )

    @property
    def n(self) -> int:
        return self.offsets.size - 1

    @property
    def edge_count(self) -> int:
        """Number of stored arcs (twice the edge count when undirected)."""
        return int(self.offsets[-1])

    @property
    def num_edges(self) -> int:
        """Edges as a user counts them: arcs, or arc pairs when undirected."""
        return self.edge_count if self.directed else self.edge_count // 2

    @property
    def id_map(self) -> dict:
        labels = self.labels if self.labels is not None else range(self.n)
        return {label: i for i, label in enumerate(labels)}

    def label(self, v: int):
        return self.labels[v] if self.labels is not None else v

    def neighbours(self, v: int) -> np.ndarray:
        return self.targets[self.offsets[v]:self.offsets[v + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.offsets)

    def mean_degree(self) -> float:
        return self.edge_count / self.n if self.n else 0.0

    def arcs(self) -> tuple[np.ndarray, np.ndarray]:
        src = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees())
        return src, self.targets.astype(np.int64)

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Arcs for directed graphs; one ``(u, v)`` with ``u < v`` per edge otherwise."""
        src, dst = self.arcs()
        if self.directed:
            return src, dst
        keep = src < dst
        return src[keep], dst[keep]

    def relabel(self, permutation) -> "Graph":
        """Graph with node ``v`` renamed to ``permutation[v]``."""
        perm = np.asarray(permutation, dtype=np.int64)
        if perm.shape != (self.n,) or not np.array_equal(np.sort(perm), np.arange(self.n)):
            raise ParameterError("relabel needs a permutation of 0..n-1")
        src, dst = self.arcs()
        labels = None
        if self.labels is not None:
            labels = [None] * self.n
            for old, new in enumerate(perm):
                labels[new] = self.labels[old]
        return Graph.from_arcs(self.n, perm[src], perm[dst], self.directed, labels)

    def same_structure(self, other: "Graph") -> bool:
        return (
            self.directed == other.directed
            and np.array_equal(self.offsets, other.offsets)
            and np.array_equal(self.targets, other.targets)
        )

    def write_edge_list(self, target: Union[str, PathLike, BinaryIO]) -> None:
        """Write ``label label`` lines; reloading yields the same adjacency."""
        src, dst = self.edges()
        lab = self.labels
        if lab is None:
            text = "".join(f"{u} {v}\n" for u, v in zip(src.tolist(), dst.tolist()))
        else:
            text = "".join(f"{lab[u]} {lab[v]}\n" for u, v in zip(src.tolist(), dst.tolist()))
        data = text.encode()
        if hasattr(target, "write"):
            target.write(data)
        else:
            with open(target, "wb") as fh:
                fh.write(data)


def _read_source(source: Source) -> bytes:
    if isinstance(source, (bytes, bytearray, memoryview)):
        data = bytes(source)
    elif hasattr(source, "read"):
        data = source.read()
        if isinstance(data, str):
            data = data.encode()
    else:
        with open(source, "rb") as fh:
            data = fh.read()
    if data[:2] == _GZIP_MAGIC:
        data = gzip.decompress(data)
    return data


def _dense_labels(tokens: list[str]) -> tuple[list, np.ndarray]:
    """Map tokens to dense ids ordered by label value.

    Integer-looking labels sort numerically (and are returned as ints),
    anything else sorts lexically, so ids never depend on line order.
    """
    unique, inverse = np.unique(np.array(tokens), return_inverse=True)
    try:
        as_int = [int(t) for t in unique.tolist()]
    except ValueError:
        return unique.tolist(), inverse.astype(np.int64)
    if len(set(as_int)) != len(as_int):
        return unique.tolist(), inverse.astype(np.int64)
    order = sorted(range(len(as_int)), key=as_int.__getitem__)
    rank = np.empty(len(as_int), dtype=np.int64)
    rank[order] = np.arange(len(as_int))
    labels = [as_int[i] for i in order]
    return labels, rank[inverse]


def load_edge_list(source: Source, directed: bool = False) -> Graph:
    """Parse a whitespace-separated edge list (optionally gzip-compressed).

    Lines starting with ``#`` and blank lines are ignored; every other line
    must hold exactly two tokens.
    """
    text = _read_source(source).decode("utf-8")
    tokens: list[str] = []
    lines = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split()
        if len(parts) != 2:
            raise ParseError(f"expected 2 tokens, found {len(parts)}: {stripped[:60]!r}", lineno)
        tokens.extend(parts)
        lines += 1
    if not tokens:
        raise EmptyGraphError("edge list contains no edges")
    labels, ids = _dense_labels(tokens)
    return Graph.from_arcs(len(labels), ids[0::2], ids[1::2], directed, labels, lines=lines)


def _decode_pairs(index: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Invert the row-major enumeration of pairs ``i < j`` over ``n`` nodes."""
    k = index.astype(np.float64)
    i = (n - 2 - np.floor(np.sqrt(-8.0 * k + 4.0 * n * (n - 1) - 7.0) / 2.0 - 0.5)).astype(np.int64)
    # guard against float rounding at row boundaries
    def row_start(r):
        return r * (2 * n - r - 1) // 2
    i = np.where(row_start(i) > index, i - 1, i)
    i = np.where(row_start(i + 1) <= index, i + 1, i)
    j = index - row_start(i) + i + 1
    return i, j


# enumerating every pair is fine below this many pairs
_DENSE_PAIR_LIMIT = 20_000_000


def gnm_random(n: int, m: int, seed: int | None = 0) -> Graph:
    """Uniform simple undirected graph with ``n`` nodes and exactly ``m`` edges."""
    if n < 0 or m < 0:
        raise ParameterError("n and m must be non-negative")
    total = n * (n - 1) // 2
    if m > total:
        raise CapacityError(f"{m} edges requested but a simple graph on {n} nodes holds {total}")
    rng = np.random.default_rng(seed)
    if total <= _DENSE_PAIR_LIMIT or 2 * m > total:
        index = rng.choice(total, size=m, replace=False).astype(np.int64)
        src, dst = _decode_pairs(index, n)
    else:
        # sequential rejection sampling: keep first occurrence of each new pair
        codes = np.empty(0, dtype=np.int64)
        while codes.size < m:
            need = m - codes.size
            batch = int(need * 1.1) + 16
            u = rng.integers(0, n, size=batch)
            v = rng.integers(0, n, size=batch)
            ok = u != v
            fresh = np.minimum(u[ok], v[ok]) * n + np.maximum(u[ok], v[ok])
            merged = np.concatenate([codes, fresh])
            _, first = np.unique(merged, return_index=True)
            codes = merged[np.sort(first)][:m]
        src, dst = codes // n, codes % n
    return Graph.from_arcs(n, src, dst, directed=False)


def ring_lattice(n: int, k: int) -> Graph:
    """Ring where node ``i`` links to ``i +- 1 .. i +- k/2`` (mod n)."""
    if k % 2 or k < 0:
        raise ParameterError(f"lattice degree k must be even and non-negative, got {k}")
    if k >= n:
        raise ParameterError(f"lattice degree k={k} must be smaller than n={n}")
    base = np.arange(n, dtype=np.int64)
    src = np.tile(base, k // 2)
    dst = (src + np.repeat(np.arange(1, k // 2 + 1, dtype=np.int64), n)) % n
    return Graph.from_arcs(n, src, dst, directed=False)


def lattice_degree_for(g: Graph) -> int:
    """Even lattice degree closest to the mean degree of ``g``, clamped to ``[2, n-1]``."""
    k = 2 * int(math.floor(g.mean_degree() / 2.0 + 0.5))
    upper = g.n - 1 if (g.n - 1) % 2 == 0 else g.n - 2
    return max(2, min(k, upper))


def cycle_graph(n: int) -> Graph:
    return ring_lattice(n, 2)


def complete_graph(n: int) -> Graph:
    src, dst = np.triu_indices(n, k=1)
    return Graph.from_arcs(n, src, dst, directed=False)


def path_graph(n: int) -> Graph:
    base = np.arange(n - 1)
    return Graph.from_arcs(n, base, base + 1, directed=False)


def star_graph(leaves: int) -> Graph:
    return Graph.from_arcs(leaves + 1, np.zeros(leaves, dtype=np.int64), np.arange(1, leaves + 1), directed=False)
