"""HyperBall: per-node HyperLogLog counters grown one hop per round.

Round ``t`` replaces every counter ``c[v]`` by the union of ``c[v]`` with the
counters of its out-neighbours, so after ``t`` rounds ``c[v]`` summarises the
ball ``B(v, t)``.  Two buffers are kept: a round reads only the previous one
and writes only the next, which makes rows independent and lets node ranges
run in parallel.

``mode="exact"`` swaps the HLL registers for explicit node bitsets; the round
structure is identical, which makes it a drop-in oracle on small graphs.
"""

from __future__ import annotations

import json
import logging
import struct
import time
from dataclasses import dataclass, field
from os import PathLike
from pathlib import Path
from typing import BinaryIO, Union

import numba
import numpy as np
from numba import njit, prange

from .errors import BudgetExceeded, EmptyGraphError, FormatError, ParameterError
from .graph import Graph
from .sketch import (
    DEFAULT_PRECISION,
    _POW2_NEG,
    check_precision,
    estimate_from_stats,
    register_updates,
)

log = logging.getLogger(__name__)

# the bundled TBB is too old for numba; prefer layers that work everywhere
numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

MODES = ("estimate", "exact")
DEFAULT_MAX_DEPTH = 10


# --- kernels -----------------------------------------------------------------


@njit(cache=True, nogil=True)
def _max_into(v, offsets, targets, cur, nxt):
    row = nxt[v]
    own = cur[v]
    m = row.shape[0]
    for i in range(m):
        row[i] = own[i]
    for e in range(offsets[v], offsets[v + 1]):
        src = cur[targets[e]]
        for i in range(m):
            if src[i] > row[i]:
                row[i] = src[i]
    for i in range(m):
        if row[i] != own[i]:
            return True
    return False


@njit(cache=True, nogil=True)
def _or_into(v, offsets, targets, cur, nxt):
    row = nxt[v]
    own = cur[v]
    m = row.shape[0]
    for i in range(m):
        row[i] = own[i]
    for e in range(offsets[v], offsets[v + 1]):
        src = cur[targets[e]]
        for i in range(m):
            row[i] |= src[i]
    for i in range(m):
        if row[i] != own[i]:
            return True
    return False


@njit(cache=True)
def _max_round_seq(offsets, targets, cur, nxt, changed):
    for v in range(cur.shape[0]):
        changed[v] = _max_into(v, offsets, targets, cur, nxt)


@njit(cache=True, parallel=True)
def _max_round_par(offsets, targets, cur, nxt, changed):
    for v in prange(cur.shape[0]):
        changed[v] = _max_into(v, offsets, targets, cur, nxt)


@njit(cache=True)
def _or_round_seq(offsets, targets, cur, nxt, changed):
    for v in range(cur.shape[0]):
        changed[v] = _or_into(v, offsets, targets, cur, nxt)


@njit(cache=True, parallel=True)
def _or_round_par(offsets, targets, cur, nxt, changed):
    for v in prange(cur.shape[0]):
        changed[v] = _or_into(v, offsets, targets, cur, nxt)


@njit(cache=True, nogil=True)
def _row_stats(row, pow_table):
    z = 0.0
    zeros = 0
    for i in range(row.shape[0]):
        r = row[i]
        z += pow_table[r]
        if r == 0:
            zeros += 1
    return z, zeros


@njit(cache=True)
def _register_stats_seq(regs, pow_table, z, zeros):
    for v in range(regs.shape[0]):
        z[v], zeros[v] = _row_stats(regs[v], pow_table)


@njit(cache=True, parallel=True)
def _register_stats_par(regs, pow_table, z, zeros):
    for v in prange(regs.shape[0]):
        z[v], zeros[v] = _row_stats(regs[v], pow_table)


@njit(cache=True, nogil=True)
def _popcount_row(row):
    total = 0
    for i in range(row.shape[0]):
        x = row[i]
        x = x - ((x >> np.uint64(1)) & np.uint64(0x5555555555555555))
        x = (x & np.uint64(0x3333333333333333)) + ((x >> np.uint64(2)) & np.uint64(0x3333333333333333))
        x = (x + (x >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
        total += np.int64((x * np.uint64(0x0101010101010101)) >> np.uint64(56))
    return total


@njit(cache=True, parallel=True)
def _popcounts(bits, out):
    for v in prange(bits.shape[0]):
        out[v] = _popcount_row(bits[v])


# --- counters ----------------------------------------------------------------


def init_counters(n: int, precision: int = DEFAULT_PRECISION, seed: int = 0) -> np.ndarray:
    """One HLL counter per node holding just the node's own id: shape ``(n, 2**p)``."""
    precision = check_precision(precision)
    regs = np.zeros((n, 1 << precision), dtype=np.uint8)
    index, rank = register_updates(np.arange(n, dtype=np.uint64), precision, seed)
    regs[np.arange(n), index] = rank
    return regs


def init_bitsets(n: int) -> np.ndarray:
    """One explicit node set per node, ``{v}``, packed 64 ids per word."""
    words = max(1, (n + 63) // 64)
    bits = np.zeros((n, words), dtype=np.uint64)
    ids = np.arange(n)
    bits[ids, ids >> 6] = np.left_shift(np.uint64(1), (ids & 63).astype(np.uint64))
    return bits


def counter_union_round(
    current: np.ndarray,
    g: Graph,
    out: np.ndarray | None = None,
    parallel: bool = False,
) -> tuple[np.ndarray, bool]:
    """One neighbour-union round; returns ``(next, changed)``.

    ``current`` is either a ``uint8`` register matrix (union = element-wise
    max) or a ``uint64`` bitset matrix (union = bitwise or).  ``current`` is
    never written.
    """
    if current.shape[0] != g.n:
        raise ParameterError(f"{current.shape[0]} counters for a graph with {g.n} nodes")
    nxt = np.empty_like(current) if out is None else out
    changed = np.zeros(g.n, dtype=np.bool_)
    if current.dtype == np.uint8:
        kernel = _max_round_par if parallel else _max_round_seq
    elif current.dtype == np.uint64:
        kernel = _or_round_par if parallel else _or_round_seq
    else:
        raise ParameterError(f"unsupported counter dtype {current.dtype}")
    kernel(g.offsets, g.targets, current, nxt, changed)
    return nxt, bool(changed.any())


def counter_sizes(counters: np.ndarray, parallel: bool = False) -> np.ndarray:
    """Ball sizes held by a counter matrix: estimates for registers, exact for bitsets."""
    n = counters.shape[0]
    if counters.dtype == np.uint64:
        out = np.empty(n, dtype=np.int64)
        _popcounts(counters, out)
        return out
    z = np.empty(n, dtype=np.float64)
    zeros = np.empty(n, dtype=np.int64)
    (_register_stats_par if parallel else _register_stats_seq)(counters, _POW2_NEG, z, zeros)
    return estimate_from_stats(z, zeros, counters.shape[1])


# --- ball table --------------------------------------------------------------

_BIN_MAGIC = b"ANFB"
_BIN_VERSION = 1
_BIN_HEADER = struct.Struct("<4sHHQIQ")


@dataclass(eq=False)
class BallTable:
    """Per-node ball sizes ``sizes[v, t] ~ |B(v, t)|`` for ``t = 0..max_t``."""

    sizes: np.ndarray
    exact: bool = False
    converged: bool = False
    precision: int | None = None
    seed: int | None = None
    rounds: int = field(default=0)

    @property
    def n(self) -> int:
        return self.sizes.shape[0]

    @property
    def max_t(self) -> int:
        return self.sizes.shape[1] - 1

    def aggregate(self) -> np.ndarray:
        """``sum_v sizes[v, t]`` for each ``t``."""
        return self.sizes.sum(axis=0)

    def padded(self, depth: int) -> "BallTable":
        """Extend to ``max_t = depth`` by repeating the last column.

        Only meaningful once the balls have stopped growing.
        """
        if depth <= self.max_t:
            return self
        extra = np.repeat(self.sizes[:, -1:], depth - self.max_t, axis=1)
        return BallTable(
            np.hstack([self.sizes, extra]), self.exact, self.converged, self.precision, self.seed, self.rounds
        )

    def metadata(self) -> dict:
        return {
            "exact": self.exact,
            "converged": self.converged,
            "precision": self.precision,
            "seed": self.seed,
            "rounds": self.rounds,
        }

    def _format(self, x) -> str:
        return str(int(x)) if self.exact else repr(float(x))

    def to_csv(self, target: Union[str, PathLike, BinaryIO], header: dict | None = None) -> None:
        """Write ``node,t,ball_size`` rows, preceded by ``# key: json`` comment lines."""
        lines = [f"# {k}: {json.dumps(v, sort_keys=True)}\n" for k, v in (header or {}).items()]
        lines.append("node,t,ball_size\n")
        fmt = self._format
        for v in range(self.n):
            row = self.sizes[v]
            lines.extend(f"{v},{t},{fmt(row[t])}\n" for t in range(row.shape[0]))
        _write(target, "".join(lines).encode())

    @classmethod
    def read_csv(cls, source: Union[str, PathLike, BinaryIO], exact: bool | None = None) -> "BallTable":
        data = _read(source).decode()
        rows = [ln for ln in data.splitlines() if ln and not ln.startswith("#")]
        if not rows or rows[0] != "node,t,ball_size":
            raise FormatError("missing node,t,ball_size header")
        body = np.array([r.split(",") for r in rows[1:]], dtype=np.float64).reshape(-1, 3)
        n = int(body[:, 0].max()) + 1 if body.size else 0
        cols = int(body[:, 1].max()) + 1 if body.size else 0
        sizes = np.zeros((n, cols))
        sizes[body[:, 0].astype(int), body[:, 1].astype(int)] = body[:, 2]
        if exact is None:
            exact = bool(np.all(sizes == np.round(sizes)))
        return cls(sizes.astype(np.int64) if exact else sizes, exact=exact)

    def to_bytes(self, header: dict | None = None) -> bytes:
        """Binary dump: fixed header, JSON metadata, row-major little-endian float64 matrix."""
        meta = json.dumps({**self.metadata(), **(header or {})}, sort_keys=True).encode()
        flags = (1 if self.exact else 0) | (2 if self.converged else 0)
        head = _BIN_HEADER.pack(_BIN_MAGIC, _BIN_VERSION, flags, self.n, self.sizes.shape[1], len(meta))
        body = np.ascontiguousarray(self.sizes, dtype="<f8").tobytes()
        return head + meta + body

    @classmethod
    def from_bytes(cls, data: bytes) -> "BallTable":
        if len(data) < _BIN_HEADER.size:
            raise FormatError("ball table shorter than header")
        magic, version, flags, n, cols, meta_len = _BIN_HEADER.unpack_from(data)
        if magic != _BIN_MAGIC or version != _BIN_VERSION:
            raise FormatError(f"not a ball table dump (magic={magic!r}, version={version})")
        pos = _BIN_HEADER.size
        meta = json.loads(data[pos:pos + meta_len].decode())
        pos += meta_len
        if len(data) - pos != 8 * n * cols:
            raise FormatError("ball table body has the wrong length")
        sizes = np.frombuffer(data, dtype="<f8", offset=pos).reshape(n, cols).astype(np.float64)
        exact = bool(flags & 1)
        return cls(
            sizes.astype(np.int64) if exact else sizes,
            exact=exact,
            converged=bool(flags & 2),
            precision=meta.get("precision"),
            seed=meta.get("seed"),
            rounds=meta.get("rounds", 0),
        )

    def save(self, path: Union[str, PathLike], header: dict | None = None) -> None:
        _write(path, self.to_bytes(header))

    @classmethod
    def load(cls, path: Union[str, PathLike]) -> "BallTable":
        return cls.from_bytes(_read(path))

    def __eq__(self, other) -> bool:
        if not isinstance(other, BallTable):
            return NotImplemented
        return self.sizes.shape == other.sizes.shape and np.array_equal(self.sizes, other.sizes)

    __hash__ = None


def _write(target, data: bytes) -> None:
    if hasattr(target, "write"):
        target.write(data)
    else:
        with open(target, "wb") as fh:
            fh.write(data)


def _read(source) -> bytes:
    if hasattr(source, "read"):
        return source.read()
    with open(source, "rb") as fh:
        return fh.read()


# --- driver ------------------------------------------------------------------


def set_threads(threads: int | None) -> int:
    """Clamp and apply the numba worker count; returns the count in effect."""
    limit = numba.config.NUMBA_NUM_THREADS
    count = limit if threads is None else max(1, min(int(threads), limit))
    numba.set_num_threads(count)
    return count


def run_hyperball(
    g: Graph,
    precision: int = DEFAULT_PRECISION,
    max_depth: int = DEFAULT_MAX_DEPTH,
    mode: str = "estimate",
    seed: int = 0,
    threads: int | None = 1,
    spill_dir: Union[str, PathLike, None] = None,
    budget: float | None = None,
) -> BallTable:
    """Estimate ``|B(v, t)|`` for every node and ``t = 0..max_t``.

    Rounds run until ``max_depth`` or until a round changes no counter; that
    unchanged round is still recorded, so a converged table ends with two equal
    columns.  Estimated sizes are clamped to their running maximum over ``t``.
    ``threads=1`` uses the sequential kernels; anything else the parallel ones.
    """
    if mode not in MODES:
        raise ParameterError(f"mode must be one of {MODES}, got {mode!r}")
    if g.n == 0:
        raise EmptyGraphError("cannot run HyperBall on an empty graph")
    if max_depth < 1:
        raise ParameterError(f"max_depth must be at least 1, got {max_depth}")
    exact = mode == "exact"
    if not exact:
        precision = check_precision(precision)
    parallel = threads != 1
    if parallel:
        set_threads(threads)
    started = time.perf_counter()

    cur = init_bitsets(g.n) if exact else init_counters(g.n, precision, seed)
    log.debug("hyperball: %d nodes, %.1f MiB per counter buffer", g.n, cur.nbytes / 2**20)
    nxt = np.empty_like(cur)
    columns = [counter_sizes(cur, parallel)]
    spill = Path(spill_dir) if spill_dir is not None else None
    if spill is not None:
        spill.mkdir(parents=True, exist_ok=True)

    converged = False
    rounds = 0
    for t in range(1, max_depth + 1):
        nxt, changed = counter_union_round(cur, g, out=nxt, parallel=parallel)
        cur, nxt = nxt, cur
        rounds = t
        columns.append(counter_sizes(cur, parallel))
        if spill is not None:
            np.save(spill / f"round_{t:03d}.npy", cur)
        log.debug("round %d: changed=%s", t, changed)
        if not changed:
            converged = True
            break
        if budget is not None and time.perf_counter() - started > budget:
            raise BudgetExceeded(budget, time.perf_counter() - started)

    sizes = np.column_stack(columns)
    if not exact:
        sizes = np.maximum.accumulate(sizes, axis=1)
    return BallTable(
        sizes,
        exact=exact,
        converged=converged,
        precision=None if exact else precision,
        seed=None if exact else seed,
        rounds=rounds,
    )


def warm_up() -> None:
    """Compile every kernel on a toy graph so timings exclude JIT cost."""
    from .graph import path_graph

    g = path_graph(3)
    for mode in MODES:
        for threads in (1, None):
            run_hyperball(g, precision=4, max_depth=2, mode=mode, threads=threads)
