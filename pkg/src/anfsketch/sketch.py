"""HyperLogLog counters, MinHash signatures and the combined intersection sketch.

Hash layout: every element id is mixed to 64 bits; the top ``p`` bits pick a
register and the remaining ``64 - p`` bits give the rank, i.e. the position of
their leftmost 1-bit (leading zeros + 1).  Registers start at 0 and are one byte
wide, so the largest storable rank is ``64 - p + 1 <= 61``.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from os import PathLike
from typing import BinaryIO, Iterable, Union

import numpy as np
from numba import njit

from ._hashing import UINT64_MAX, as_items, bit_length, derive_keys, hash64
from .errors import ConfigurationError, FormatError, ParameterError

MIN_PRECISION = 4
MAX_PRECISION = 18
REGISTER_WIDTH = 8
DEFAULT_PRECISION = 14
DEFAULT_MINHASH_K = 1024

# 2**-r for every storable register value; indexing this beats np.exp2 per call.
_POW2_NEG = np.ldexp(1.0, -np.arange(66))

Items = Union[int, Iterable[int], np.ndarray]


def alpha(m: int) -> float:
    """Bias constant of the raw harmonic-mean estimate for ``m`` registers."""
    if m == 16:
        return 0.673
    if m == 32:
        return 0.697
    if m == 64:
        return 0.709
    return 0.7213 / (1.0 + 1.079 / m)


def relative_error(precision: int) -> float:
    """Asymptotic relative standard deviation ``1.06 / sqrt(m)``."""
    return 1.06 / math.sqrt(1 << precision)


def check_precision(precision: int) -> int:
    if not isinstance(precision, (int, np.integer)) or not MIN_PRECISION <= precision <= MAX_PRECISION:
        raise ParameterError(
            f"precision must be an integer in [{MIN_PRECISION}, {MAX_PRECISION}], got {precision!r}"
        )
    return int(precision)


def register_updates(items: Items, precision: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Register index and rank for each item.

    Returns ``(index, rank)`` as ``int64`` and ``uint8`` arrays.
    """
    h = hash64(as_items(items), seed)
    rest_bits = 64 - precision
    index = (h >> np.uint64(rest_bits)).astype(np.int64)
    rest = h & np.uint64((1 << rest_bits) - 1)
    rank = rest_bits - bit_length(rest) + 1
    return index, rank.astype(np.uint8)


@dataclass(frozen=True)
class BiasCorrection:
    """Empirical bias tables for small-range estimates.

    ``raw_estimates`` and ``biases`` are parallel arrays measured for a single
    precision; the bias of a raw estimate is the mean bias of its ``neighbours``
    nearest table entries.  Linear counting is preferred while it stays below
    ``threshold``.
    """

    precision: int
    raw_estimates: np.ndarray
    biases: np.ndarray
    threshold: float
    neighbours: int = 6

    def __post_init__(self):
        raw = np.asarray(self.raw_estimates, dtype=np.float64)
        bias = np.asarray(self.biases, dtype=np.float64)
        if raw.ndim != 1 or raw.shape != bias.shape or raw.size == 0:
            raise ParameterError("bias tables must be non-empty 1-D arrays of equal length")
        object.__setattr__(self, "raw_estimates", raw)
        object.__setattr__(self, "biases", bias)

    def bias(self, estimates: np.ndarray) -> np.ndarray:
        estimates = np.atleast_1d(np.asarray(estimates, dtype=np.float64))
        k = min(self.neighbours, self.raw_estimates.size)
        dist = np.abs(estimates[:, None] - self.raw_estimates[None, :])
        nearest = np.argpartition(dist, k - 1, axis=1)[:, :k]
        return self.biases[nearest].mean(axis=1)


def estimate_from_stats(
    harmonic_sum: np.ndarray,
    zeros: np.ndarray,
    m: int,
    bias: BiasCorrection | None = None,
) -> np.ndarray:
    """Cardinality estimates from per-counter ``sum(2**-M[i])`` and zero counts.

    Without ``bias`` this is the classic rule: the raw estimate
    ``alpha_m * m**2 / Z``, replaced by linear counting ``m * ln(m / V)`` when the
    raw estimate is at most ``5m/2`` and ``V > 0`` registers are still zero.
    """
    z = np.atleast_1d(np.asarray(harmonic_sum, dtype=np.float64))
    v = np.atleast_1d(np.asarray(zeros, dtype=np.float64))
    shape = np.shape(harmonic_sum)
    raw = alpha(m) * m * m / z
    with np.errstate(divide="ignore"):
        linear = m * np.log(m / v)
    if bias is None:
        use_linear = (raw <= 2.5 * m) & (v > 0)
        return np.where(use_linear, linear, raw).reshape(shape)
    if (1 << bias.precision) != m:
        raise ConfigurationError(f"bias tables are for m={1 << bias.precision}, counter has m={m}")
    corrected = raw.copy()
    small = raw <= 5 * m
    if np.any(small):
        corrected[small] = raw[small] - bias.bias(raw[small])
    use_linear = (v > 0) & (linear <= bias.threshold)
    return np.where(use_linear, linear, corrected).reshape(shape)


def estimate_registers(registers: np.ndarray, bias: BiasCorrection | None = None) -> np.ndarray:
    """Estimate every counter held in the last axis of ``registers``."""
    regs = np.asarray(registers)
    m = regs.shape[-1]
    z = _POW2_NEG[regs].sum(axis=-1)
    v = np.count_nonzero(regs == 0, axis=-1)
    return estimate_from_stats(z, v, m, bias)


@dataclass(eq=False)
class HllCounter:
    """A HyperLogLog counter with ``2**precision`` one-byte registers."""

    precision: int = DEFAULT_PRECISION
    seed: int = 0
    registers: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.precision = check_precision(self.precision)
        self.seed = int(self.seed) & 0xFFFFFFFFFFFFFFFF
        m = 1 << self.precision
        if self.registers is None:
            self.registers = np.zeros(m, dtype=np.uint8)
            return
        regs = np.asarray(self.registers)
        if regs.shape != (m,):
            raise ConfigurationError(f"expected {m} registers, got shape {regs.shape}")
        if regs.size and int(regs.max()) > 64 - self.precision + 1:
            raise ConfigurationError("register value exceeds 64 - p + 1")
        self.registers = np.ascontiguousarray(regs, dtype=np.uint8)

    @property
    def m(self) -> int:
        return 1 << self.precision

    def add(self, items: Items) -> "HllCounter":
        """Add one id or a batch of ids; returns ``self``."""
        index, rank = register_updates(items, self.precision, self.seed)
        np.maximum.at(self.registers, index, rank)
        return self

    def count(self, bias: BiasCorrection | None = None) -> float:
        return float(estimate_registers(self.registers, bias))

    def __len__(self) -> int:
        return int(round(self.count()))

    def is_compatible(self, other: "HllCounter") -> bool:
        return self.precision == other.precision and self.seed == other.seed

    def _check(self, other: "HllCounter") -> None:
        if not isinstance(other, HllCounter):
            raise ConfigurationError(f"cannot combine HllCounter with {type(other).__name__}")
        if not self.is_compatible(other):
            raise ConfigurationError(
                f"incompatible counters: p={self.precision}/seed={self.seed} "
                f"vs p={other.precision}/seed={other.seed}"
            )

    def union(self, other: "HllCounter") -> "HllCounter":
        self._check(other)
        return HllCounter(self.precision, self.seed, np.maximum(self.registers, other.registers))

    def merge(self, other: "HllCounter") -> "HllCounter":
        """In-place union; returns ``self``."""
        self._check(other)
        np.maximum(self.registers, other.registers, out=self.registers)
        return self

    __or__ = union

    def copy(self) -> "HllCounter":
        return HllCounter(self.precision, self.seed, self.registers.copy())

    def __eq__(self, other) -> bool:
        if not isinstance(other, HllCounter):
            return NotImplemented
        return self.is_compatible(other) and np.array_equal(self.registers, other.registers)

    __hash__ = None


_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


@njit(cache=True, nogil=True)
def _minhash_update(items, keys, values):
    # slot i hashes x to splitmix64(x ^ keys[i])
    for j in range(items.shape[0]):
        x = items[j]
        for i in range(keys.shape[0]):
            z = (x ^ keys[i]) + _GAMMA
            z = (z ^ (z >> np.uint64(30))) * _MIX1
            z = (z ^ (z >> np.uint64(27))) * _MIX2
            z = z ^ (z >> np.uint64(31))
            if z < values[i]:
                values[i] = z


@dataclass(eq=False)
class MinHashSignature:
    """``k`` slot-wise minima under ``k`` independently keyed hash functions."""

    k: int = DEFAULT_MINHASH_K
    family_seed: int = 0
    values: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if not isinstance(self.k, (int, np.integer)) or self.k < 1:
            raise ParameterError(f"k must be a positive integer, got {self.k!r}")
        self.k = int(self.k)
        self.family_seed = int(self.family_seed) & 0xFFFFFFFFFFFFFFFF
        if self.values is None:
            self.values = np.full(self.k, UINT64_MAX, dtype=np.uint64)
        else:
            vals = np.asarray(self.values)
            if vals.shape != (self.k,):
                raise ConfigurationError(f"expected {self.k} slots, got shape {vals.shape}")
            self.values = np.ascontiguousarray(vals, dtype=np.uint64)
        self._keys = derive_keys(self.family_seed, self.k)

    @property
    def keys(self) -> np.ndarray:
        """Per-slot hash keys derived from ``family_seed``."""
        return self._keys

    def add(self, items: Items) -> "MinHashSignature":
        _minhash_update(as_items(items), self._keys, self.values)
        return self

    def is_empty(self) -> bool:
        return bool(np.all(self.values == UINT64_MAX))

    def is_compatible(self, other: "MinHashSignature") -> bool:
        return self.k == other.k and self.family_seed == other.family_seed

    def _check(self, other: "MinHashSignature") -> None:
        if not isinstance(other, MinHashSignature):
            raise ConfigurationError(f"cannot combine MinHashSignature with {type(other).__name__}")
        if not self.is_compatible(other):
            raise ConfigurationError(
                f"incompatible signatures: k={self.k}/seed={self.family_seed} "
                f"vs k={other.k}/seed={other.family_seed}"
            )

    def jaccard(self, other: "MinHashSignature") -> float:
        """Fraction of slots on which the two signatures agree."""
        self._check(other)
        return np.count_nonzero(self.values == other.values) / self.k

    def union(self, other: "MinHashSignature") -> "MinHashSignature":
        self._check(other)
        return MinHashSignature(self.k, self.family_seed, np.minimum(self.values, other.values))

    def merge(self, other: "MinHashSignature") -> "MinHashSignature":
        self._check(other)
        np.minimum(self.values, other.values, out=self.values)
        return self

    def copy(self) -> "MinHashSignature":
        return MinHashSignature(self.k, self.family_seed, self.values.copy())

    def __eq__(self, other) -> bool:
        if not isinstance(other, MinHashSignature):
            return NotImplemented
        return self.is_compatible(other) and np.array_equal(self.values, other.values)

    __hash__ = None


@dataclass(eq=False)
class NeighbourhoodSketch:
    """An HLL counter and a MinHash signature fed the same elements.

    Always mutate through :meth:`add` so both halves stay in step.
    """

    hll: HllCounter
    minhash: MinHashSignature

    @classmethod
    def empty(
        cls,
        precision: int = DEFAULT_PRECISION,
        k: int = DEFAULT_MINHASH_K,
        seed: int = 0,
        family_seed: int | None = None,
    ) -> "NeighbourhoodSketch":
        fam = seed if family_seed is None else family_seed
        return cls(HllCounter(precision, seed), MinHashSignature(k, fam))

    @classmethod
    def of(cls, items: Items, **config) -> "NeighbourhoodSketch":
        return cls.empty(**config).add(items)

    def add(self, items: Items) -> "NeighbourhoodSketch":
        arr = as_items(items)
        self.hll.add(arr)
        self.minhash.add(arr)
        return self

    def count(self) -> float:
        return self.hll.count()

    def union(self, other: "NeighbourhoodSketch") -> "NeighbourhoodSketch":
        return NeighbourhoodSketch(self.hll.union(other.hll), self.minhash.union(other.minhash))

    def jaccard(self, other: "NeighbourhoodSketch") -> float:
        return self.minhash.jaccard(other.minhash)

    def __eq__(self, other) -> bool:
        if not isinstance(other, NeighbourhoodSketch):
            return NotImplemented
        return self.hll == other.hll and self.minhash == other.minhash

    __hash__ = None


def estimate_intersection(a: NeighbourhoodSketch, b: NeighbourhoodSketch) -> float:
    """Estimate ``|A & B|`` as ``jaccard(A, B) * |A | B|``.

    The Jaccard factor comes from MinHash slot agreement and the union size
    from the register-wise maximum of the two HLL counters.
    """
    j = a.minhash.jaccard(b.minhash)
    return j * a.hll.union(b.hll).count()


# --- binary format -----------------------------------------------------------

MAGIC = b"ANFS"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHHBBHIQQ")
_HAS_HLL = 1
_HAS_MINHASH = 2

Sketch = Union[HllCounter, MinHashSignature, NeighbourhoodSketch]


def dumps(sketch: Sketch) -> bytes:
    """Serialize a sketch to bytes: 32-byte header, then raw little-endian arrays."""
    hll = minhash = None
    if isinstance(sketch, NeighbourhoodSketch):
        hll, minhash = sketch.hll, sketch.minhash
    elif isinstance(sketch, HllCounter):
        hll = sketch
    elif isinstance(sketch, MinHashSignature):
        minhash = sketch
    else:
        raise TypeError(f"not a sketch: {type(sketch).__name__}")
    flags = (_HAS_HLL if hll is not None else 0) | (_HAS_MINHASH if minhash is not None else 0)
    header = _HEADER.pack(
        MAGIC,
        FORMAT_VERSION,
        flags,
        hll.precision if hll is not None else 0,
        REGISTER_WIDTH if hll is not None else 0,
        0,
        minhash.k if minhash is not None else 0,
        hll.seed if hll is not None else 0,
        minhash.family_seed if minhash is not None else 0,
    )
    parts = [header]
    if hll is not None:
        parts.append(hll.registers.tobytes())
    if minhash is not None:
        parts.append(minhash.values.astype("<u8").tobytes())
    return b"".join(parts)


def loads(data: bytes) -> Sketch:
    if len(data) < _HEADER.size:
        raise FormatError("sketch data shorter than header")
    magic, version, flags, p, width, _, k, seed, family_seed = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported sketch format version {version}")
    pos = _HEADER.size
    hll = minhash = None
    if flags & _HAS_HLL:
        if width != REGISTER_WIDTH:
            raise FormatError(f"unsupported register width {width}")
        m = 1 << check_precision(p)
        if len(data) < pos + m:
            raise FormatError("truncated register array")
        hll = HllCounter(p, seed, np.frombuffer(data, dtype=np.uint8, count=m, offset=pos).copy())
        pos += m
    if flags & _HAS_MINHASH:
        if len(data) < pos + 8 * k:
            raise FormatError("truncated signature array")
        vals = np.frombuffer(data, dtype="<u8", count=k, offset=pos).astype(np.uint64)
        minhash = MinHashSignature(k, family_seed, vals)
        pos += 8 * k
    if pos != len(data):
        raise FormatError(f"{len(data) - pos} trailing bytes after sketch")
    if hll is not None and minhash is not None:
        return NeighbourhoodSketch(hll, minhash)
    if hll is not None:
        return hll
    if minhash is not None:
        return minhash
    raise FormatError("sketch file holds neither registers nor a signature")


def save(sketch: Sketch, target: Union[str, PathLike, BinaryIO]) -> None:
    data = dumps(sketch)
    if hasattr(target, "write"):
        target.write(data)
    else:
        with open(target, "wb") as fh:
            fh.write(data)


def load(source: Union[str, PathLike, BinaryIO]) -> Sketch:
    if hasattr(source, "read"):
        return loads(source.read())
    with open(source, "rb") as fh:
        return loads(fh.read())
