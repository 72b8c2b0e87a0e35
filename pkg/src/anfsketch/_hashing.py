"""Seedable 64-bit mixing hash used by every sketch.

The mixer is the SplitMix64 finaliser applied to ``item XOR key``.  All
arithmetic is done on ``uint64`` arrays so overflow wraps silently, as the
algorithm requires.
"""

from __future__ import annotations

import numpy as np

GOLDEN_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_C1 = np.uint64(0xBF58476D1CE4E5B9)
_C2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)

UINT64_MAX = np.uint64(0xFFFFFFFFFFFFFFFF)


def as_items(items) -> np.ndarray:
    """Coerce an int or iterable of ints to a 1-D ``uint64`` array.

    Negative Python ints are wrapped modulo 2**64.
    """
    if isinstance(items, np.ndarray):
        arr = items
    elif isinstance(items, (int, np.integer)):
        arr = np.array([int(items) & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    else:
        arr = np.array([int(x) & 0xFFFFFFFFFFFFFFFF for x in items], dtype=np.uint64)
    if arr.dtype.kind == "i":
        arr = arr.astype(np.int64, copy=False).view(np.uint64)
    elif arr.dtype != np.uint64:
        arr = arr.astype(np.uint64)
    return np.ascontiguousarray(arr.reshape(-1))


def splitmix64(x: np.ndarray) -> np.ndarray:
    """SplitMix64 output function over a ``uint64`` array (no state advance)."""
    with np.errstate(over="ignore"):
        z = x + GOLDEN_GAMMA
        z = (z ^ (z >> _S30)) * _C1
        z = (z ^ (z >> _S27)) * _C2
        return z ^ (z >> _S31)


def hash64(items: np.ndarray, seed: int) -> np.ndarray:
    """Hash ``uint64`` items under a 64-bit seed."""
    key = splitmix64(np.array([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64))[0]
    return splitmix64(items ^ key)


def derive_keys(seed: int, count: int) -> np.ndarray:
    """``count`` well-mixed 64-bit keys derived from one seed."""
    base = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    with np.errstate(over="ignore"):
        stream = base + GOLDEN_GAMMA * np.arange(1, count + 1, dtype=np.uint64)
    return splitmix64(stream)


def bit_length(x: np.ndarray) -> np.ndarray:
    """Vectorised ``int.bit_length`` for ``uint64`` arrays."""
    x = x.copy()
    out = np.zeros(x.shape, dtype=np.int64)
    for shift in (32, 16, 8, 4, 2, 1):
        s = np.uint64(shift)
        hi = x >> s
        mask = hi != 0
        out[mask] += shift
        x = np.where(mask, hi, x)
    out += (x != 0).astype(np.int64)
    return out
