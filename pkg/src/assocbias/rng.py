"""Counter-based randomness for reproducible parallel sampling.

Implements the Philox 4x32-10 block function. Every random value is a
pure function of (seed, sample index, draw index), so work can be split
across any number of workers at any chunk boundaries and still produce
bit-identical streams: worker partitioning never touches the counter
layout.
"""

from __future__ import annotations

import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_LO32 = np.uint64(0xFFFFFFFF)

MASK64 = 0xFFFFFFFFFFFFFFFF


def _mulhilo(m: np.uint64, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    prod = m * x.astype(np.uint64)
    return (prod & _LO32).astype(np.uint32), (prod >> np.uint64(32)).astype(np.uint32)


def philox4x32(c0, c1, c2, c3, k0: int, k1: int):
    """One Philox 4x32-10 block over vectorized counters.

    The four counter words are uint32 arrays (broadcastable); the key is
    a pair of uint32 scalars. Returns four uint32 arrays.
    """
    c0, c1, c2, c3 = np.broadcast_arrays(
        np.asarray(c0, dtype=np.uint32),
        np.asarray(c1, dtype=np.uint32),
        np.asarray(c2, dtype=np.uint32),
        np.asarray(c3, dtype=np.uint32),
    )
    key0 = int(k0) & 0xFFFFFFFF
    key1 = int(k1) & 0xFFFFFFFF
    for r in range(10):
        lo0, hi0 = _mulhilo(_M0, c0)
        lo1, hi1 = _mulhilo(_M1, c2)
        c0, c1, c2, c3 = hi1 ^ c1 ^ np.uint32(key0), lo1, hi0 ^ c3 ^ np.uint32(key1), lo0
        if r < 9:
            key0 = (key0 + 0x9E3779B9) & 0xFFFFFFFF
            key1 = (key1 + 0xBB67AE85) & 0xFFFFFFFF
    return c0, c1, c2, c3


def u64_draws(seed: int, start: int, count: int, n_draws: int) -> np.ndarray:
    """uint64 matrix of shape (count, n_draws) for samples start..start+count-1.

    Draw j of sample i depends only on (seed, i, j): each Philox block is
    keyed by the seed and counted by (i, block), yielding two 64-bit
    values per block.
    """
    seed = seed & MASK64
    k0 = seed & 0xFFFFFFFF
    k1 = seed >> 32
    idx = np.arange(start, start + count, dtype=np.uint64)
    c0 = (idx & _LO32).astype(np.uint32)
    c1 = (idx >> np.uint64(32)).astype(np.uint32)
    out = np.empty((count, n_draws), dtype=np.uint64)
    for block in range((n_draws + 1) // 2):
        x0, x1, x2, x3 = philox4x32(c0, c1, np.uint32(block), np.uint32(0), k0, k1)
        lo = x0.astype(np.uint64) | (x1.astype(np.uint64) << np.uint64(32))
        hi = x2.astype(np.uint64) | (x3.astype(np.uint64) << np.uint64(32))
        j = 2 * block
        out[:, j] = lo
        if j + 1 < n_draws:
            out[:, j + 1] = hi
    return out
