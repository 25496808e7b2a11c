"""Counter-based random streams and an order-preserving thread map.

Every random draw is keyed by ``(seed, stream, chunk)``, so the samples that
land in a chunk never depend on how many workers processed the chunks.
"""
from concurrent.futures import ThreadPoolExecutor

import numpy as np

CHUNK = 1 << 16

# stream ids, one per independent consumer of randomness
STREAM_SPHERE = 1
STREAM_SUBSPACE = 2
STREAM_REFINE = 3
STREAM_REJECTION = 4
STREAM_GRID = 5
STREAM_DIRECTIONS = 6
STREAM_OPTIMIZER = 7
STREAM_SWEEP = 8
STREAM_EXTENDED = 9

_threads = 1


def set_threads(n):
    """Set the worker count used by :func:`pmap` (results never depend on it)."""
    global _threads
    n = int(n)
    if n < 1:
        raise ValueError("threads must be >= 1")
    _threads = n


def get_threads():
    return _threads


def generator(seed, stream, chunk=0):
    """Philox generator for one ``(seed, stream, chunk)`` key."""
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(int(stream), int(chunk)))
    return np.random.Generator(np.random.Philox(ss))


def chunk_sizes(count, size=CHUNK):
    full, rest = divmod(int(count), size)
    return [size] * full + ([rest] if rest else [])


def pmap(fn, items):
    """``list(map(fn, items))``, run on the configured thread pool."""
    items = list(items)
    if _threads == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=_threads) as ex:
        return list(ex.map(fn, items))
