"""Chunked, order-preserving execution of independent trials.

Trials are cut into fixed-size chunks whose boundaries do not depend on the
thread count, each chunk is a pure function of ``(start, count)``, and the
results are returned in chunk order.  Any reduction over them is therefore
identical for every degree of parallelism.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

CHUNK_TRIALS = 4096


def chunk_bounds(total, chunk=CHUNK_TRIALS):
    return [(s, min(chunk, total - s)) for s in range(0, total, chunk)]


def map_chunks(func, total, threads=1, chunk=CHUNK_TRIALS):
    """``[func(start, count) for each chunk]`` evaluated on ``threads`` workers."""
    bounds = chunk_bounds(total, chunk)
    if threads <= 1 or len(bounds) <= 1:
        return [func(s, c) for s, c in bounds]
    with ThreadPoolExecutor(max_workers=int(threads)) as pool:
        return list(pool.map(lambda b: func(*b), bounds))


def concat_chunks(func, total, threads=1, chunk=CHUNK_TRIALS):
    """Concatenate array-valued chunk results in trial order."""
    parts = map_chunks(func, total, threads, chunk)
    if not parts:
        return np.empty(0)
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate(cols) for cols in zip(*parts))
    return np.concatenate(parts)
