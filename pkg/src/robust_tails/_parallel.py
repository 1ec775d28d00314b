"""Chunked thread-pool evaluation over grids.

The compiled kernels release the GIL, so threads give real parallelism.
Results are reassembled by position, so output does not depend on the
thread count.  ``ROBUST_TAILS_THREADS`` caps the pool size.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np


def thread_count() -> int:
    env = os.environ.get("ROBUST_TAILS_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"ROBUST_TAILS_THREADS must be an integer, got {env!r}") from None
    return min(8, os.cpu_count() or 1)


def map_chunks(func, values, min_chunk: int = 16):
    """Apply ``func`` (array -> tuple of arrays) to chunks of ``values`` and concatenate."""
    values = np.atleast_1d(np.asarray(values, dtype=float))
    workers = thread_count()
    if workers == 1 or values.size < 2 * min_chunk:
        return func(values)
    nchunks = min(workers, values.size // min_chunk)
    chunks = np.array_split(values, nchunks)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(func, chunks))
    return tuple(np.concatenate([part[i] for part in parts]) for i in range(len(parts[0])))
