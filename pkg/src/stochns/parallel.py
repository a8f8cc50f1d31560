"""Worker pool for Monte Carlo batches.

Trajectory ``i`` always uses counter stream ``i``, so splitting ``M``
trajectories into chunks and concatenating the per-trajectory results
in chunk order gives the same arrays for any worker count.
"""

import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

WORKERS_ENV = "STOCHNS_WORKERS"


def worker_count():
    """Workers from ``STOCHNS_WORKERS`` (default 1)."""
    raw = os.environ.get(WORKERS_ENV, "1").strip() or "1"
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}")
    return n


def chunks(M, size):
    """Consecutive trajectory index blocks covering ``0..M-1``."""
    return [np.arange(a, min(a + size, M)) for a in range(0, M, size)]


def map_trajectories(fn, M, chunk=512, workers=None):
    """Apply ``fn(index_block)`` to blocks of trajectories and stack in order.

    ``fn`` must return arrays whose first axis runs over the block (or a
    tuple of such arrays) and must be picklable when ``workers > 1``.
    """
    workers = worker_count() if workers is None else workers
    blocks = chunks(M, chunk)
    if workers == 1 or len(blocks) == 1:
        parts = [fn(b) for b in blocks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(fn, blocks))
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate(p, axis=0) for p in zip(*parts))
    return np.concatenate(parts, axis=0)
