"""Worker-pool plumbing shared by simulation studies and the CLI."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

__all__ = ["worker_count", "parallel_map"]


def worker_count(explicit=None):
    """Resolve a worker count: explicit flag, IVT_WORKERS, then cores."""
    if explicit is not None:
        n = int(explicit)
        if n < 1:
            raise ValueError("worker count must be positive")
        return n
    env = os.environ.get("IVT_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def parallel_map(fn, items, workers=None):
    """Map ``fn`` over ``items`` preserving order.

    Runs serially for a single worker; otherwise fans out to a process
    pool. Results are collected by input position, so the output is
    deterministic no matter how the pool schedules the work.
    """
    items = list(items)
    workers = worker_count(workers)
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    workers = min(workers, len(items))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))
