"""Order-preserving process map with single-threaded BLAS.

BLAS kernels may change their reduction order with the thread count, so
every task runs with BLAS pinned to one thread; outputs are then
bit-identical whatever ``threads`` is.
"""

import os
from concurrent.futures import ProcessPoolExecutor

from threadpoolctl import threadpool_limits


def available_threads():
    if hasattr(os, "sched_getaffinity"):
        return len(os.sched_getaffinity(0))
    return os.cpu_count() or 1


def _init_worker():
    threadpool_limits(1)


def ordered_map(fn, tasks, threads=1):
    """``[fn(t) for t in tasks]``, optionally spread over ``threads`` processes."""
    tasks = list(tasks)
    threads = max(1, int(threads))
    if threads == 1 or len(tasks) < 2:
        with threadpool_limits(1):
            return [fn(t) for t in tasks]
    chunk = max(1, len(tasks) // (4 * threads))
    with ProcessPoolExecutor(max_workers=threads, initializer=_init_worker) as pool:
        return list(pool.map(fn, tasks, chunksize=chunk))
