"""Process-pool helper for chunk-parallel work.

Workers are separate processes because the sparse kernels hold the GIL.
The shared payload (dataset, weights, ...) is sent once per worker via
the pool initializer; results come back in task order, so any reduction
over them is deterministic.
"""

from __future__ import annotations

import multiprocessing as mp
from functools import partial

_shared = None


def _init_worker(payload):
    global _shared
    _shared = payload


def _run_task(func, task):
    return func(_shared, task)


def map_with_shared(func, payload, tasks, workers: int = 1) -> list:
    """``[func(payload, t) for t in tasks]``, optionally across processes.

    ``func`` must be a module-level function. With ``workers <= 1`` the
    work runs inline.
    """
    tasks = list(tasks)
    workers = min(int(workers), len(tasks))
    if workers <= 1:
        return [func(payload, task) for task in tasks]
    ctx = mp.get_context("fork")
    with ctx.Pool(workers, initializer=_init_worker, initargs=(payload,)) as pool:
        return pool.map(partial(_run_task, func), tasks)
