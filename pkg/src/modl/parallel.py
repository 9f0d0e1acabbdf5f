"""Deterministic task fan-out over a worker pool.

Parallel sections always operate on immutable inputs and merge results in
task order, never completion order, so the outcome is byte-identical for
any worker count.  Workers are separate processes (the work is CPU-bound
Python); ``workers <= 1`` runs inline with zero overhead.
"""

from __future__ import annotations

import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def effective_workers(workers: int) -> int:
    """0 means auto-detect; anything else is taken literally (min 1)."""
    if workers == 0:
        return os.cpu_count() or 1
    return max(int(workers), 1)


def run_ordered(fn: Callable[[T], R], tasks: Sequence[T], workers: int = 1) -> list[R]:
    """Apply ``fn`` to every task, returning results in task order."""
    workers = effective_workers(workers)
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    ctx = multiprocessing.get_context("fork")
    chunk = max(1, len(tasks) // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
        return list(pool.map(fn, tasks, chunksize=chunk))
