"""Ordered worker-pool map shared by the sweep modules."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

THREADS_ENV = "THINFILM_THREADS"


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def pmap(fn, items, threads: int | None = None) -> list:
    """map(fn, items) on a process pool; results come back in input order."""
    items = list(items)
    threads = default_threads() if threads is None else max(1, int(threads))
    if threads == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(threads, len(items))) as ex:
        return list(ex.map(fn, items))
