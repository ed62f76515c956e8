"""Shared worker-pool helper; results keep input order regardless of scheduling."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

_DEFAULT_THREADS = min(4, os.cpu_count() or 1)


def set_default_threads(n: int) -> None:
    global _DEFAULT_THREADS
    if n < 1:
        raise ValueError("thread count must be >= 1")
    _DEFAULT_THREADS = n


def get_default_threads() -> int:
    return _DEFAULT_THREADS


def parallel_map(fn, items, threads: int = None):
    items = list(items)
    n = threads or _DEFAULT_THREADS
    if n <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
