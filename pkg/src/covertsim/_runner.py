"""Trial fan-out with scheduling-independent output order."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional, TypeVar

T = TypeVar("T")

THREADS_ENV = "COVERTSIM_THREADS"


def thread_count(threads: Optional[int] = None) -> int:
    if threads is None:
        raw = os.environ.get(THREADS_ENV, "1")
        try:
            threads = int(raw)
        except ValueError:
            threads = 1
    return max(1, threads)


def map_trials(fn: Callable[[int], T], trials: int, threads: Optional[int] = None) -> list[T]:
    """``[fn(0), ..., fn(trials - 1)]``, optionally computed on a thread pool.

    Each ``fn(i)`` must derive its own random stream from ``i``.
    """
    n_threads = min(thread_count(threads), max(trials, 1))
    if n_threads == 1:
        return [fn(i) for i in range(trials)]
    chunk = -(-trials // n_threads)
    bounds = [(lo, min(lo + chunk, trials)) for lo in range(0, trials, chunk)]

    def run(span):
        lo, hi = span
        return [fn(i) for i in range(lo, hi)]

    with ThreadPoolExecutor(max_workers=n_threads) as pool:
        parts = list(pool.map(run, bounds))
    return [item for part in parts for item in part]
