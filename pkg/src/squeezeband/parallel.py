"""Thread pool sized from the environment, with order-preserving maps."""

from __future__ import annotations

import os
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV = "SQUEEZEBAND_THREADS"


def thread_count() -> int:
    """Worker count from ``SQUEEZEBAND_THREADS`` (default 1; invalid values mean 1)."""
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def ordered_map(fn: Callable, items: Iterable) -> list:
    """``[fn(x) for x in items]``, possibly concurrent; output order follows input order."""
    items = list(items)
    n = thread_count()
    if n == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
