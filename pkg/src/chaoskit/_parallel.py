"""Thread-pool helpers. The compiled kernels release the GIL, so threads scale."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

ENV_THREADS = "CHAOS_KIT_THREADS"


def resolve_threads(threads: int | None = None) -> int:
    """Explicit value, else $CHAOS_KIT_THREADS, else the number of cores."""
    if threads is None:
        env = os.environ.get(ENV_THREADS, "").strip()
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise ValueError(f"{ENV_THREADS} must be an integer, got {env!r}") from None
    if threads is None:
        threads = os.cpu_count() or 1
    if threads < 1:
        raise ValueError(f"thread count must be >= 1, got {threads}")
    return threads


def pmap(fn, items, threads: int | None = None) -> list:
    """Ordered parallel map. Results never depend on the thread count."""
    items = list(items)
    n = min(resolve_threads(threads), max(len(items), 1))
    if n == 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))
