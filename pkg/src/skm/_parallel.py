"""Worker-pool plumbing for the embarrassingly parallel loops.

Each task writes only its own output slot and results are assembled in
input order, so outputs never depend on the configured thread count.
"""

import os
from concurrent.futures import ThreadPoolExecutor

_num_threads = 1


def default_num_threads() -> int:
    """Thread count from the SKM_THREADS environment variable (default 1)."""
    raw = os.environ.get("SKM_THREADS", "").strip()
    if not raw:
        return 1
    n = int(raw)
    if n < 1:
        raise ValueError(f"SKM_THREADS must be a positive integer, got {raw!r}")
    return n


def set_num_threads(n: int) -> None:
    global _num_threads
    n = int(n)
    if n < 1:
        raise ValueError(f"thread count must be >= 1, got {n}")
    _num_threads = n


def get_num_threads() -> int:
    return _num_threads


def parallel_map(fn, items):
    """Map fn over items, preserving order; threaded when configured."""
    items = list(items)
    if _num_threads == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=_num_threads) as pool:
        return list(pool.map(fn, items))
