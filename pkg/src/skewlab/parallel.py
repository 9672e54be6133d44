"""Contiguous-slab worker pool.

Work items are split into ``threads`` contiguous index ranges; each worker
fills its own slab and the results are concatenated in index order, so the
output never depends on the thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

_default_threads = 1


def set_threads(n: int) -> None:
    global _default_threads
    if n < 1:
        raise ValueError("thread count must be >= 1")
    _default_threads = int(n)


def get_threads() -> int:
    return _default_threads


def slab_bounds(n: int, threads: int) -> list[tuple[int, int]]:
    edges = np.linspace(0, n, max(1, threads) + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


def run_slabs(fn, n: int, threads: int | None = None) -> list:
    """Call fn(lo, hi) on each slab; results come back in slab order."""
    threads = threads or _default_threads
    bounds = slab_bounds(n, threads)
    if threads == 1:
        return [fn(lo, hi) for lo, hi in bounds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda ab: fn(*ab), bounds))


def concat(parts: list, k: int | None = None):
    """Concatenate slab outputs; tuples are concatenated field by field."""
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate([p[i] for p in parts]) for i in range(len(parts[0])))
    return np.concatenate(parts)
