"""Deterministic fork-join helpers.

Parallel phases run over precomputed disjoint index ranges, so any task
chunking yields byte-identical results; the pool only changes wall-clock
time. Worker count 1 runs everything inline.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

_default_workers: int | None = None


def get_default_workers() -> int:
    if _default_workers is not None:
        return _default_workers
    env = os.environ.get("SEMISORT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def set_default_workers(count: int | None) -> None:
    global _default_workers
    _default_workers = None if count is None else max(1, int(count))


def split_range(n: int, parts: int) -> list[tuple[int, int]]:
    """Split [0, n) into at most ``parts`` near-equal contiguous spans."""
    parts = max(1, min(parts, n))
    if n == 0:
        return []
    step = -(-n // parts)
    return [(lo, min(lo + step, n)) for lo in range(0, n, step)]


class WorkerPool:
    """A per-call fork-join pool; results come back in submission order."""

    def __init__(self, workers: int | None = None):
        self.workers = max(1, workers if workers is not None else get_default_workers())
        self._executor: ThreadPoolExecutor | None = None

    def __enter__(self) -> "WorkerPool":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    def map(self, fn, items: list) -> list:
        if self.workers == 1 or len(items) <= 1:
            return [fn(item) for item in items]
        if self._executor is None:
            self._executor = ThreadPoolExecutor(max_workers=self.workers)
        return list(self._executor.map(fn, items))

    def chunks(self, n: int, granularity: int = 4) -> list[tuple[int, int]]:
        """Disjoint spans of [0, n) sized for this pool."""
        return split_range(n, self.workers * granularity if self.workers > 1 else 1)
