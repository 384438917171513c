"""Deterministic fan-out of independent numeric jobs over a thread pool."""

import logging
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def indexed_map(func: Callable[[T], R], items: Sequence[T], workers: int = 1) -> list[R]:
    """Apply ``func`` to every item and return results in input order.

    Results are stored by index, so any reduction over the returned list is
    independent of completion order and of ``workers``.
    """
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]

    results: list[R | None] = [None] * len(items)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(func, item): i for i, item in enumerate(items)}
        for future in as_completed(futures):
            results[futures[future]] = future.result()
    logger.debug("indexed_map: %d jobs on %d workers", len(items), workers)
    return results  # type: ignore[return-value]


def chunked(items: Sequence[T], chunks: int) -> list[Sequence[T]]:
    """Split ``items`` into at most ``chunks`` contiguous slices."""
    chunks = max(1, min(chunks, len(items)))
    bounds = [round(i * len(items) / chunks) for i in range(chunks + 1)]
    return [items[bounds[i] : bounds[i + 1]] for i in range(chunks)]
