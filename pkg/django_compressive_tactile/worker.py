"""
Patch-parallel execution helpers.

This module contains the thread-pool map used by reconstruction and K-SVD
sparse coding, and the psutil memory check used by long-running commands.
Results are always returned in input order so reductions over them are
identical whatever the thread count.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import psutil

from django_compressive_tactile.conf import get_thread_count

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def memory_usage_mb() -> float:
    """Returns the resident memory of the current process in MB."""
    process = psutil.Process()
    mem_info = process.memory_info()
    return round(mem_info.rss / (1024 * 1024), 2)


def ordered_map(
    func: Callable[[T], R], items: Iterable[T], threads: int | None = None
) -> list[R]:
    """
    Apply ``func`` to every item, returning results in input order.

    With one thread (or fewer than two items) the calls run inline on the
    calling thread; otherwise they are spread over a ThreadPoolExecutor.
    numpy releases the GIL inside its linear algebra kernels, so patch solves
    overlap in practice.

    Args:
        func: Pure function of one item.
        items: Work items.
        threads: Worker count; defaults to ``conf.get_thread_count()``.

    Returns:
        ``[func(item) for item in items]``.

    Raises:
        Whatever ``func`` raises for the first failing item (in input order).
    """
    items: Sequence[T] = list(items)
    threads = get_thread_count() if threads is None else max(1, int(threads))
    if threads == 1 or len(items) < 2:
        return [func(item) for item in items]
    logger.debug("Mapping %d items over %d threads", len(items), threads)
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(func, items))
