"""Module providing the thread pool helpers behind batch encoding, ground truth and chunked scans"""
from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, Sequence, TypeVar

from tqdm import tqdm

logger = logging.getLogger(__name__)

THREADS_ENV = "ASANN_THREADS"

T = TypeVar("T")
R = TypeVar("R")


def max_threads() -> int:
    """Worker count: ASANN_THREADS if set and valid, CPU count otherwise."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw == "":
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError:
        logger.warning("Ignoring %s=%r (not an integer); running single-threaded", THREADS_ENV, raw)
        return 1
    if value < 1:
        logger.warning("Ignoring %s=%r (must be >= 1); running single-threaded", THREADS_ENV, raw)
        return 1
    return value


def thread_map(
    func: Callable[[T], R],
    items: Sequence[T],
    show_progress: bool = False,
    desc: str = "Working",
    unit: str = "item",
    threads: Optional[int] = None,
) -> List[R]:
    """Map func over items, preserving input order in the output list.

    Runs inline when only one worker is allowed so tracebacks stay readable.
    """
    workers = min(threads or max_threads(), max(len(items), 1))
    if workers <= 1:
        iterator: Iterable[T] = tqdm(items, desc=desc, unit=unit) if show_progress else items
        return [func(item) for item in iterator]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = pool.map(func, items)
        if show_progress:
            results = tqdm(results, total=len(items), desc=desc, unit=unit)
        return list(results)


def chunk_ranges(n: int, parts: int) -> List[range]:
    """Split range(n) into at most `parts` contiguous, ordered, non-empty ranges."""
    parts = max(1, min(parts, n))
    bounds = [round(i * n / parts) for i in range(parts + 1)]
    return [range(bounds[i], bounds[i + 1]) for i in range(parts) if bounds[i] < bounds[i + 1]]
