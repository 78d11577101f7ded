"""
Bounded worker pool used for embarrassingly parallel probe evaluation.

Results always come back in input order, so reports do not depend on
completion order or on the worker count.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from .config import runtime_settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(fn: Callable[[T], R], items: Iterable[T], max_workers: Optional[int] = None) -> List[R]:
    """
    Apply fn to every item, using up to STRATA_THREADS worker threads.

    Args:
        fn: Pure function of one item
        items: Inputs
        max_workers: Explicit cap; defaults to the runtime setting

    Returns:
        Outputs in input order
    """
    items = list(items)
    workers = max_workers or runtime_settings().worker_count()
    workers = max(1, min(workers, len(items)))
    if workers == 1:
        return [fn(item) for item in items]

    logger.debug(f"Dispatching {len(items)} tasks to {workers} workers")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
