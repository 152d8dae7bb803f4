"""Worker-count policy and an order-preserving thread-pool map."""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, List, Optional, Sequence

THREADS_ENV = 'D2F_THREADS'
MAX_DEFAULT_WORKERS = 16

logger = logging.getLogger(__name__)


def get_optimal_worker_count(max_workers: Optional[int] = None) -> int:
    """
    Get the number of worker threads to use.

    Parameters
    ----------
    max_workers : int, optional
        Explicit request. If None, uses available CPUs capped at 16.

    Returns
    -------
    int
        Worker count, further capped by the D2F_THREADS environment variable
    """
    if max_workers is None:
        max_workers = min(os.cpu_count() or 1, MAX_DEFAULT_WORKERS)

    cap = os.environ.get(THREADS_ENV)
    if cap:
        try:
            max_workers = min(max_workers, int(cap))
        except ValueError:
            logger.warning(f'Ignoring non-integer {THREADS_ENV}={cap!r}')

    return max(max_workers, 1)


def ordered_map(func: Callable[[Any], Any], items: Sequence[Any], max_workers: Optional[int] = None) -> List[Any]:
    """
    Apply func to every item on a thread pool; results come back in input order.

    The first exception raised by a worker propagates after being logged.
    """
    max_workers = get_optimal_worker_count(max_workers)
    if max_workers == 1 or len(items) <= 1:
        return [func(item) for item in items]

    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        futures = [executor.submit(func, item) for item in items]
        results = []
        for index, future in enumerate(futures):
            try:
                results.append(future.result())
            except Exception as exc:
                logger.error(f'Error processing item {index}: {exc}')
                raise
    return results
