"""
This module contains the worker pool used by the drivers that fan out
independent jobs (plane fits, comass batches, glue chunks).

Results always come back in the order of the submitted items, so the
callers can assemble reports deterministically whatever the pool width.
"""

import logging
import multiprocessing as mp
from typing import Callable, Iterable, List, Optional, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

# Number of chunks handed to every worker, on average
CHUNKS_PER_WORKER = 4


def parallel_map(
    func: Callable[[T], R],
    items: Iterable[T],
    workers: int = 1,
    chunksize: Optional[int] = None,
) -> List[R]:
    """
    Apply a function to every item, optionally in a process pool.

    Parameters:
        func: A picklable callable (module-level function or a
            functools.partial of one).
        items: The job descriptions.
        workers: Pool width; 1 or less runs in the calling process.
        chunksize: Jobs per pool task, derived from the pool width
            when omitted.

    Returns:
        The results in the order of `items`.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]

    processes = min(workers, len(items))
    if chunksize is None:
        chunksize = max(1, len(items) // (CHUNKS_PER_WORKER * processes))

    logger.debug(
        "mapping %d jobs over %d workers (chunksize %d)",
        len(items),
        processes,
        chunksize,
    )
    with mp.Pool(processes=processes) as pool:
        return pool.map(func, items, chunksize=chunksize)
