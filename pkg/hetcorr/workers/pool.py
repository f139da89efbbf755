from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from typing import TypeVar

from hetcorr.core.config import settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(fn: Callable[[T], R], jobs: Sequence[T], *, workers: int | None = None) -> list[R]:
    """Run `fn` over `jobs` and return results in submission order.

    `fn` must be a module-level function; jobs carry their own random sub-streams, so the result
    list is the same for any worker count.
    """
    workers = settings.workers if workers is None else workers
    if workers <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    max_workers = min(workers, len(jobs))
    chunksize = max(1, len(jobs) // (4 * max_workers))
    logger.debug("process pool start", extra={"workers": max_workers, "jobs": len(jobs)})
    with ProcessPoolExecutor(max_workers=max_workers) as executor:
        return list(executor.map(fn, jobs, chunksize=chunksize))
