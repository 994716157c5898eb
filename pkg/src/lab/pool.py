import logging
import os
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Callable, List, Optional, Sequence, TypeVar

from tqdm import tqdm

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

# Set by the runner from --quiet
PROGRESS_DISABLED = False


def default_jobs() -> int:
    return int(os.getenv("LOCALITY_JOBS", min(4, os.cpu_count() or 1)))


def fan_out(fn: Callable[[T], R], items: Sequence[T], jobs: Optional[int] = None, desc: str = "Grid") -> List[R]:
    """
    Evaluates independent grid points on a thread pool and returns results in input order.

    A failing point is logged; the first failure is re-raised once the pool has drained.
    """
    items = list(items)
    jobs = jobs or default_jobs()
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in tqdm(items, desc=desc, unit="pt", disable=PROGRESS_DISABLED or len(items) <= 1)]

    results: List[Optional[R]] = [None] * len(items)
    first_error: Optional[BaseException] = None
    with ThreadPoolExecutor(max_workers=jobs) as executor:
        futures = {executor.submit(fn, item): i for i, item in enumerate(items)}
        pbar = tqdm(total=len(items), desc=desc, unit="pt", disable=PROGRESS_DISABLED)
        for future in as_completed(futures):
            i = futures[future]
            try:
                results[i] = future.result()
            except Exception as e:
                logger.error(f"Grid point {items[i]!r} failed: {e}")
                if first_error is None:
                    first_error = e
            pbar.update(1)
        pbar.close()
    if first_error is not None:
        raise first_error
    return results
