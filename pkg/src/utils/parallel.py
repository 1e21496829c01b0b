"""Worker pool for embarrassingly parallel sweeps."""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar

from .logger import StructuredLogger

logger = StructuredLogger(__name__)

T = TypeVar('T')
R = TypeVar('R')


def parallel_map(func: Callable[[T], R], items: Iterable[T], workers: int = 1) -> List[R]:
    """
    Map ``func`` over ``items`` preserving input order.

    Args:
        func: Pure function of one argument
        items: Inputs
        workers: Worker count; 1 runs serially in the calling thread

    Returns:
        Results in input order
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]

    logger.debug("Dispatching to worker pool", workers=workers, items=len(items))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))
