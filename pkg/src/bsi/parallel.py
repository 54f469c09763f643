from typing import Callable, Iterable, List, Optional, TypeVar
import concurrent.futures
import logging
import os
from . import config

LOGGER = logging.getLogger(__name__)

T = TypeVar('T')
R = TypeVar('R')


def resolve_threads(flag: Optional[int] = None) -> int:
    if flag is not None and flag > 0:
        return flag
    env = os.environ.get(config.THREADS_ENV)
    if env:
        try:
            value = int(env)
            if value > 0:
                return value
        except ValueError:
            LOGGER.warning(f'ignore {config.THREADS_ENV}={env!r}')
    return os.cpu_count() or 1


def ordered_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> List[R]:
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(fn, items))
