import logging
import zlib
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

import numpy as np

from lmspectra import settings
from lmspectra.errors import InvalidParameterError

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

MASK64 = (1 << 64) - 1


def resolve_threads(threads: Optional[int] = None) -> int:
    """--threads wins, then LM_SPECTRA_THREADS, then 1."""
    value = settings.THREADS if threads is None else threads
    if value < 1:
        raise InvalidParameterError(f"threads must be >= 1, got {value}")
    return value


def _tag_entropy(tag) -> int:
    if isinstance(tag, str):
        return zlib.crc32(tag.encode("utf-8"))
    if isinstance(tag, (int, np.integer)) and tag >= 0:
        return int(tag)
    raise InvalidParameterError(f"substream tags must be strings or non-negative ints, got {tag!r}")


def substream(seed: int, *tags) -> np.random.Generator:
    """Independent generator for (seed, purpose, index, ...); stable across runs and thread counts."""
    entropy = [int(seed) & MASK64] + [_tag_entropy(tag) for tag in tags]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: Optional[int] = None) -> List[R]:
    """Order-preserving map over a thread pool (numpy-heavy work releases the GIL)."""
    items = list(items)
    workers = min(resolve_threads(threads), max(len(items), 1))
    if workers <= 1:
        return [fn(item) for item in items]
    logger.debug(f"[WORKERS] mapping {len(items)} tasks over {workers} threads")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def process_map(fn: Callable[[T], R], items: Iterable[T], processes: Optional[int] = None) -> List[R]:
    """Order-preserving map over worker processes, for pure-Python CPU-bound tasks."""
    items = list(items)
    workers = min(resolve_threads(processes), max(len(items), 1))
    if workers <= 1:
        return [fn(item) for item in items]
    logger.debug(f"[WORKERS] mapping {len(items)} tasks over {workers} processes")
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))
