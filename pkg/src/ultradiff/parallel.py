"""Order-preserving map over worker processes, capped by ULTRADIFF_THREADS."""

from __future__ import annotations

import os
import random
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("ULTRADIFF_THREADS", "1")))
    except ValueError:
        return 1


def pmap(fn: Callable[[T], R], items: Iterable[T], workers: int | None = None) -> list[R]:
    """``list(map(fn, items))``, fanned out when more than one worker is allowed.

    Work items are seeded independently of the worker count, so results do not
    depend on how many workers ran them.
    """
    items = list(items)
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(items) < 2:
        return [fn(item) for item in items]
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunk))


def split_seed(seed: int, *keys) -> int:
    """A 64-bit child seed determined by ``seed`` and ``keys`` alone."""
    return random.Random(":".join(map(str, (seed,) + keys))).getrandbits(64)
