"""Ordered evaluation of independent point batches."""

from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

T = TypeVar("T")
R = TypeVar("R")


def map_ordered(fn: Callable[[T], R], items: Iterable[T], workers: int | None = None) -> list[R]:
    """Apply ``fn`` to every item, returning results in input order.

    ``workers=None`` or ``1`` runs serially. Reductions over the returned list
    are deterministic because ordering never depends on completion order. The
    first exception raised by ``fn`` propagates.
    """
    batch = list(items)
    if workers is None or workers <= 1 or len(batch) <= 1:
        return [fn(item) for item in batch]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, batch))
