from collections.abc import Callable, Iterable
from concurrent.futures import ProcessPoolExecutor

from anchorplan.typ import R, T


def parallel_map(fn: Callable[[T], R], items: Iterable[T], jobs: int = 1) -> list[R]:
    """Order-preserving map; ``jobs > 1`` fans pure work out to worker processes.

    ``fn`` must be picklable (module-level function or ``functools.partial`` of one).
    """
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    chunksize = max(1, len(items) // (jobs * 4))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=chunksize))
