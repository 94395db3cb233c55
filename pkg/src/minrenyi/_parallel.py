import os
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV = "MINRENYI_THREADS"


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        return max(1, int(raw))
    return os.cpu_count() or 1


def ordered_map(fn, items):
    """``list(map(fn, items))``, possibly on a thread pool; order is preserved."""
    items = list(items)
    n = min(thread_count(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
