import os
from concurrent.futures import ThreadPoolExecutor


def n_workers() -> int:
    cap = os.environ.get("LYAPNET_THREADS")
    default = os.cpu_count() or 1
    if cap:
        try:
            return max(1, min(int(cap), default))
        except ValueError:
            pass
    return default


def pmap(fn, items):
    """Ordered map; fans out over threads when more than one worker is allowed."""
    items = list(items)
    workers = min(n_workers(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
