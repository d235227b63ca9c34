"""Worker-count control for the numba kernels."""

import logging
import os
from contextlib import contextmanager

import numba

log = logging.getLogger(__name__)


def max_threads() -> int:
    return numba.config.NUMBA_NUM_THREADS


def get_threads() -> int:
    return numba.get_num_threads()


def set_threads(n: int | None) -> int:
    """Set the kernel worker count, clamped to the pool size.

    ``None`` or a non-positive value selects the full pool. The pool size is
    fixed at import time by ``NUMBA_NUM_THREADS`` (default: CPU count).
    Returns the count actually in effect.
    """
    limit = max_threads()
    if n is None or n <= 0:
        n = limit
    if n > limit:
        log.warning(
            "requested %d workers but the pool has %d (set NUMBA_NUM_THREADS "
            "before import to raise it); using %d", n, limit, limit)
        n = limit
    numba.set_num_threads(n)
    return n


@contextmanager
def threads(n: int | None):
    prev = get_threads()
    set_threads(n)
    try:
        yield get_threads()
    finally:
        numba.set_num_threads(prev)


def cpu_count() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:  # pragma: no cover - non-Linux
        return os.cpu_count() or 1
