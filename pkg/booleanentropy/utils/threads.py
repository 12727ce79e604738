import os
import warnings

import psutil

from ..constants import THREADS_ENV


def max_threads() -> int:
    """Upper bound for internal parallelism.

    Reads the ``BEL_THREADS`` environment variable; if it is unset, the number of physical cores is used.
    """
    value = os.environ.get(THREADS_ENV)
    if value:
        try:
            threads = int(value)
        except ValueError:
            warnings.warn(f"Ignoring non-integer {THREADS_ENV}={value!r}")
        else:
            if threads >= 1:
                return threads
            warnings.warn(f"Ignoring non-positive {THREADS_ENV}={value!r}")
    return psutil.cpu_count(logical=False) or psutil.cpu_count() or 1


def resolve_jobs(n_jobs: int) -> int:
    """Translates a joblib-style ``n_jobs`` (``-1`` for all) into a job count capped by :func:`max_threads`."""
    cap = max_threads()
    if n_jobs < 0:
        return cap
    return max(1, min(n_jobs, cap))
