import contextlib
from typing import Any, Callable, Generator, Iterable, List, Optional, TypeVar

import joblib
from joblib import Parallel, delayed
from joblib.parallel import BatchCompletionCallBack
from tqdm import tqdm

from .threads import resolve_jobs


T = TypeVar("T")


@contextlib.contextmanager
def tqdm_joblib(tqdm_object: tqdm) -> Generator[tqdm, None, None]:
    """Context manager to patch joblib to report into tqdm progress bar given as argument.

    Directly taken from https://stackoverflow.com/a/58936697.

    Examples
    --------
    >>> from joblib import Parallel, delayed
    >>> from booleanentropy.transforms import cauchy_transform
    >>>
    >>> with tqdm_joblib(tqdm(desc="Cauchy transforms", total=3)):
    >>>     Parallel(n_jobs=2)(delayed(cauchy_transform)(m, 1j) for m in measures)
    """

    class TqdmBatchCompletionCallback(BatchCompletionCallBack):
        def __call__(self, *args, **kwargs) -> Any:  # type: ignore[no-untyped-def]
            tqdm_object.update(n=self.batch_size)
            return super().__call__(*args, **kwargs)

    old_batch_callback = joblib.parallel.BatchCompletionCallBack
    joblib.parallel.BatchCompletionCallBack = TqdmBatchCompletionCallback
    try:
        yield tqdm_object
    finally:
        joblib.parallel.BatchCompletionCallBack = old_batch_callback
        tqdm_object.close()


def parallel_map(fn: Callable[..., T], args: Iterable[Any], n_jobs: int = 1, desc: Optional[str] = None,
                 progress: bool = False, prefer: Optional[str] = None) -> List[T]:
    """Applies ``fn`` to every element of ``args`` (tuples are unpacked), keeping the input order.

    Runs sequentially for a single job; otherwise through joblib with at most
    :func:`booleanentropy.utils.threads.max_threads` workers.
    """
    items = [a if isinstance(a, tuple) else (a,) for a in args]
    jobs = resolve_jobs(n_jobs)
    if jobs == 1:
        return [fn(*a) for a in tqdm(items, desc=desc, disable=not progress)]
    with tqdm_joblib(tqdm(desc=desc, total=len(items), disable=not progress)):
        return Parallel(n_jobs=jobs, prefer=prefer)(delayed(fn)(*a) for a in items)
