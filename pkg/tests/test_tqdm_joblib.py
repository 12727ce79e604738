import unittest

import joblib
from joblib import Parallel, delayed
from tqdm import tqdm

from booleanentropy.utils.tqdm_joblib import parallel_map, tqdm_joblib


def _shift(x: int, by: int = 1) -> int:
    return x + by


class TestTqdmJoblib(unittest.TestCase):
    def test_patches_and_restores_callback(self):
        with tqdm_joblib(tqdm(desc="Joblib tqdm wrapper", total=5, disable=True)):
            self.assertEqual(joblib.parallel.BatchCompletionCallBack.__name__, "TqdmBatchCompletionCallback")
            res = Parallel()(delayed(_shift)(i) for i in range(5))
        self.assertEqual(joblib.parallel.BatchCompletionCallBack.__name__, "BatchCompletionCallBack")
        self.assertListEqual(res, [1, 2, 3, 4, 5])

    def test_parallel_map_keeps_order(self):
        for n_jobs in [1, 2]:
            with self.subTest(n_jobs=n_jobs):
                self.assertListEqual(parallel_map(_shift, range(10), n_jobs=n_jobs), list(range(1, 11)))

    def test_parallel_map_unpacks_tuples(self):
        self.assertListEqual(parallel_map(_shift, [(1, 10), (2, 20)], n_jobs=2), [11, 22])
