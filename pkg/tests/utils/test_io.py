import json
import tempfile
import unittest
from pathlib import Path

import numpy as np
import pandas as pd

from booleanentropy.exceptions import InvalidMeasureError
from booleanentropy.measures import Atomic, Empirical, GridDensity
from booleanentropy.utils.io import load_measure, make_header, read_csv, write_atomic, write_csv, write_measure


class TestIO(unittest.TestCase):
    def setUp(self) -> None:
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self) -> None:
        self._tmp.cleanup()

    def test_csv_header_and_line_endings(self):
        path = self.tmp / "table.csv"
        header = make_header(["density", "--law", "semicircle"], seed=None)
        write_csv(pd.DataFrame({"x": [0.0, 0.1], "density": [1.0, 2.0]}), path, header)
        raw = path.read_bytes()
        self.assertNotIn(b"\r", raw)
        first = raw.decode("utf-8").split("\n")[0]
        self.assertTrue(first.startswith("# booleanentropy "))
        self.assertIn("cmd=density --law semicircle", first)
        self.assertListEqual(read_csv(path).density.tolist(), [1.0, 2.0])

    def test_atomic_write_leaves_no_temporary_files(self):
        path = self.tmp / "sub" / "out.txt"
        write_atomic(path, "first\n")
        write_atomic(path, "second\n")
        self.assertEqual(path.read_text(encoding="utf-8"), "second\n")
        self.assertListEqual([p.name for p in path.parent.iterdir()], ["out.txt"])

    def test_csv_measures(self):
        atomic = Atomic([-1.5, 0.25, 2.0], [0.2, 0.3, 0.5])
        write_measure(atomic, self.tmp / "a.csv")
        self.assertEqual(load_measure(self.tmp / "a.csv"), atomic)
        self.assertListEqual(read_csv(self.tmp / "a.csv").weight.tolist(), [0.2, 0.3, 0.5])

        sample = Empirical([0.3, -1.2, 0.3, 5.0])
        write_measure(sample, self.tmp / "e.csv")
        np.testing.assert_array_equal(load_measure(self.tmp / "e.csv").points, sample.points)

        density = GridDensity(-1.0, 0.25, [0.0, 1.0, 2.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0])
        write_measure(density, self.tmp / "d.csv")
        loaded = load_measure(self.tmp / "d.csv")
        self.assertIsInstance(loaded, GridDensity)
        self.assertAlmostEqual(loaded.x0, -1.0, places=14)
        self.assertAlmostEqual(loaded.dx, 0.25, places=14)
        np.testing.assert_allclose(loaded.values, density.values, rtol=1e-14)

    def test_json_measure_with_header(self):
        m = Atomic([0.0], [0.5], mass=0.5)
        path = self.tmp / "m.json"
        write_measure(m, path, make_header(["sample"], seed=3), {"config": {"p": 1}})
        obj = json.loads(path.read_text(encoding="utf-8"))
        self.assertEqual(obj["header"]["seed"], 3)
        self.assertEqual(load_measure(path), m)

    def test_unknown_columns(self):
        path = self.tmp / "bad.csv"
        pd.DataFrame({"a": [1.0], "b": [2.0]}).to_csv(path, index=False)
        with self.assertRaises(InvalidMeasureError):
            load_measure(path)

    def test_non_uniform_density_grid(self):
        path = self.tmp / "bad.csv"
        pd.DataFrame({"x": [0.0, 0.1, 0.3], "density": [1.0, 1.0, 1.0]}).to_csv(path, index=False)
        with self.assertRaises(InvalidMeasureError):
            load_measure(path)

    def test_bad_json(self):
        path = self.tmp / "bad.json"
        path.write_text('{"type": "grid", "x0": 0.0}', encoding="utf-8")
        with self.assertRaises(InvalidMeasureError):
            load_measure(path)
        path.write_text('{"type": "histogram"}', encoding="utf-8")
        with self.assertRaises(InvalidMeasureError):
            load_measure(path)
