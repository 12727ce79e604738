import contextlib
import io
import json
import math
import tempfile
import unittest
from pathlib import Path
from typing import List, Tuple

import numpy as np

from booleanentropy.__main__ import main
from booleanentropy.laws import semicircle_density
from booleanentropy.measures import Atomic
from booleanentropy.utils.io import load_measure, read_csv, write_measure
from tests.fixtures.measures import rademacher, semicircle, uniform


def run(*args: str) -> Tuple[int, str, str]:
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main(["--jobs", "1", *args])
    return code, out.getvalue(), err.getvalue()


class TestCli(unittest.TestCase):
    def setUp(self) -> None:
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self) -> None:
        self._tmp.cleanup()

    def _measure_file(self, m, name: str = "m.json") -> str:
        path = self.tmp / name
        write_measure(m, path)
        return str(path)

    def test_density_table(self):
        out = self.tmp / "sc.csv"
        code, _, _ = run("density", "--law", "p-alpha", "--alpha", "1", "--grid=-3:0.001:3", "--out", str(out))
        self.assertEqual(code, 0)
        lines: List[str] = out.read_text(encoding="utf-8").split("\n")
        self.assertTrue(lines[0].startswith("# booleanentropy"))
        self.assertEqual(lines[1], "x,density")
        df = read_csv(out)
        self.assertEqual(len(df), 6001)
        np.testing.assert_allclose(df.density, semicircle_density(df.x.to_numpy()), atol=1e-8)

    def test_density_is_reproducible(self):
        out = self.tmp / "mp.csv"
        argv = ("density", "--law", "mp", "--gamma", "0.5", "--out", str(out))
        run(*argv)
        first = out.read_bytes()
        run(*argv)
        self.assertEqual(out.read_bytes(), first)

    def test_entropy_of_rademacher(self):
        code, stdout, _ = run("entropy", "--fn", "gamma", "--measure", self._measure_file(rademacher()))
        self.assertEqual(code, 0)
        self.assertEqual(stdout.strip(), "0")

    def test_entropy_json_output(self):
        out = self.tmp / "value.json"
        code, _, _ = run("entropy", "--fn", "gamma", "--measure", self._measure_file(Atomic([-2.0, 2.0], [0.5, 0.5])),
                         "--out", str(out))
        self.assertEqual(code, 0)
        obj = json.loads(out.read_text(encoding="utf-8"))
        self.assertEqual(obj["header"]["tool"], "booleanentropy")
        self.assertAlmostEqual(obj["value"], math.log(4.0), places=12)

    def test_rate_report(self):
        code, stdout, _ = run("rate", "--fn", "isym", "--measure", self._measure_file(rademacher()))
        self.assertEqual(code, 0)
        report = json.loads(stdout)
        self.assertEqual(report["raw"], 1.0)
        self.assertEqual(report["normalized"], 0.0)

    def test_rate_domain_error(self):
        code, _, stderr = run("rate", "--fn", "isym", "--measure", self._measure_file(Atomic([1.0, 2.0], [0.5, 0.5])))
        self.assertEqual(code, 1)
        self.assertIn("error=DomainError", stderr)

    def test_rate_missing_parameter(self):
        code, _, stderr = run("rate", "--fn", "jgamma", "--measure", self._measure_file(Atomic.point(1.0)))
        self.assertEqual(code, 1)
        self.assertIn("--gamma", stderr)

    def test_usage_error(self):
        with contextlib.redirect_stderr(io.StringIO()):
            with self.assertRaises(SystemExit) as ctx:
                main(["density", "--no-such-flag"])
        self.assertEqual(ctx.exception.code, 64)

    def test_no_command_prints_help(self):
        out = io.StringIO()
        with contextlib.redirect_stdout(out):
            self.assertEqual(main([]), 0)
        self.assertIn("usage: booleanentropy", out.getvalue())

    def test_identical_paths(self):
        path = self._measure_file(rademacher())
        code, _, stderr = run("entropy", "--fn", "gamma", "--measure", path, "--out", path)
        self.assertEqual(code, 1)
        self.assertIn("distinct", stderr)

    def test_boolean_convolution(self):
        a = self._measure_file(rademacher(), "a.json")
        b = self._measure_file(rademacher(), "b.json")
        out = self.tmp / "ab.json"
        code, _, _ = run("convolve", "boolean", "--a", a, "--b", b, "--out", str(out))
        self.assertEqual(code, 0)
        result = load_measure(out)
        np.testing.assert_allclose(result.locations, [-math.sqrt(2), math.sqrt(2)], atol=1e-10)
        np.testing.assert_allclose(result.weights, [0.5, 0.5], atol=1e-10)

    def test_clt_curve(self):
        out = self.tmp / "curve.csv"
        code, _, _ = run("clt", "curve", "--measure", self._measure_file(rademacher()), "--ts", "1,2,4",
                         "--out", str(out))
        self.assertEqual(code, 0)
        df = read_csv(out)
        self.assertListEqual(list(df.columns), ["t", "gamma"])
        self.assertListEqual(df.t.tolist(), [1.0, 2.0, 4.0])
        np.testing.assert_allclose(df.gamma, 0.0, atol=1e-6)

    def test_clt_inversion_failure(self):
        out = self.tmp / "curve.csv"
        code, _, stderr = run("clt", "curve", "--measure", self._measure_file(semicircle()), "--ts", "1,2",
                              "--grid", "0.5:0.01:1.0", "--out", str(out))
        self.assertEqual(code, 2)
        self.assertIn("error=InversionFailureError", stderr)
        self.assertFalse(out.exists())

    def test_clt_dgamma(self):
        code, stdout, _ = run("clt", "dgamma", "--measure", self._measure_file(rademacher()))
        self.assertEqual(code, 0)
        self.assertAlmostEqual(float(stdout), 0.0, delta=1e-12)

    def test_sample_wishart_block(self):
        out = self.tmp / "s.json"
        code, _, _ = run("sample", "wishart-block", "--p", "3", "--n", "9", "--seed", "2", "--out", str(out))
        self.assertEqual(code, 0)
        sample = load_measure(out)
        self.assertEqual(sample.count, 3)
        self.assertTrue(np.all(sample.points > 0))
        obj = json.loads(out.read_text(encoding="utf-8"))
        self.assertEqual(obj["config"]["n"], 9)
        self.assertEqual(obj["header"]["seed"], 2)

    def test_sample_conditioned_gue(self):
        out = self.tmp / "gue.json"
        code, _, _ = run("sample", "cond-gue", "--M", "2", "--N", "8", "--burnin", "10", "--steps", "10",
                         "--scaled-pair", "--out", str(out))
        self.assertEqual(code, 0)
        obj = json.loads(out.read_text(encoding="utf-8"))
        self.assertIn("scaled_pair", obj)
        self.assertAlmostEqual(obj["scaled_pair"]["mass_alpha"] + obj["scaled_pair"]["mass_beta"], 1.0, places=12)
        self.assertEqual(load_measure(out).count, 2)

    def test_sample_invalid_dimensions(self):
        code, _, stderr = run("sample", "wishart-block", "--p", "5", "--n", "3", "--out", str(self.tmp / "s.json"))
        self.assertEqual(code, 1)
        self.assertIn("error=DomainError", stderr)

    def test_verify_maximality(self):
        out = self.tmp / "max.csv"
        code, stdout, _ = run("verify", "--suite", "maximality", "--count", "50", "--atoms", "3", "--out", str(out))
        self.assertEqual(code, 0)
        self.assertEqual(json.loads(stdout)["count"], 50)
        self.assertEqual(len(read_csv(out)), 50)

    def test_verify_euler_lagrange(self):
        out = self.tmp / "el.json"
        code, _, _ = run("verify", "--suite", "euler-lagrange", "--alpha", "1", "--out", str(out))
        self.assertEqual(code, 0)
        self.assertLessEqual(json.loads(out.read_text(encoding="utf-8"))["max_dev_on_support"], 1e-2)

    def test_verify_weight_ratio(self):
        out = self.tmp / "ratio.csv"
        code, _, _ = run("verify", "--suite", "weight-ratio", "--model", "wishart-block", "--p", "40", "--n", "4000",
                         "--measure", self._measure_file(uniform(0.9, 1.1), "a.json"),
                         "--measure2", self._measure_file(uniform(1.9, 2.1), "b.json"), "--out", str(out))
        self.assertEqual(code, 0)
        df = read_csv(out)
        self.assertListEqual(list(df.columns), ["measured", "predicted", "relative_error"])

    def test_verify_convergence(self):
        out = self.tmp / "conv.csv"
        code, stdout, _ = run("verify", "--suite", "convergence", "--model", "wishart-block", "--p", "5", "--n", "50",
                              "--replicas", "2", "--out", str(out))
        self.assertEqual(code, 0)
        self.assertEqual(json.loads(stdout)["failed"], 0)
        self.assertListEqual(read_csv(out).status.tolist(), ["OK", "OK"])

    def test_verify_needs_model(self):
        code, _, stderr = run("verify", "--suite", "convergence", "--out", str(self.tmp / "conv.csv"))
        self.assertEqual(code, 1)
        self.assertIn("--model", stderr)

    def test_scaled_pair_needs_json(self):
        with contextlib.redirect_stderr(io.StringIO()):
            with self.assertRaises(SystemExit) as ctx:
                main(["sample", "cond-gue", "--M", "2", "--N", "8", "--scaled-pair", "--out", str(self.tmp / "g.csv")])
        self.assertEqual(ctx.exception.code, 64)

    def test_verify_monotonicity_rejects_small_tmax(self):
        code, _, stderr = run("verify", "--suite", "monotonicity", "--measure", self._measure_file(rademacher()),
                              "--tmax", "0.5", "--out", str(self.tmp / "curve.csv"))
        self.assertEqual(code, 1)
        self.assertIn("--tmax", stderr)
