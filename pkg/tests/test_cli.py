"""
命令行界面的单元测试
"""

import os
import json
import shutil
import tempfile
import unittest

import pandas as pd
from click.testing import CliRunner

from covol_ldp.cli.commands import EXIT_ASSERT, EXIT_ERROR, cli, parse_and_dispatch
from covol_ldp.cli.formatters import format_value
from covol_ldp.core.estimate import ThresholdFn, threshold_vector
from covol_ldp.storage.repository import read_path_csv


class TestCli(unittest.TestCase):
    def setUp(self):
        self.runner = CliRunner()
        self.tmpdir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmpdir)

    def out(self, name="out"):
        return os.path.join(self.tmpdir, name)

    def invoke(self, *args):
        return self.runner.invoke(cli, list(args))

    def read_csv(self, *parts):
        return pd.read_csv(os.path.join(self.tmpdir, *parts), comment="#", float_precision="round_trip")

    def write_config(self, data):
        path = os.path.join(self.tmpdir, "run.json")
        with open(path, "w", encoding="utf-8") as f:
            json.dump(data, f)
        return path

    def test_check_regime_pass(self):
        result = self.invoke("check-regime", "--beta", "0.6", "--gamma", "0.05", "--out", self.out(), "--assert")
        self.assertEqual(result.exit_code, 0, result.output)
        frame = self.read_csv("out", "regime.csv")
        self.assertTrue(frame["passed"].all())
        self.assertIn("mdp", set(frame["kind"]))
        self.assertTrue(os.path.exists(os.path.join(self.out(), "check-regime_manifest.json")))

    def test_check_regime_fail(self):
        args = ["check-regime", "--beta", "0.5", "--gamma", "0.2", "--out", self.out()]
        self.assertEqual(self.invoke(*args).exit_code, 0)

        result = self.invoke(*args, "--assert")
        self.assertEqual(result.exit_code, EXIT_ASSERT)
        self.assertIn("root_n_v_r_bounded", result.output)

    def test_missing_model(self):
        missing = os.path.join(self.tmpdir, "missing.toml")
        result = self.invoke("simulate", "--model", missing, "--out", self.out())
        self.assertEqual(result.exit_code, EXIT_ERROR)
        self.assertIn(missing, result.output)

    def test_model_with_unknown_keys(self):
        model = os.path.join(self.tmpdir, "model.toml")
        with open(model, "w", encoding="utf-8") as f:
            f.write("[sigma_1]\nvalue = 3.0\n\n[jumps1]\nlambda = 5.0\n")
        result = self.invoke("simulate", "--model", model, "--out", self.out())
        self.assertEqual(result.exit_code, EXIT_ERROR)
        self.assertIn("sigma_1", result.output)
        self.assertFalse(os.path.exists(os.path.join(self.out(), "path.csv")))

    def test_simulate_then_estimate(self):
        result = self.invoke("simulate", "--n", "50", "--seed", "7", "--out", self.out())
        self.assertEqual(result.exit_code, 0, result.output)
        path_file = os.path.join(self.out(), "path.csv")
        with open(os.path.join(self.out(), "path_truth.json"), "r", encoding="utf-8") as f:
            self.assertEqual(json.load(f)["seed"], 7)

        result = self.invoke(
            "estimate", "--path-file", path_file, "--threshold-beta", "0.5", "--out", self.out("est")
        )
        self.assertEqual(result.exit_code, 0, result.output)

        frame = self.read_csv("est", "estimate.csv")
        self.assertEqual(list(frame["k"]), list(range(1, 51)))
        path = read_path_csv(path_file)
        expected = threshold_vector(path, ThresholdFn(1.0, 0.5).at(50), 50)
        last = frame.iloc[-1]
        self.assertEqual((last["q1"], last["q2"], last["c"]), expected.as_tuple())

    def test_rate_eval(self):
        result = self.invoke("rate-eval", "--x", "2,1,0", "--direction", "1,0,0", "--level", "1.8", "--out", self.out())
        self.assertEqual(result.exit_code, 0, result.output)

        frame = self.read_csv("out", "rate.csv").set_index("quantity")
        expected = 0.5 * (1.0 - 0.6931471805599453)
        self.assertAlmostEqual(frame.loc["I_ldp", "value"], expected, places=8)
        self.assertAlmostEqual(frame.loc["I_ldp_constant", "value"], expected, places=12)
        self.assertAlmostEqual(frame.loc["contract_mdp", "value"], 1.8**2 / 2.0, places=12)
        self.assertAlmostEqual(frame.loc["contract_mdp_clt", "value"], 1.8**2 / 4.0, places=12)

    def test_rate_eval_contraction_matches_mdp_rate(self):
        level = 1.3
        result = self.invoke(
            "rate-eval", "--x", f"0,0,{level}", "--direction", "0,0,1", "--level", str(level), "--out", self.out()
        )
        self.assertEqual(result.exit_code, 0, result.output)

        frame = self.read_csv("out", "rate.csv").set_index("quantity")
        self.assertAlmostEqual(frame.loc["I_mdp", "value"], level**2, places=12)
        self.assertAlmostEqual(frame.loc["contract_mdp", "value"], frame.loc["I_mdp", "value"], places=12)

    def test_rate_eval_requires_input(self):
        self.assertEqual(self.invoke("rate-eval", "--out", self.out()).exit_code, EXIT_ERROR)

    def test_ldp_oracle(self):
        result = self.invoke(
            "run-experiment", "--mode", "ldp", "--n-grid", "25,50,100,200,400", "--out", self.out(), "--assert"
        )
        self.assertEqual(result.exit_code, 0, result.output)
        frame = self.read_csv("out", "ldp.csv")
        self.assertEqual(list(frame["source"]), ["oracle"] * 5)
        self.assertTrue(os.path.exists(os.path.join(self.out(), "ldp_manifest.json")))

        result = self.invoke("run-experiment", "--mode", "ldp", "--n-grid", "25,50", "--out", self.out(), "--assert")
        self.assertEqual(result.exit_code, EXIT_ASSERT)

    def test_mgf_with_gamma(self):
        result = self.invoke(
            "run-experiment", "--mode", "mgf", "--theta", "0.05,0.05,0", "--n", "50", "--reps", "2000",
            "--gamma", "0.1", "--seed", "13", "--out", self.out(),
        )
        self.assertEqual(result.exit_code, 0, result.output)
        row = self.read_csv("out", "mgf.csv").iloc[0]
        self.assertEqual(row["gamma"], 0.1)
        eta = 0.05 * 50**0.5 / 50**0.1
        self.assertAlmostEqual(row["mdp_limit"], 2 * eta**2, places=12)

    def test_workers_do_not_change_results(self):
        outputs = []
        for workers in ("1", "3"):
            out = self.out(f"w{workers}")
            result = self.invoke(
                "run-experiment", "--mode", "consistency", "--n-grid", "20,40", "--reps", "30",
                "--threshold-beta", "0.5", "--seed", "5", "--workers", workers, "--out", out,
            )
            self.assertEqual(result.exit_code, 0, result.output)
            with open(os.path.join(out, "consistency.csv"), "r", encoding="utf-8") as f:
                csv_text = f.read()
            with open(os.path.join(out, "consistency_manifest.json"), "r", encoding="utf-8") as f:
                config = json.load(f)["config"]
            config.pop("out")
            outputs.append((csv_text, config))

        self.assertEqual(outputs[0], outputs[1])
        self.assertNotIn("workers", outputs[0][1])

    def test_unknown_flag(self):
        self.assertEqual(self.invoke("simulate", "--bogus").exit_code, 2)

    def test_config_file_precedence(self):
        config = self.write_config({"seed": 11, "n": 30})
        result = self.invoke("simulate", "--config-file", config, "--n", "40", "--out", self.out())
        self.assertEqual(result.exit_code, 0, result.output)

        path = read_path_csv(os.path.join(self.out(), "path.csv"))
        self.assertEqual(path.n, 40)
        self.assertEqual(path.seed, 11)

    def test_unknown_config_key(self):
        config = self.write_config({"bogus": 1})
        result = self.invoke("simulate", "--config-file", config, "--out", self.out())
        self.assertEqual(result.exit_code, EXIT_ERROR)
        self.assertIn("bogus", result.output)

    def test_mdp_requires_gamma(self):
        result = self.invoke("run-experiment", "--mode", "mdp", "--threshold-beta", "0.9", "--out", self.out())
        self.assertEqual(result.exit_code, EXIT_ERROR)

    def test_parse_and_dispatch(self):
        out = self.out()
        self.assertEqual(parse_and_dispatch(["check-regime", "--beta", "0.5", "--out", out]), 0)
        self.assertEqual(
            parse_and_dispatch(["check-regime", "--beta", "0.5", "--gamma", "0.2", "--out", out, "--assert"]),
            EXIT_ASSERT,
        )
        self.assertEqual(parse_and_dispatch(["check-regime", "--no-such-flag"]), 2)


class TestFormatters(unittest.TestCase):
    def test_format_value(self):
        self.assertEqual(format_value(float("inf")), "+inf")
        self.assertEqual(format_value(float("nan")), "-")
        self.assertEqual(format_value(None), "-")
        self.assertEqual(format_value(True), "是")
        self.assertEqual(format_value(0.5), "0.5")


if __name__ == "__main__":
    unittest.main()
