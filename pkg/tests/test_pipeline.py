import json
import logging
import os
import sys
import tempfile
import unittest
from pathlib import Path
from unittest import mock

import numpy as np

top_dir = Path(__file__).parent.parent

sys.path.append(str(top_dir))
import activate
from components.dataprep_system import read_dataset
from components.pipeline_system import RunConfig, read_config_file, run_all, run_stage
from config.path_config import chatgpt_fixture_path, deepseek_fixture_path
from config.pipeline_config import output_dir_env
from utils.exceptions import StageError

FIXTURE_INPUTS = ((chatgpt_fixture_path, "chatgpt"), (deepseek_fixture_path, "deepseek"))
INPUT_FLAGS = ["--input", str(chatgpt_fixture_path), "--app-id", "chatgpt",
               "--input", str(deepseek_fixture_path), "--app-id", "deepseek"]


def manifest_entries(out):
    with (Path(out) / "manifest.jsonl").open(encoding="utf-8") as handle:
        return [json.loads(line) for line in handle]


class PipelineCase(unittest.TestCase):
    """
    Runs inside a temporary output directory and detaches any log file the CLI opened there.
    """

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = Path(self.tmp.name)
        self.environment = mock.patch.dict(os.environ)
        self.environment.start()
        os.environ.pop(output_dir_env, None)

    def tearDown(self):
        root = logging.getLogger()
        for handler in list(root.handlers):
            if isinstance(handler, logging.FileHandler) and handler.baseFilename.startswith(
                    os.path.abspath(self.out)):
                root.removeHandler(handler)
                handler.close()
        self.environment.stop()
        self.tmp.cleanup()

    def small_config(self, out=None, **overrides):
        settings = dict(inputs=FIXTURE_INPUTS, out=out or self.out, max_length=12, epochs=2)
        settings.update(overrides)
        return RunConfig(**settings)


class TestCommandLine(PipelineCase):
    def test_run_all_writes_every_artifact(self):
        status = activate.main(["run-all", *INPUT_FLAGS, "--out", str(self.out), "--max-length", "12",
                                "--epochs", "2", "--log-level", "warning"])
        self.assertEqual(status, 0)

        expected = ["reviews.csv", "labeled.csv", "balanced.csv", "splits/train.csv", "splits/val.csv",
                    "splits/test.csv", "split_manifest.tsv", "vocab.tsv", "encoded/train_ids.npy",
                    "encoded/test_labels.npy", "models/cnn.ckpt", "models/cnn.yaml", "models/cnn_history.csv",
                    "models/bilstm.ckpt", "reports/report.txt", "reports/report.json",
                    "reports/confusion_bilstm.csv", "eda/sentiment_proportions.csv", "eda/rating_distribution.csv",
                    "eda/top_words.csv", "eda/class_balance.csv", "manifest.jsonl", "run.log"]
        for relative in expected:
            self.assertTrue((self.out / relative).is_file(), relative)

        report = (self.out / "reports" / "report.txt").read_text(encoding="utf-8")
        self.assertTrue(report.splitlines()[1].startswith("cnn"))
        self.assertTrue(report.splitlines()[2].startswith("bilstm"))

        stages = [entry["stage"] for entry in manifest_entries(self.out)]
        self.assertEqual(stages, ["ingest", "label", "balance", "split", "encode", "train:cnn", "train:bilstm",
                                  "evaluate", "eda"])

    def test_stage_counts(self):
        self.assertEqual(activate.main(["run-all", *INPUT_FLAGS, "--out", str(self.out), "--max-length", "12",
                                        "--epochs", "1", "--model", "cnn"]), 0)
        entries = {entry["stage"]: entry for entry in manifest_entries(self.out)}
        # per app: one empty-text row and one duplicate at ingest; one chatgpt review empty after cleaning
        self.assertEqual(entries["ingest"]["rows"], 60)
        self.assertEqual(entries["ingest"]["dropped_empty"], 2)
        self.assertEqual(entries["ingest"]["duplicates"], 2)
        self.assertEqual(entries["label"]["rows"], 59)
        self.assertEqual(entries["label"]["dropped_empty"], 1)

        balanced = read_dataset(self.out / "balanced.csv")
        counts = set(balanced.class_counts.values())
        self.assertEqual(len(counts), 1)
        split = entries["split"]
        self.assertEqual(split["n_train"] + split["n_val"] + split["n_test"], len(balanced))
        self.assertEqual(split["n_test"], (len(balanced) * 2 + 5) // 10)

        self.assertEqual(np.load(self.out / "encoded" / "train_ids.npy").shape, (split["n_train"], 12))
        records = json.loads((self.out / "reports" / "report.json").read_text(encoding="utf-8"))
        self.assertEqual([record["model"] for record in records], ["cnn"])
        self.assertEqual(sum(records[0]["support"]), split["n_test"])

    def test_evaluate_without_checkpoint(self):
        base = [*INPUT_FLAGS, "--out", str(self.out), "--max-length", "12"]
        for stage in ("ingest", "label", "balance", "split", "encode"):
            self.assertEqual(activate.main([stage, *base]), 0, stage)

        with self.assertLogs("activate", level="ERROR") as logs:
            status = activate.main(["evaluate", *base])
        self.assertNotEqual(status, 0)
        self.assertIn("run `train` first", "\n".join(logs.output))

        with self.assertRaises(StageError) as ctx:
            run_stage("evaluate", self.small_config())
        self.assertEqual(ctx.exception.stage, "evaluate")
        self.assertIn("models/cnn.ckpt", str(ctx.exception))

    def test_label_before_ingest(self):
        with self.assertRaises(StageError) as ctx:
            run_stage("label", self.small_config())
        self.assertIn("run `ingest` first", str(ctx.exception))

    def test_ingest_without_input(self):
        self.assertEqual(activate.main(["ingest", "--out", str(self.out)]), 1)

    def test_mismatched_app_ids(self):
        status = activate.main(["ingest", "--input", str(chatgpt_fixture_path), "--out", str(self.out)])
        self.assertEqual(status, 2)

    def test_invalid_log_level(self):
        with self.assertLogs("activate", level="ERROR") as logs:
            status = activate.main(["ingest", *INPUT_FLAGS, "--out", str(self.out), "--log-level", "loud"])
        self.assertEqual(status, 2)
        self.assertIn("Invalid log level: loud", "\n".join(logs.output))
        self.assertFalse((self.out / "reviews.csv").exists())


class TestConfiguration(PipelineCase):
    def write_config(self):
        path = self.out / "run.env"
        path.write_text(f"SEED=5\nEPOCHS=7\nOUT={self.out / 'from_file'}\nMODELS=bilstm\n", encoding="utf-8")
        return path

    def test_flags_override_config_file(self):
        path = self.write_config()
        config = activate.build_run_config(activate.parse_arguments(["train", "--config", str(path), "--seed", "9"]))
        self.assertEqual(config.seed, 9)
        self.assertEqual(config.epochs, 7)
        self.assertEqual(config.models, ("bilstm",))
        self.assertEqual(config.out, self.out / "from_file")

    def test_environment_between_file_and_flags(self):
        path = self.write_config()
        os.environ[output_dir_env] = str(self.out / "from_env")
        config = activate.build_run_config(activate.parse_arguments(["train", "--config", str(path)]))
        self.assertEqual(config.out, self.out / "from_env")

        flagged = activate.build_run_config(activate.parse_arguments(["train", "--config", str(path),
                                                                      "--out", str(self.out / "flag")]))
        self.assertEqual(flagged.out, self.out / "flag")

    def test_unknown_key_ignored(self):
        path = self.out / "extra.env"
        path.write_text("TOP_K=5\nCOLOUR=blue\n", encoding="utf-8")
        with self.assertLogs("components.pipeline_system", level="WARNING"):
            overrides = read_config_file(path)
        self.assertEqual(overrides, {"top_k": 5})

    def test_split_first_flag(self):
        config = activate.build_run_config(activate.parse_arguments(["split", "--split-first"]))
        self.assertTrue(config.split_first)
        self.assertFalse(activate.build_run_config(activate.parse_arguments(["split"])).split_first)

    def test_invalid_model_kind(self):
        with self.assertRaises(ValueError):
            RunConfig(models=("transformer",))


class TestRunAll(PipelineCase):
    def test_split_first_balances_train_only(self):
        config = self.small_config(order="split-first", models=("cnn",), epochs=1)
        reports = run_all(config)
        self.assertEqual(list(reports), ["cnn"])
        self.assertFalse((self.out / "balanced.csv").exists())

        train_balanced = read_dataset(self.out / "splits" / "train_balanced.csv")
        self.assertEqual(len(set(train_balanced.class_counts.values())), 1)
        test = read_dataset(self.out / "splits" / "test.csv")
        labeled = read_dataset(self.out / "labeled.csv")
        self.assertEqual(len(test), (len(labeled) * 2 + 5) // 10)
        self.assertLessEqual(set(test.texts), set(labeled.texts))
        train = read_dataset(self.out / "splits" / "train.csv")
        self.assertEqual(set(train_balanced.texts), set(train.texts))

        stages = [entry["stage"] for entry in manifest_entries(self.out)]
        self.assertEqual(stages, ["ingest", "label", "split", "balance", "encode", "train:cnn", "evaluate", "eda"])

    def test_deterministic(self):
        first, second = self.out / "first", self.out / "second"
        run_all(self.small_config(out=first))
        run_all(self.small_config(out=second))
        for relative in ("reports/report.txt", "reports/report.json", "models/cnn.ckpt", "models/bilstm.ckpt",
                         "split_manifest.tsv", "eda/top_words.csv"):
            self.assertEqual((first / relative).read_bytes(), (second / relative).read_bytes(), relative)

    def test_seed_changes_split(self):
        run_stage("ingest", self.small_config())
        run_stage("label", self.small_config())
        run_stage("balance", self.small_config())
        run_stage("split", self.small_config())
        original = (self.out / "split_manifest.tsv").read_bytes()
        run_stage("split", self.small_config(seed=7))
        self.assertNotEqual((self.out / "split_manifest.tsv").read_bytes(), original)


if __name__ == '__main__':
    unittest.main()
