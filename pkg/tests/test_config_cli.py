import json

import pytest
import yaml
from click.testing import CliRunner

from vfusion.cli import main
from vfusion.config import build_bundle, load_config, parse_config
from vfusion.errors import ConfigError

SYNTH_CONFIG = {
    "experiment": "demo",
    "output_dir": "runs",
    "seeds": [0],
    "dataset": {
        "adapter": "synthetic",
        "synthetic": {
            "n_classes": 3,
            "window_len": 16,
            "n_labeled": 40,
            "n_unlabeled": 40,
            "n_valid": 20,
            "n_test": 20,
            "modalities": [
                {"name": "a", "channels": 3, "noise_std": 0.1},
                {"name": "b", "channels": 3, "noise_std": 0.8},
            ],
        },
    },
    "graph": {
        "feature_dim": 8,
        "sources": [
            {"name": "a", "channels": 3, "rate_hz": 50.0, "window_len": 16},
            {"name": "b", "channels": 3, "rate_hz": 50.0, "window_len": 16},
        ],
        "contrastive": ["a", "b"],
        "classification": ["a", "b"],
        "inference": ["a", "b"],
    },
    "loss": {"temperature": 0.1},
    "train": {
        "batch_size": 8,
        "max_epochs": 1,
        "lr_patience": 15,
        "early_stop_patience": 30,
    },
    "model": {"widths": [4, 8], "blocks_per_stage": 1},
}


def write_config(tmp_path, overrides=None, name="config.yaml"):
    cfg = json.loads(json.dumps(SYNTH_CONFIG))
    if overrides:
        cfg.update(overrides)
    path = tmp_path / name
    path.write_text(yaml.safe_dump(cfg))
    return path


class TestConfigParsing:
    def test_valid_config(self, tmp_path):
        cfg = load_config(write_config(tmp_path))
        assert cfg.experiment == "demo"
        assert cfg.graph.feature_dim == 8
        assert cfg.train.batch_size == 8
        assert cfg.model.widths == (4, 8)

    def test_unknown_top_key_rejected(self, tmp_path):
        path = write_config(tmp_path, {"mystery": 1})
        with pytest.raises(ConfigError, match="mystery"):
            load_config(path)

    def test_unknown_nested_key_rejected(self):
        raw = json.loads(json.dumps(SYNTH_CONFIG))
        raw["train"]["warmup"] = 5
        with pytest.raises(ConfigError, match="warmup"):
            parse_config(raw)

    def test_missing_required_key(self):
        raw = {k: v for k, v in SYNTH_CONFIG.items() if k != "graph"}
        with pytest.raises(ConfigError, match="graph"):
            parse_config(raw)

    def test_bad_adapter(self):
        raw = json.loads(json.dumps(SYNTH_CONFIG))
        raw["dataset"]["adapter"] = "magic"
        with pytest.raises(ConfigError, match="magic"):
            parse_config(raw)

    def test_dataset_hash_stable(self, tmp_path):
        c1 = load_config(write_config(tmp_path))
        c2 = load_config(write_config(tmp_path, name="copy.yaml"))
        assert c1.dataset_hash() == c2.dataset_hash()

    def test_dataset_hash_changes_with_params(self, tmp_path):
        c1 = load_config(write_config(tmp_path))
        raw = json.loads(json.dumps(SYNTH_CONFIG))
        raw["dataset"]["synthetic"]["n_labeled"] = 99
        c2 = parse_config(raw)
        assert c1.dataset_hash() != c2.dataset_hash()


class TestBuildBundle:
    def test_synthetic_bundle(self, tmp_path):
        cfg = load_config(write_config(tmp_path))
        bundle = build_bundle(cfg)
        assert bundle.train_labeled.size == 40
        assert bundle.train_unlabeled.size == 40
        assert bundle.valid.size == 20
        assert bundle.test.size == 20


class TestCli:
    def test_prepare_idempotent(self, tmp_path):
        path = write_config(tmp_path)
        runner = CliRunner()
        r1 = runner.invoke(main, ["prepare", "--config", str(path)])
        assert r1.exit_code == 0, r1.output
        assert "built" in r1.output
        r2 = runner.invoke(main, ["prepare", "--config", str(path)])
        assert r2.exit_code == 0
        assert "cache hit" in r2.output

    def test_unknown_key_exits_2(self, tmp_path):
        path = write_config(tmp_path, {"bogus_key": True})
        result = CliRunner().invoke(main, ["prepare", "--config", str(path)])
        assert result.exit_code == 2
        assert "bogus_key" in result.output

    def test_train_eval_report_flow(self, tmp_path):
        path = write_config(tmp_path)
        runner = CliRunner()
        r = runner.invoke(main, ["train", "--config", str(path)])
        assert r.exit_code == 0, r.output
        run_dir = tmp_path / "runs" / "demo" / "0"
        assert (run_dir / "checkpoint.pt").exists()
        assert (run_dir / "epochs.csv").exists()
        assert (run_dir / "metrics.json").exists()
        assert (run_dir / "config.json").exists()

        # rerun skips the completed seed
        r2 = runner.invoke(main, ["train", "--config", str(path)])
        assert r2.exit_code == 0
        assert "skipping" in r2.output

        # eval a single node (single-sensor inference)
        r3 = runner.invoke(
            main,
            ["eval", "--config", str(path), "--run-dir", str(run_dir), "--nodes", "a"],
        )
        assert r3.exit_code == 0, r3.output
        assert (run_dir / "eval_a.json").exists()

        # unknown node exits 4 and lists valid ones
        r4 = runner.invoke(
            main,
            ["eval", "--config", str(path), "--run-dir", str(run_dir), "--nodes", "zz"],
        )
        assert r4.exit_code == 4
        assert "a" in r4.output

        r5 = runner.invoke(main, ["report", str(run_dir)])
        assert r5.exit_code == 0
        assert "a" in r5.output

    def test_seed_override(self, tmp_path):
        path = write_config(tmp_path)
        runner = CliRunner()
        r = runner.invoke(main, ["train", "--config", str(path), "--seed", "7"])
        assert r.exit_code == 0, r.output
        assert (tmp_path / "runs" / "demo" / "7" / "checkpoint.pt").exists()
        assert not (tmp_path / "runs" / "demo" / "0").exists()

    def test_report_missing_metrics_warns(self, tmp_path):
        (tmp_path / "empty_run").mkdir()
        r = CliRunner().invoke(main, ["report", str(tmp_path / "empty_run")])
        assert r.exit_code == 0
        assert "warning" in r.output

    def test_report_without_args_exits_4(self):
        r = CliRunner().invoke(main, ["report"])
        assert r.exit_code == 4
