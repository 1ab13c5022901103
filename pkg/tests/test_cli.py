import json

import numpy as np
import pytest

from src.main import main


def _run(config, *args):
    return main(["--config", str(config), *args])


class TestGlobalOptions:
    def test_dry_run_prints_merged_config(self, tiny_config_file, capsys):
        assert _run(tiny_config_file, "--dry-run", "--seed", "9", "--epochs", "3", "train") == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["seed"] == 9
        assert doc["data"]["seed"] == 9
        assert doc["train"]["max_epochs"] == 3

    def test_subcommand_flag_reaches_config(self, tiny_config_file, capsys):
        assert _run(tiny_config_file, "--dry-run", "sweep", "--axis", "grid") == 0
        assert json.loads(capsys.readouterr().out)["sweep"]["axis"] == "grid"

    def test_invalid_lambda_exit_code(self, tiny_config_file, capsys):
        assert _run(tiny_config_file, "--lam", "1.5", "train") == 2
        assert "prior.lam" in capsys.readouterr().err

    def test_unknown_key_exit_code(self, tiny_config_file, capsys):
        assert _run(tiny_config_file, "--set", "train.nope=1", "gen") == 2
        assert "train.nope" in capsys.readouterr().err

    def test_bad_jobs_environment(self, tiny_config_file, monkeypatch):
        monkeypatch.setenv("NPDIFF_JOBS", "x")
        assert _run(tiny_config_file, "gen") == 2

    def test_unknown_subcommand(self, tiny_config_file):
        with pytest.raises(SystemExit):
            _run(tiny_config_file, "fly")


class TestCommands:
    def test_gen_is_byte_identical(self, tiny_config_file, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert _run(tiny_config_file, "gen", "--out", str(a)) == 0
        assert _run(tiny_config_file, "gen", "--out", str(b)) == 0
        assert (a / "traffic.csv").read_bytes() == (b / "traffic.csv").read_bytes()

    def test_missing_data_file(self, tiny_config_file, tmp_path):
        assert _run(tiny_config_file, "dynamics", "--data", str(tmp_path / "none.csv")) == 3

    def test_dynamics_outputs(self, tiny_config_file, tmp_path):
        assert _run(tiny_config_file, "dynamics", "--out", str(tmp_path)) == 0
        doc = json.loads((tmp_path / "dynamics.json").read_text(encoding="utf-8"))
        assert doc["period"] == 12
        assert doc["_meta"]["config_hash"]
        assert (tmp_path / "dynamics_profile.csv").exists()

    def test_train_eval_sample(self, tiny_config_file, tmp_path):
        data_dir, out = tmp_path / "data", tmp_path / "out"
        assert _run(tiny_config_file, "gen", "--out", str(data_dir)) == 0
        data = str(data_dir / "traffic.csv")
        assert _run(tiny_config_file, "train", "--data", data, "--out", str(out)) == 0
        checkpoint = str(out / "checkpoint.json")
        report = json.loads((out / "train_report.json").read_text(encoding="utf-8"))
        assert len(report["report"]["val_mae"]) == 2

        assert _run(tiny_config_file, "eval", "--data", data, "--checkpoint", checkpoint, "--out", str(out)) == 0
        result = json.loads((out / "eval.json").read_text(encoding="utf-8"))
        assert result["mae"] >= 0.0

        assert _run(
            tiny_config_file, "sample", "--data", data, "--checkpoint", checkpoint,
            "--out", str(out), "--window", "1", "--count", "2", "--samples", "5",
        ) == 0
        lines = (out / "samples.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0].startswith("# config_hash=")
        # 2 windows x 5 samples x M=2 x K=3 x C=1
        assert len(lines) == 2 + 2 * 5 * 2 * 3

    def test_eval_rejects_other_architecture(self, tiny_config_file, tmp_path):
        assert _run(tiny_config_file, "train", "--out", str(tmp_path)) == 0
        code = _run(
            tiny_config_file, "--set", "denoiser.W=16", "eval",
            "--checkpoint", str(tmp_path / "checkpoint.json"), "--out", str(tmp_path),
        )
        assert code == 3

    def test_train_resume_continues_optimizer(self, tiny_config_file, tmp_path):
        first, second = tmp_path / "first", tmp_path / "second"
        assert _run(tiny_config_file, "train", "--out", str(first)) == 0
        assert _run(
            tiny_config_file, "train", "--resume", str(first / "checkpoint.json"),
            "--out", str(second),
        ) == 0
        a = json.loads((first / "checkpoint.json").read_text(encoding="utf-8"))
        b = json.loads((second / "checkpoint.json").read_text(encoding="utf-8"))
        assert a["optimizer"]["step"] > 0
        assert b["optimizer"]["step"] == 2 * a["optimizer"]["step"]

    def test_sample_window_range(self, tiny_config_file, tmp_path):
        assert _run(tiny_config_file, "train", "--out", str(tmp_path)) == 0
        code = _run(
            tiny_config_file, "sample", "--checkpoint", str(tmp_path / "checkpoint.json"),
            "--window", "999", "--out", str(tmp_path),
        )
        assert code == 2

    def test_sweep_then_report(self, tiny_config_file, tmp_path, capsys):
        assert _run(tiny_config_file, "sweep", "--axis", "lambda", "--out", str(tmp_path)) == 0
        csv_path = tmp_path / "sweep_lambda_4-2.csv"
        assert csv_path.exists()
        assert (tmp_path / "sweep_lambda_4-2.json").exists()
        capsys.readouterr()

        assert _run(tiny_config_file, "report", str(csv_path)) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0].startswith("file,config_hash,label,value,n,mae_mean")
        assert len(out) == 1 + 3

    def test_noise_sweep_reads_data_file(self, tiny_config_file, tmp_path, monkeypatch):
        from src.commands import sweep as sweep_command
        from src.datagen import load_csv

        data_dir = tmp_path / "data"
        assert _run(tiny_config_file, "--seed", "5", "gen", "--out", str(data_dir)) == 0
        received = []
        original = sweep_command.robustness

        def recording_robustness(run, *args, data=None, **kwargs):
            received.append(data)
            return original(run, *args, data=data, **kwargs)

        monkeypatch.setattr(sweep_command, "robustness", recording_robustness)
        code = _run(
            tiny_config_file, "sweep", "--axis", "noise",
            "--data", str(data_dir / "traffic.csv"), "--out", str(tmp_path),
        )
        assert code == 0
        (data,) = received
        np.testing.assert_array_equal(data.values, load_csv(data_dir / "traffic.csv").values)
