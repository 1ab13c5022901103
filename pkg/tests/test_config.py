import json

import pytest

from src.config import RunConfig, apply_override, env_jobs, load_config, parse_override
from src.diffusion import PriorKind
from src.dynamics import ComponentRule
from src.errors import ConfigError


class TestRunConfig:
    def test_defaults_are_valid(self):
        assert RunConfig().validate() == []

    def test_dict_round_trip_keeps_hash(self, tiny_run):
        again = RunConfig.from_dict(json.loads(tiny_run.canonical_json()))
        assert again == tiny_run
        assert again.config_hash() == tiny_run.config_hash()

    def test_hash_changes_with_content(self, tiny_run):
        assert tiny_run.with_prior(0.3).config_hash() != tiny_run.config_hash()
        assert len(tiny_run.config_hash()) == 16

    def test_header(self, tiny_run):
        header = tiny_run.header()
        assert set(header) == {"config_hash", "version"}

    def test_data_seed_follows_top_level_seed(self):
        run = RunConfig.from_dict({"seed": 5})
        assert run.data.seed == 5
        assert run.train.seed == 5
        pinned = RunConfig.from_dict({"seed": 5, "data": {"seed": 1}})
        assert pinned.data.seed == 1

    def test_with_seed_shares_data(self, tiny_run):
        seeded = tiny_run.with_seed(3)
        assert seeded.train.seed == 3
        assert seeded.data == tiny_run.data

    def test_unknown_key_names_field(self):
        with pytest.raises(ConfigError) as exc:
            RunConfig.from_dict({"train": {"batchsize": 4}})
        assert exc.value.fields == ["train.batchsize"]

    def test_lambda_out_of_range_names_field(self, tiny_doc):
        tiny_doc["prior"] = {"lam": 1.5}
        with pytest.raises(ConfigError) as exc:
            RunConfig.from_dict(tiny_doc).check()
        assert any(f.startswith("prior.lam") for f in exc.value.fields)

    def test_local_prior_needs_one_step_task(self, tiny_doc):
        tiny_doc["prior"] = {"kind": "local"}
        with pytest.raises(ConfigError, match="task.M = 1"):
            RunConfig.from_dict(tiny_doc).check()

    def test_bad_enum_value(self):
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"dynamics": {"rule": "biggest"}})

    def test_enums_are_parsed(self, tiny_doc):
        tiny_doc["prior"] = {"kind": "none"}
        tiny_doc["dynamics"] = {"rule": "above_mean"}
        run = RunConfig.from_dict(tiny_doc)
        assert run.prior.prior_kind is PriorKind.NONE
        assert run.prior.lam == 0.0
        assert run.dynamics.rule is ComponentRule.ABOVE_MEAN


class TestOverrides:
    def test_parse_json_value(self):
        assert parse_override("train.batch_size=16") == (["train", "batch_size"], 16)
        assert parse_override("task.seeds=[0,1]") == (["task", "seeds"], [0, 1])

    def test_parse_string_fallback(self):
        assert parse_override("prior.kind=local") == (["prior", "kind"], "local")

    def test_parse_requires_equals(self):
        with pytest.raises(ConfigError):
            parse_override("train.batch_size")

    def test_apply_creates_sections(self):
        doc = {}
        apply_override(doc, ["train", "patience"], 3)
        assert doc == {"train": {"patience": 3}}

    def test_apply_into_scalar(self):
        with pytest.raises(ConfigError):
            apply_override({"seed": 1}, ["seed", "x"], 2)


class TestLoadConfig:
    def test_precedence(self, tiny_config_file):
        run = load_config(
            tiny_config_file,
            overrides=["train.batch_size=4", "train.patience=7"],
            flags={"train.batch_size": 2, "prior.lam": None},
        )
        assert run.train.batch_size == 2
        assert run.train.patience == 7
        assert run.train.max_epochs == 2
        assert run.prior.lam == 0.5

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_env_jobs(self, monkeypatch):
        monkeypatch.delenv("NPDIFF_JOBS", raising=False)
        assert env_jobs() is None
        monkeypatch.setenv("NPDIFF_JOBS", "4")
        assert env_jobs() == 4
        monkeypatch.setenv("NPDIFF_JOBS", "many")
        with pytest.raises(ConfigError):
            env_jobs()
