import json

import pytest
from pydantic import ValidationError

from config import (
    MaskConfig,
    ModelConfig,
    RunConfig,
    SceneConfig,
    ScheduleConfig,
    build_run_config,
    load_run_config,
    merge_overrides,
)
from config.loader import get_bool_env, get_int_env
from utils.errors import ConfigError, ContractError, FormatError


class TestSections:
    def test_defaults(self):
        cfg = RunConfig()
        assert cfg.patches_per_granularity == 64
        assert cfg.scene.class_count == 5
        assert cfg.model.task_order == ("S", "I", "R")

    def test_task_order_from_string(self):
        assert ModelConfig(task_order="ris").task_order == ("R", "I", "S")

    def test_task_order_must_be_permutation(self):
        with pytest.raises(ValidationError):
            ModelConfig(task_order="SSR")

    def test_heads_divide_width(self):
        with pytest.raises(ValidationError):
            ModelConfig(d_enc=30, enc_heads=4)

    def test_shape_range_within_k_max(self):
        with pytest.raises(ValidationError):
            SceneConfig(shape_count_range=(1, 9), k_max=8)

    def test_alpha_range(self):
        with pytest.raises(ValidationError):
            MaskConfig(alpha=0.5)

    def test_budget(self):
        assert MaskConfig().budget(64) == 32
        assert MaskConfig().budget(196) == 98
        assert MaskConfig(visible_tokens=7, visible_fraction=0.9).budget(64) == 7
        with pytest.raises(ContractError):
            MaskConfig(visible_tokens=200).budget(64)

    def test_schedule_presets(self):
        assert ScheduleConfig().resolved()[0] == (0.0, 0.0, 1.0)
        assert ScheduleConfig(preset="IG-SG-RD").resolved()[0] == (0.0, 1.0, 0.0)
        with pytest.raises(ValidationError):
            ScheduleConfig(preset="RD-RD-RD")

    def test_breakpoints_must_be_valid(self):
        with pytest.raises(ValidationError):
            ScheduleConfig(breakpoints=[(0.0, 0.6, 0.6)])
        with pytest.raises(ValidationError):
            ScheduleConfig(breakpoints=[(0.5, 0.0, 0.0), (0.2, 0.0, 0.0)])

    def test_effective_round_trip(self):
        cfg = RunConfig(model=ModelConfig(task_order="IRS", decoder_mode="parallel"))
        assert RunConfig.model_validate(json.loads(cfg.effective())) == cfg


class TestLoader:
    def test_unknown_key_names_its_path(self):
        with pytest.raises(ConfigError, match="train.bogus"):
            build_run_config({"train": {"bogus": 1}})

    def test_geometry_mismatch(self):
        with pytest.raises(ConfigError, match="not divisible"):
            build_run_config({"scene": {"image_size": 30}})

    def test_class_weight_count(self):
        with pytest.raises(ConfigError, match="class_weights"):
            build_run_config({"mask": {"class_weights": [1.0, 2.0]}})

    def test_non_mapping(self):
        with pytest.raises(ConfigError):
            build_run_config([1, 2])

    def test_yaml_with_env_substitution(self, tmp_path, monkeypatch):
        monkeypatch.setenv("C2F_TEST_SCENE_SEED", "41")
        path = tmp_path / "run.yaml"
        path.write_text("scene:\n  seed: $C2F_TEST_SCENE_SEED\nmodel:\n  task_order: RIS\n", encoding="utf-8")
        cfg = load_run_config(str(path))
        assert cfg.scene.seed == 41
        assert cfg.model.task_order == ("R", "I", "S")

    def test_json_file(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"train": {"epochs": 7, "warmup_epochs": 1}}), encoding="utf-8")
        assert load_run_config(str(path)).train.epochs == 7

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text("{", encoding="utf-8")
        with pytest.raises(FormatError):
            load_run_config(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_run_config(str(tmp_path / "absent.yaml"))

    def test_no_file_means_defaults(self):
        assert load_run_config(None) == RunConfig()

    def test_overrides_skip_unset_flags(self):
        cfg = RunConfig(train={"epochs": 9})
        merged = merge_overrides(cfg, {"train": {"epochs": None, "batch_size": 8}, "model": {"decoder_mode": "parallel"}})
        assert merged.train.epochs == 9 and merged.train.batch_size == 8
        assert merged.model.decoder_mode.value == "parallel"

    def test_overrides_are_validated(self):
        with pytest.raises(ConfigError, match="train.epochs"):
            merge_overrides(RunConfig(), {"train": {"epochs": 0}})

    def test_env_helpers(self, monkeypatch):
        monkeypatch.setenv("C2F_TEST_FLAG", "yes")
        monkeypatch.setenv("C2F_TEST_INT", "x")
        assert get_bool_env("C2F_TEST_FLAG") is True
        assert get_int_env("C2F_TEST_INT", 3) == 3
