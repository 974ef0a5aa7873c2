"""Experiment config: defaults, strict YAML loading, canonical hashing."""

import dataclasses

import pytest

from stereolab.harness.config import (MODALITIES, ConfigError, ExperimentConfig,
                                      TrainingConfig, config_from_dict,
                                      load_config)
from stereolab.world import TaskConfig


def test_defaults():
    cfg = ExperimentConfig()
    assert cfg.modality == "stereo"
    assert cfg.seeds == (0, 1, 2)
    assert cfg.task.width == 64
    assert cfg.training.batch == 64
    assert cfg.horizons.obs == 2
    assert cfg.horizons.act == 16
    assert cfg.diffusion_steps == 100


def test_modalities_are_sorted_unique():
    assert sorted(MODALITIES) == list(MODALITIES)
    assert len(set(MODALITIES)) == len(MODALITIES)


def test_canonical_json_is_stable_and_compact():
    cfg = ExperimentConfig()
    s1 = cfg.canonical_json()
    s2 = ExperimentConfig().canonical_json()
    assert s1 == s2
    assert ": " not in s1 and ", " not in s1  # compact separators
    # keys arrive sorted, so a later key never precedes an earlier one
    assert s1.index('"d_z"') < s1.index('"modality"') < s1.index('"task"')


def test_config_hash_changes_with_any_field():
    base = ExperimentConfig()
    assert base.config_hash() == ExperimentConfig().config_hash()
    assert len(base.config_hash()) == 32  # 16-byte digest, hex
    seen = {base.config_hash()}
    variants = [
        base.with_modality("mono-rgb"),
        dataclasses.replace(base, d_z=64),
        dataclasses.replace(base, diffusion_steps=50),
        dataclasses.replace(base, task=TaskConfig(width=32, height=32)),
        dataclasses.replace(base, training=TrainingConfig(lr=3e-4)),
    ]
    for v in variants:
        h = v.config_hash()
        assert h not in seen
        seen.add(h)


def test_with_modality_leaves_original_untouched():
    base = ExperimentConfig()
    mono = base.with_modality("mono-rgb")
    assert mono.modality == "mono-rgb"
    assert base.modality == "stereo"
    assert mono.task == base.task


def test_unknown_modality_rejected():
    with pytest.raises(ConfigError, match="unknown modality"):
        ExperimentConfig(modality="telepathy")


def test_yaml_round_trip(tmp_path):
    p = tmp_path / "cfg.yaml"
    p.write_text(
        "modality: mono-rgb\n"
        "d_z: 64\n"
        "seeds: [4, 5]\n"
        "task:\n"
        "  width: 32\n"
        "  height: 32\n"
        "  n_views: 1\n"
        "  depth_range: [0.5, 0.8]\n"
        "training:\n"
        "  batch: 8\n"
        "  lr: 0.0003\n"
        "model:\n"
        "  channels: 16\n"
        "horizons:\n"
        "  act: 8\n"
    )
    cfg = load_config(p)
    assert cfg.modality == "mono-rgb"
    assert cfg.d_z == 64
    assert cfg.seeds == (4, 5)
    assert cfg.task.width == 32
    assert cfg.task.depth_range == (0.5, 0.8)  # YAML list becomes tuple
    assert cfg.training.batch == 8
    assert cfg.model.channels == 16
    assert cfg.horizons.act == 8
    # untouched sections keep their defaults
    assert cfg.training.demos == 200
    assert cfg.model.layers == 2


def test_empty_yaml_gives_defaults(tmp_path):
    p = tmp_path / "empty.yaml"
    p.write_text("")
    assert load_config(p) == ExperimentConfig()


def test_unknown_root_key_rejected():
    with pytest.raises(ConfigError, match="unknown key learning_rate"):
        config_from_dict({"learning_rate": 1e-3})


def test_unknown_section_key_rejected():
    with pytest.raises(ConfigError, match=r"unknown key task\.bogus"):
        config_from_dict({"task": {"bogus": 1}})


def test_section_must_be_mapping():
    with pytest.raises(ConfigError, match="must be a mapping"):
        config_from_dict({"task": [1, 2]})


def test_seeds_validation():
    with pytest.raises(ConfigError, match="list of integers"):
        config_from_dict({"seeds": [0, "one"]})
    with pytest.raises(ConfigError, match="list of integers"):
        config_from_dict({"seeds": 3})
    with pytest.raises(ConfigError, match="nonempty"):
        config_from_dict({"seeds": []})


def test_invalid_section_value_reported_with_path():
    with pytest.raises(ConfigError, match="invalid section 'task'"):
        config_from_dict({"task": {"n_views": 5}})


def test_yaml_syntax_error_reported(tmp_path):
    p = tmp_path / "broken.yaml"
    p.write_text("task: [unclosed\n")
    with pytest.raises(ConfigError):
        load_config(p)
