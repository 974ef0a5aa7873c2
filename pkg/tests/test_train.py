"""Training loop: artifacts, reproducibility, checkpoint reload."""

import filecmp

import numpy as np
import pytest

from stereolab.autodiff import set_default_dtype
from stereolab.harness.checkpoint import load_into, read_checkpoint
from stereolab.harness.config import (ExperimentConfig, HorizonConfig,
                                      ModelConfig, TrainingConfig)
from stereolab.harness.evaluate import DiffusionPlanner, evaluate
from stereolab.harness.metrics import read_metrics
from stereolab.harness.timing import read_timings
from stereolab.harness.train import build_policy, train
from stereolab.models import make_schedule
from stereolab.world import TaskConfig


def tiny_train_config(modality="stereo"):
    return ExperimentConfig(
        task=TaskConfig(width=16, height=16, n_views=1, n_distractors=0),
        modality=modality,
        training=TrainingConfig(batch=4, lr=1e-3, steps=6, eval_every=3,
                                demos=3, eval_rollouts=2, data_seed=7),
        horizons=HorizonConfig(obs=2, act=4),
        model=ModelConfig(channels=8, layers=1, heads=2, prior_channels=4,
                          mlp_hidden=48, denoiser_base=8, cond_hidden=16,
                          t_emb_dim=8),
        diffusion_steps=8,
        d_z=16,
        seeds=(0,),
    )


@pytest.fixture(scope="module")
def run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    cfg = tiny_train_config()
    result = train(cfg, out, seed=0)
    return cfg, result, out


def test_artifacts_written(run):
    cfg, result, out = run
    for name in ("metrics.jsonl", "timings.jsonl", "best.ckpt", "last.ckpt"):
        assert (out / name).exists(), name
    assert result.steps == 6
    assert result.config_hash == cfg.config_hash()
    assert np.isfinite(result.final_loss)


def test_metrics_stream_contents(run):
    cfg, result, out = run
    rows = read_metrics(out / "metrics.jsonl")
    steps = [r["step"] for r in rows]
    assert steps[0] == 1
    assert steps[-1] == 6
    assert steps == sorted(steps)
    eval_rows = [r for r in rows if "eval_success_rate" in r]
    assert [r["step"] for r in eval_rows] == [3, 6]
    for r in eval_rows:
        assert r["eval_ci_lo"] <= r["eval_success_rate"] <= r["eval_ci_hi"]
    assert result.evals[0][0] == 3 and result.evals[1][0] == 6


def test_timings_cover_components(run):
    cfg, result, out = run
    rows = read_timings(out / "timings.jsonl")
    assert len(rows) == 6
    for row in rows:
        parts = sum(v for k, v in row.items() if k.endswith("_ms") and k != "total_ms")
        assert {"encode_ms", "fuse_ms", "denoise_ms", "backward_ms",
                "update_ms"} <= set(row)
        assert row["total_ms"] >= 0.90 * parts  # components nest inside total


def test_rerun_is_bit_identical(run, tmp_path):
    cfg, result, out = run
    out2 = tmp_path / "again"
    res2 = train(cfg, out2, seed=0)
    assert filecmp.cmp(out / "metrics.jsonl", out2 / "metrics.jsonl", shallow=False)
    assert filecmp.cmp(out / "last.ckpt", out2 / "last.ckpt", shallow=False)
    assert res2.final_loss == result.final_loss


def test_different_seed_changes_outcome(run, tmp_path):
    cfg, result, out = run
    res2 = train(cfg, tmp_path / "seed1", seed=1)
    assert res2.final_loss != result.final_loss


def test_checkpoint_embeds_config_hash_and_normalizer(run):
    cfg, result, out = run
    ckpt = read_checkpoint(out / "last.ckpt")
    assert ckpt.config_hash == cfg.config_hash()
    assert ckpt.normalizer is not None
    assert ckpt.normalizer.lo.shape == (4,)


def test_reloaded_policy_evaluates_identically(run):
    cfg, result, out = run
    ckpt = read_checkpoint(out / "last.ckpt")
    reports = []
    for _ in range(2):
        set_default_dtype(np.float32)
        try:
            model, _ = build_policy(cfg, seed=0)
            load_into(model, ckpt)
            planner = DiffusionPlanner(model.pipeline, model.net,
                                       make_schedule(cfg.diffusion_steps),
                                       ckpt.normalizer, cfg.horizons.act)
            reports.append(evaluate(planner, cfg, n_rollouts=2, seed=5))
        finally:
            set_default_dtype(np.float64)
    assert reports[0] == reports[1]


def test_checkpoint_params_match_module(run):
    cfg, result, out = run
    ckpt = read_checkpoint(out / "last.ckpt")
    set_default_dtype(np.float32)
    try:
        model, _ = build_policy(cfg, seed=0)
        load_into(model, ckpt)
        for name, p in model.named_parameters():
            np.testing.assert_array_equal(
                np.asarray(p.value.data, np.float64), ckpt.params[name])
    finally:
        set_default_dtype(np.float64)
