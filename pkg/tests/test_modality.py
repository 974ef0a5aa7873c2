"""Modality pipelines: budget parity, view usage, condition layout."""

import numpy as np
import pytest

from stereolab.autodiff import RngStream
from stereolab.harness.config import (MODALITIES, ConfigError, ExperimentConfig,
                                      HorizonConfig, ModelConfig)
from stereolab.harness.modality import (ViewBatch, build_modality, prep_depth)
from stereolab.world import TaskConfig


def tiny_config(modality="stereo", n_views=1):
    return ExperimentConfig(
        task=TaskConfig(width=16, height=16, n_views=n_views, n_distractors=0),
        modality=modality,
        model=ModelConfig(channels=8, layers=1, heads=2, prior_channels=4,
                          mlp_hidden=48, denoiser_base=8, cond_hidden=16,
                          t_emb_dim=8),
        d_z=16,
        horizons=HorizonConfig(obs=2, act=4),
    )


def make_window(rng, cfg, batch=2, with_depth=False):
    h, w = cfg.task.height, cfg.task.width
    window = []
    for _ in range(cfg.horizons.obs):
        views = []
        for _ in range(cfg.task.n_views):
            imgs = rng.uniform(0.0, 1.0, (batch, 2, h, w, 3))
            depth = rng.uniform(0.3, 1.2, (batch, h, w)) if with_depth else None
            views.append(ViewBatch(images=imgs, depth=depth))
        proprio = rng.normal((batch, 4), scale=0.1)
        window.append((views, proprio))
    return window


@pytest.mark.parametrize("modality", MODALITIES)
def test_budgets_within_ten_percent(modality):
    pipe = build_modality(tiny_config(modality), RngStream(0, 1))
    ref = pipe.reference_budget
    assert abs(pipe.budget - ref) <= 0.10 * ref


@pytest.mark.parametrize("modality", MODALITIES)
def test_condition_shape_and_finite(modality):
    cfg = tiny_config(modality)
    pipe = build_modality(cfg, RngStream(0, 1))
    window = make_window(RngStream(3, 4), cfg, batch=2,
                         with_depth=(modality == "rgb-d"))
    cond, layout = pipe.condition(window)
    assert cond.shape == (2, pipe.cond_dim)
    assert np.all(np.isfinite(cond.data))
    assert pipe.cond_dim == cfg.horizons.obs * (cfg.task.n_views * cfg.d_z + 4)


def test_same_seed_same_condition():
    cfg = tiny_config()
    window = make_window(RngStream(3, 4), cfg)
    c1, _ = build_modality(cfg, RngStream(0, 1)).condition(window)
    c2, _ = build_modality(cfg, RngStream(0, 1)).condition(window)
    np.testing.assert_array_equal(c1.data, c2.data)


def test_mono_ignores_right_eye():
    cfg = tiny_config("mono-rgb")
    pipe = build_modality(cfg, RngStream(0, 1))
    window = make_window(RngStream(3, 4), cfg)
    base, _ = pipe.condition(window)
    for views, _ in window:
        views[0].images[:, 1] = 0.0  # blank the right eye everywhere
    blanked, _ = pipe.condition(window)
    np.testing.assert_array_equal(base.data, blanked.data)


def test_stereo_reads_right_eye():
    cfg = tiny_config("stereo")
    pipe = build_modality(cfg, RngStream(0, 1))
    window = make_window(RngStream(3, 4), cfg)
    base, _ = pipe.condition(window)
    for views, _ in window:
        views[0].images[:, 1] = 0.0
    blanked, _ = pipe.condition(window)
    assert not np.allclose(base.data, blanked.data)


def test_rgbd_requires_depth():
    cfg = tiny_config("rgb-d")
    pipe = build_modality(cfg, RngStream(0, 1))
    window = make_window(RngStream(3, 4), cfg, with_depth=False)
    with pytest.raises(ValueError, match="depth"):
        pipe.condition(window)


def test_rgbd_reads_depth():
    cfg = tiny_config("rgb-d")
    pipe = build_modality(cfg, RngStream(0, 1))
    window = make_window(RngStream(3, 4), cfg, with_depth=True)
    base, _ = pipe.condition(window)
    for views, _ in window:
        views[0].depth = views[0].depth + 0.3
    shifted, _ = pipe.condition(window)
    assert not np.allclose(base.data, shifted.data)


def test_prep_depth_clips_far_plane():
    d = np.array([0.0, 1.0, 2.0, 5.0, np.inf])
    out = prep_depth(d)
    np.testing.assert_allclose(out, [0.0, 0.5, 1.0, 1.0, 1.0])


def test_window_length_validated():
    cfg = tiny_config()
    pipe = build_modality(cfg, RngStream(0, 1))
    window = make_window(RngStream(3, 4), cfg)[:1]
    with pytest.raises(ValueError, match="observation timesteps"):
        pipe.condition(window)


def test_view_count_validated():
    cfg = tiny_config(n_views=2)
    pipe = build_modality(cfg, RngStream(0, 1))
    window = make_window(RngStream(3, 4), cfg)
    window = [(views[:1], prop) for views, prop in window]
    with pytest.raises(ValueError, match="views"):
        pipe.condition(window)


def test_two_views_use_separate_towers():
    cfg = tiny_config(n_views=2)
    pipe = build_modality(cfg, RngStream(0, 1))
    assert len(pipe.towers) == 2
    p0 = {n for n, _ in pipe.towers[0].named_parameters()}
    w0 = next(p for n, p in pipe.towers[0].named_parameters())
    w1 = next(p for n, p in pipe.towers[1].named_parameters())
    assert p0  # towers expose parameters
    assert not np.array_equal(w0.value.data, w1.value.data)


def test_resolution_must_match_encoder_stride():
    cfg = ExperimentConfig(task=TaskConfig(width=18, height=16, n_distractors=0))
    with pytest.raises(ConfigError, match="stride"):
        build_modality(cfg, RngStream(0, 1))
