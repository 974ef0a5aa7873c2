"""Observation-to-condition pipelines, one per input modality.

Each view (external rig, wrist rig) gets its own tower with separate
parameters; eyes within a pair always share the encoder. All towers end in a
(B, d_z) embedding per timestep, so the downstream condition layout is the
same for every modality and the comparison isolates the input signal.

Trainable parameter budgets are equalized across modalities (within 10%) by
solving the pooling-MLP hidden width against the stereo tower's budget, so no
baseline wins or loses on capacity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import (Linear, Module, RngStream, Tensor, concat, gelu, mean,
                        reshape, tensor)
from ..models import PairEncoder, ConvEncoder, StereoFusion, aggregate
from .config import MODALITIES, ConfigError, ExperimentConfig

# Total stride 4: at 32x32 input this yields an 8x8 token grid, fine enough
# for cross-attention to resolve sub-token disparity. The prior stream
# receives the same total stride so the grids line up.
ENCODER_STRIDES = (2, 2, 1, 1)
DEPTH_FAR_M = 2.0  # depth maps clip here; background (inf) saturates to 1.0


@dataclass
class ViewBatch:
    """One timestep of raw observations for one view across a batch."""

    images: np.ndarray  # (B, 2, H, W, 3), eyes = (left, right), values in [0,1]
    depth: np.ndarray | None = None  # (B, H, W) left-camera depth, meters


def prep_depth(depth: np.ndarray) -> np.ndarray:
    """Meters to [0,1] with the far plane (and background inf) at 1.0."""
    return np.minimum(np.asarray(depth, dtype=np.float64), DEPTH_FAR_M) / DEPTH_FAR_M


def _pool_tokens(fmap: Tensor) -> Tensor:
    b, h, w, c = fmap.shape
    return mean(reshape(fmap, (b, h * w, c)), axis=1)


class _Head(Module):
    """Pool-side MLP: (B, width) -> (B, d_z)."""

    def __init__(self, rng: RngStream, width: int, hidden: int, d_z: int):
        self.h1 = Linear(width, hidden, rng.child("h1"))
        self.h2 = Linear(hidden, d_z, rng.child("h2"))

    def __call__(self, pooled: Tensor) -> Tensor:
        return self.h2(gelu(self.h1(pooled)))


class StereoTower(Module):
    """Shared-weight pair encoder + stereo fusion (full or bypassed)."""

    def __init__(self, rng: RngStream, cfg: ExperimentConfig, grid: tuple[int, int],
                 use_prior: bool, bypass: bool, hidden: int):
        m = cfg.model
        self.pair = PairEncoder(rng.child("enc"), channels=m.channels,
                                strides=ENCODER_STRIDES, use_prior=use_prior,
                                prior_channels=m.prior_channels)
        self.fusion = StereoFusion(rng.child("fus"), d=m.channels, d_z=cfg.d_z,
                                   n_layers=m.layers, n_heads=m.heads, grid=grid,
                                   mlp_hidden=hidden, bypass=bypass)

    def encode(self, vb: ViewBatch):
        return self.pair(tensor(vb.images[:, 0]), tensor(vb.images[:, 1]))

    def fuse(self, encoded) -> Tensor:
        return self.fusion(*encoded)

    def __call__(self, vb: ViewBatch) -> Tensor:
        return self.fuse(self.encode(vb))


class MonoTower(Module):
    """Left-eye-only tokenizer (with prior stream) + pool MLP.

    Only images[:, 0] is read; the right eye never enters the graph.
    """

    def __init__(self, rng: RngStream, cfg: ExperimentConfig, grid: tuple[int, int],
                 hidden: int):
        m = cfg.model
        self.pair = PairEncoder(rng.child("enc"), channels=m.channels,
                                strides=ENCODER_STRIDES, use_prior=True,
                                prior_channels=m.prior_channels)
        self.head = _Head(rng.child("head"), m.channels, hidden, cfg.d_z)

    def encode(self, vb: ViewBatch) -> Tensor:
        return self.pair.encode_one(tensor(vb.images[:, 0]))

    def fuse(self, fmap: Tensor) -> Tensor:
        return self.head(_pool_tokens(fmap))

    def __call__(self, vb: ViewBatch) -> Tensor:
        return self.fuse(self.encode(vb))


class RgbdTower(Module):
    """Left RGB through the prior tokenizer, plus ground-truth depth repeated
    to 3 channels through a separate encoder; streams pooled then mixed."""

    def __init__(self, rng: RngStream, cfg: ExperimentConfig, grid: tuple[int, int],
                 hidden: int):
        m = cfg.model
        self.pair = PairEncoder(rng.child("enc"), channels=m.channels,
                                strides=ENCODER_STRIDES, use_prior=True,
                                prior_channels=m.prior_channels)
        self.depth_enc = ConvEncoder(rng.child("depth"), channels=m.channels,
                                     strides=ENCODER_STRIDES)
        self.head = _Head(rng.child("head"), 2 * m.channels, hidden, cfg.d_z)

    def encode(self, vb: ViewBatch):
        if vb.depth is None:
            raise ValueError("rgb-d pipeline needs ground-truth depth maps")
        d3 = np.repeat(prep_depth(vb.depth)[..., None], 3, axis=-1)
        return (self.pair.encode_one(tensor(vb.images[:, 0])),
                self.depth_enc(tensor(d3)))

    def fuse(self, encoded) -> Tensor:
        f_rgb, f_d = encoded
        pooled = concat([_pool_tokens(f_rgb), _pool_tokens(f_d)], axis=-1)
        return self.head(pooled)

    def __call__(self, vb: ViewBatch) -> Tensor:
        return self.fuse(self.encode(vb))


def _make_tower(modality: str, rng: RngStream, cfg: ExperimentConfig,
                grid: tuple[int, int], hidden: int) -> Module:
    if modality == "stereo":
        return StereoTower(rng, cfg, grid, use_prior=True, bypass=False, hidden=hidden)
    if modality == "stereo-no-fusion":
        return StereoTower(rng, cfg, grid, use_prior=True, bypass=True, hidden=hidden)
    if modality == "stereo-no-prior":
        return StereoTower(rng, cfg, grid, use_prior=False, bypass=False, hidden=hidden)
    if modality == "multi-view":
        return StereoTower(rng, cfg, grid, use_prior=False, bypass=True, hidden=hidden)
    if modality == "mono-rgb":
        return MonoTower(rng, cfg, grid, hidden)
    if modality == "rgb-d":
        return RgbdTower(rng, cfg, grid, hidden)
    raise ConfigError(f"unknown modality {modality!r}")


def _trainable_count(module: Module) -> int:
    return sum(int(np.prod(p.shape)) for p in module.parameters() if p.trainable)


def _tower_count(modality: str, cfg: ExperimentConfig, grid, hidden: int) -> int:
    return _trainable_count(_make_tower(modality, RngStream(0, 0), cfg, grid, hidden))


def _solve_hidden(modality: str, cfg: ExperimentConfig, grid,
                  target: int) -> int:
    # param count is monotone in the head hidden width; binary search
    lo, hi = 4, 32768
    if _tower_count(modality, cfg, grid, lo) >= target:
        return lo
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _tower_count(modality, cfg, grid, mid) < target:
            lo = mid
        else:
            hi = mid
    below = abs(_tower_count(modality, cfg, grid, lo) - target)
    above = abs(_tower_count(modality, cfg, grid, hi) - target)
    return lo if below <= above else hi


class ModalityPipeline(Module):
    """Per-view towers plus observation-window aggregation into one condition
    vector of length H_obs * (n_views * d_z + proprio_dim)."""

    def __init__(self, rng: RngStream, cfg: ExperimentConfig, hidden: int,
                 budget: int, reference_budget: int):
        self.modality = cfg.modality
        self.n_views = cfg.task.n_views
        self.d_z = cfg.d_z
        self.h_obs = cfg.horizons.obs
        self.grid = _encoder_grid(cfg)
        self.hidden = hidden
        self.budget = budget
        self.reference_budget = reference_budget
        self.towers = [_make_tower(cfg.modality, rng.child(f"view{i}"), cfg,
                                   self.grid, hidden)
                       for i in range(self.n_views)]

    @property
    def cond_dim(self) -> int:
        return self.h_obs * (self.n_views * self.d_z + 4)

    def condition(self, obs_window, timer=None) -> tuple[Tensor, dict]:
        """obs_window: oldest-first list of (views: list[ViewBatch], proprio (B,4))."""
        if len(obs_window) != self.h_obs:
            raise ValueError(f"need {self.h_obs} observation timesteps, "
                             f"got {len(obs_window)}")
        history = []
        for views, proprio in obs_window:
            if len(views) != self.n_views:
                raise ValueError(f"need {self.n_views} views, got {len(views)}")
            zs = []
            for tower, vb in zip(self.towers, views):
                if timer is None:
                    zs.append(tower(vb))
                else:
                    with timer.section("encode"):
                        enc = tower.encode(vb)
                    with timer.section("fuse"):
                        zs.append(tower.fuse(enc))
            history.append((zs, tensor(np.asarray(proprio))))
        return aggregate(history, self.n_views)


def _encoder_grid(cfg: ExperimentConfig) -> tuple[int, int]:
    stride = int(np.prod(ENCODER_STRIDES))
    h, w = cfg.task.height, cfg.task.width
    if h % stride or w % stride:
        raise ConfigError(f"resolution {h}x{w} not divisible by encoder stride {stride}")
    return (h // stride, w // stride)


def build_modality(cfg: ExperimentConfig, rng: RngStream) -> ModalityPipeline:
    """Construct the pipeline for cfg.modality with a budget-matched head.

    The stereo tower (with its configured pooling width) is the capacity
    reference; every other modality's head hidden width is solved so its
    trainable count lands within 10% of that reference.
    """
    if cfg.modality not in MODALITIES:
        raise ConfigError(f"unknown modality {cfg.modality!r}")
    grid = _encoder_grid(cfg)
    reference = _tower_count("stereo", cfg, grid, cfg.model.mlp_hidden)
    if cfg.modality == "stereo":
        hidden = cfg.model.mlp_hidden
    else:
        hidden = _solve_hidden(cfg.modality, cfg, grid, reference)
    budget = _tower_count(cfg.modality, cfg, grid, hidden)
    if abs(budget - reference) > 0.10 * reference:
        raise ConfigError(
            f"{cfg.modality} budget {budget} deviates more than 10% from the "
            f"stereo reference {reference}; adjust model widths")
    return ModalityPipeline(rng, cfg, hidden, budget, reference)
