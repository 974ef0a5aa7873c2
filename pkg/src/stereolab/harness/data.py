"""Demo corpus generation and training-batch assembly.

Demonstrations live in the binary trajectory format from the world package;
ground-truth left-camera depth (needed only by the rgb-d baseline) rides in a
sidecar .npy, one map per demo. Scenes are static, so a single map per episode
is exact whenever the end effector is not rendered; with render_ee the marker
is absent from the stored depth.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..autodiff import RngStream
from ..world import (TaskInstance, Trajectory, external_rig, read_dataset, render,
                     replay_success, sample_task, scripted_expert, write_dataset)
from .config import ExperimentConfig
from .modality import ViewBatch

PROPRIO_DIM = 4


def task_depth_map(task: TaskInstance) -> np.ndarray:
    """Left-camera scene depth in meters, (H, W) float32."""
    result = render(task.scene, external_rig(task.config))
    return result.depth_left.astype(np.float32)


def generate_demos(cfg: ExperimentConfig,
                   rng: RngStream) -> tuple[list[Trajectory], np.ndarray]:
    """n demos from the scripted expert, plus per-demo left depth maps."""
    trajs = []
    depths = []
    for i in range(cfg.training.demos):
        task = sample_task(cfg.task, rng.child(f"task{i}"))
        trajs.append(scripted_expert(task, rng.child(f"expert{i}")))
        depths.append(task_depth_map(task))
    return trajs, np.stack(depths)


def depth_sidecar_path(dataset_path: str | Path) -> Path:
    return Path(dataset_path).with_suffix(".depth.npy")


def write_demos(trajs: list[Trajectory], depths: np.ndarray,
                dataset_path: str | Path) -> None:
    write_dataset(trajs, dataset_path)
    np.save(depth_sidecar_path(dataset_path), depths)


def load_demos(dataset_path: str | Path) -> tuple[list[Trajectory], np.ndarray | None]:
    trajs = read_dataset(dataset_path)
    sidecar = depth_sidecar_path(dataset_path)
    depths = np.load(sidecar) if sidecar.exists() else None
    return trajs, depths


def ensure_demos(cfg: ExperimentConfig,
                 dataset_path: str | Path | None) -> tuple[list[Trajectory], np.ndarray]:
    """Load demos if the file exists, otherwise generate (and persist if a
    path was given). Generation is driven only by (cfg, cfg.training.data_seed)."""
    if dataset_path is not None and Path(dataset_path).exists():
        trajs, depths = load_demos(dataset_path)
        if depths is None:
            raise FileNotFoundError(f"missing depth sidecar for {dataset_path}")
        return trajs, depths
    rng = RngStream(cfg.training.data_seed, 101)
    trajs, depths = generate_demos(cfg, rng)
    if dataset_path is not None:
        write_demos(trajs, depths, dataset_path)
    return trajs, depths


@dataclass
class Batch:
    obs_window: list  # oldest-first [(views: list[ViewBatch], proprio (B,4))] * H_obs
    actions: np.ndarray  # (B, H_act, A) normalized to [-1, 1]


class DemoBuffer:
    """Flattened (demo, timestep) samples with window/chunk padding.

    Observation windows clamp at the episode start (the first observation
    repeats); action chunks extending past the end repeat the final action,
    which for the scripted expert is the terminal gripper close.
    """

    def __init__(self, trajs: list[Trajectory], depths: np.ndarray | None,
                 h_obs: int, h_act: int, dtype=np.float32):
        if not trajs:
            raise ValueError("no demonstrations")
        self.h_obs = h_obs
        self.h_act = h_act
        self.images = []  # per demo: (L, N, 2, H, W, 3)
        self.proprio = []  # per demo: (L, 4)
        self.action_chunks = []  # per sample: (H_act, A)
        self.index = []  # per sample: (demo, t)
        for d, traj in enumerate(trajs):
            imgs = np.stack([o.images for o in traj.observations]).astype(dtype)
            prop = np.stack([o.proprio for o in traj.observations]).astype(dtype)
            self.images.append(imgs)
            self.proprio.append(prop)
            acts = np.asarray(traj.actions, dtype=np.float64)
            n = len(traj.observations)
            for t in range(n):
                chunk = acts[t:t + h_act]
                if len(chunk) < h_act:
                    pad = np.repeat(chunk[-1:], h_act - len(chunk), axis=0)
                    chunk = np.concatenate([chunk, pad])
                self.action_chunks.append(chunk)
                self.index.append((d, t))
        self.action_chunks = np.stack(self.action_chunks)
        self.depths = None if depths is None else np.asarray(depths, dtype=dtype)
        self.n_views = self.images[0].shape[1]
        self.normalizer = None
        self._norm_chunks = None

    def __len__(self) -> int:
        return len(self.index)

    @property
    def all_actions(self) -> np.ndarray:
        return self.action_chunks.reshape(-1, self.action_chunks.shape[-1])

    def set_normalizer(self, normalizer) -> None:
        self.normalizer = normalizer
        self._norm_chunks = normalizer.normalize(self.action_chunks)

    def sample_batch(self, rng: RngStream, batch: int, with_depth: bool) -> Batch:
        if self._norm_chunks is None:
            raise RuntimeError("set_normalizer before sampling")
        picks = rng.integers(0, len(self.index), (batch,))
        return self.gather(picks, with_depth)

    def gather(self, picks: np.ndarray, with_depth: bool) -> Batch:
        window = []
        for back in range(self.h_obs - 1, -1, -1):
            views = []
            imgs_t = []
            prop_t = []
            for s in picks:
                d, t = self.index[s]
                tt = max(0, t - back)
                imgs_t.append(self.images[d][tt])
                prop_t.append(self.proprio[d][tt])
            imgs_t = np.stack(imgs_t)  # (B, N, 2, H, W, 3)
            prop_t = np.stack(prop_t)
            for v in range(self.n_views):
                depth = None
                if with_depth and v == 0:
                    if self.depths is None:
                        raise ValueError("buffer has no depth maps")
                    depth = np.stack([self.depths[self.index[s][0]] for s in picks])
                views.append(ViewBatch(images=imgs_t[:, v], depth=depth))
            window.append((views, prop_t))
        return Batch(obs_window=window, actions=self._norm_chunks[picks])


def replay_check(trajs: list[Trajectory], cfg: ExperimentConfig,
                 max_demos: int | None = None) -> bool:
    """Every demo must replay to success under the environment dynamics."""
    rng = RngStream(cfg.training.data_seed, 101)
    n = len(trajs) if max_demos is None else min(max_demos, len(trajs))
    for i in range(n):
        task = sample_task(cfg.task, rng.child(f"task{i}"))
        if not replay_success(task, trajs[i].actions):
            return False
    return True
