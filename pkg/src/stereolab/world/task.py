"""Depth-ambiguous reach task.

The target sphere sits on the ray from the left external camera through a
fixed anchor pixel, at a depth drawn uniformly from a configured range. With
`ambiguity="hard"` the sphere is drawn at constant angular size, so the left
external image is exactly independent of depth (object geometry scales along
the rays through the camera origin) and a monocular observer cannot recover
it. Distractors are kept clear of the anchor ray in both eyes across the
whole depth range so occlusion never breaks that invariance.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..autodiff.rng import RngStream
from .camera import CameraIntrinsics, CameraRig, Pose
from .render import render
from .scene import Scene, SceneObject

TARGET_OID = 1
EE_OID = 999

_DISTRACTOR_COLORS = np.array([
    [0.25, 0.55, 0.85],
    [0.30, 0.75, 0.35],
    [0.80, 0.70, 0.25],
    [0.60, 0.40, 0.80],
    [0.45, 0.75, 0.75],
])


@dataclass(frozen=True)
class TaskConfig:
    width: int = 64
    height: int = 64
    focal_px: float | None = None  # defaults to width
    baseline_m: float = 0.06
    wrist_baseline_m: float = 0.02
    n_views: int = 2  # 1 = external rig only, 2 = external + wrist
    depth_range: tuple[float, float] = (0.4, 0.9)
    anchor_frac: tuple[float, float] = (0.60, 0.46)  # anchor pixel / resolution
    ambiguity: str = "hard"  # "hard" (constant angular size) or "natural"
    target_angular_radius_px: float = 3.4  # hard mode apparent radius
    target_radius_m: float = 0.055  # natural mode physical radius
    n_distractors: int = 3
    success_radius: float = 0.05
    max_steps: int = 48
    action_limit: float = 0.05  # per position component, meters
    ee_home: tuple[float, float, float] = (0.0, 0.25, 0.30)
    render_ee: bool = False
    checker: bool = False
    workspace_lo: tuple[float, float, float] = (-0.55, -0.45, 0.05)
    workspace_hi: tuple[float, float, float] = (0.55, 0.50, 1.25)

    def __post_init__(self):
        if self.depth_range[0] > self.depth_range[1]:
            raise ValueError(f"bad depth range {self.depth_range}")
        if self.ambiguity not in ("hard", "natural"):
            raise ValueError(f"ambiguity must be 'hard' or 'natural', got {self.ambiguity!r}")
        if self.n_views not in (1, 2):
            raise ValueError(f"n_views must be 1 or 2, got {self.n_views}")

    @property
    def focal(self) -> float:
        return self.focal_px if self.focal_px is not None else float(self.width)

    @property
    def anchor_px(self) -> tuple[float, float]:
        return (self.anchor_frac[0] * self.width, self.anchor_frac[1] * self.height)


@dataclass(frozen=True)
class TaskInstance:
    config: TaskConfig
    scene: Scene
    target_point: np.ndarray
    target_depth: float
    success_radius: float
    max_steps: int
    ambiguity_axis: np.ndarray  # unit vector along the anchor ray


@dataclass(frozen=True)
class StereoObservation:
    images: np.ndarray  # (N_views, 2, H, W, 3) float64 in [0,1], eyes = (left, right)
    proprio: np.ndarray  # (4,) float32: ee xyz + gripper state
    timestep: int


@dataclass
class Trajectory:
    observations: list[StereoObservation]
    actions: np.ndarray  # (T, 4) float32: delta xyz + gripper command
    success: bool

    def __post_init__(self):
        self.actions = np.asarray(self.actions, dtype=np.float32)
        if len(self.observations) != len(self.actions):
            raise ValueError(
                f"{len(self.observations)} observations vs {len(self.actions)} actions")

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        if self.success != other.success or len(self.observations) != len(other.observations):
            return False
        if not np.array_equal(self.actions, other.actions):
            return False
        for a, b in zip(self.observations, other.observations):
            if a.timestep != b.timestep:
                return False
            if not (np.array_equal(a.images, b.images) and np.array_equal(a.proprio, b.proprio)):
                return False
        return True


def external_rig(config: TaskConfig, baseline: float | None = None) -> CameraRig:
    intr = CameraIntrinsics(config.focal, (config.width / 2.0, config.height / 2.0),
                            (config.width, config.height))
    b = config.baseline_m if baseline is None else baseline
    return CameraRig(intr, b)


def wrist_rig(config: TaskConfig, ee: np.ndarray) -> CameraRig:
    """Small-baseline rig that translates with the end effector."""
    intr = CameraIntrinsics(config.focal, (config.width / 2.0, config.height / 2.0),
                            (config.width, config.height))
    offset = np.array([0.0, -0.10, -0.16])
    return CameraRig(intr, config.wrist_baseline_m, Pose(np.eye(3), np.asarray(ee) + offset))


def _anchor_dir(config: TaskConfig) -> np.ndarray:
    u0, v0 = config.anchor_px
    f = config.focal
    return np.array([(u0 - config.width / 2.0) / f, (v0 - config.height / 2.0) / f, 1.0])


def _target_radius(config: TaskConfig, depth: float) -> float:
    if config.ambiguity == "hard":
        return config.target_angular_radius_px * depth / config.focal
    return config.target_radius_m


def sample_task(config: TaskConfig, rng: RngStream,
                depth_override: float | None = None) -> TaskInstance:
    """Draw a task instance; depth_override forces the target depth while
    consuming the rng identically (used to probe depth invariance)."""
    z_min, z_max = config.depth_range
    depth = float(rng.uniform(z_min, z_max, ()))
    if depth_override is not None:
        depth = float(depth_override)
    d = _anchor_dir(config)
    target_point = d * depth
    radius = _target_radius(config, depth)
    target = SceneObject("sphere", target_point, radius, np.array([0.85, 0.25, 0.20]), TARGET_OID)

    objects = [target]
    f = config.focal
    u0, v0 = config.anchor_px
    # keep-out half width around the anchor, in pixels, across the whole depth
    # range and both eyes (right-eye target u shifts left by the disparity)
    app_r = (config.target_angular_radius_px if config.ambiguity == "hard"
             else f * config.target_radius_m / z_min)
    disp_max = f * config.baseline_m / z_min
    margin = 3.0
    lo = np.asarray(config.workspace_lo)
    hi = np.asarray(config.workspace_hi)
    for k in range(config.n_distractors):
        child = rng.child(f"distractor{k}")
        for _ in range(200):
            du = float(child.uniform(0.10 * config.width, 0.90 * config.width, ()))
            dv = float(child.uniform(0.10 * config.height, 0.90 * config.height, ()))
            dz = float(child.uniform(z_min, z_max, ()))
            ang = float(child.uniform(2.2, 4.2, ()))  # apparent radius, px
            kind = "sphere" if int(child.integers(0, 2, ())) == 0 else "box"
            size_m = ang * dz / f
            d_r_px = ang * 1.5 if kind == "box" else ang  # box diagonal bound
            clear_u = (du + d_r_px < u0 - disp_max - app_r - margin) or \
                      (du - d_r_px > u0 + app_r + margin)
            clear_v = (dv + d_r_px < v0 - app_r - margin) or (dv - d_r_px > v0 + app_r + margin)
            if not (clear_u or clear_v):
                continue
            center = np.array([(du - config.width / 2.0) / f * dz,
                               (dv - config.height / 2.0) / f * dz, dz])
            ext = np.full(3, size_m * (1.0 if kind == "sphere" else 0.9))
            if np.any(center - ext < lo) or np.any(center + ext > hi):
                continue
            color = _DISTRACTOR_COLORS[int(child.integers(0, len(_DISTRACTOR_COLORS), ()))]
            size = size_m if kind == "sphere" else ext
            objects.append(SceneObject(kind, center, size, color, 2 + k))
            break
        else:
            raise RuntimeError("could not place distractors inside the workspace")

    scene = Scene(tuple(objects), TARGET_OID, (lo, hi), checker=config.checker)
    axis = d / np.linalg.norm(d)
    return TaskInstance(config, scene, target_point, depth,
                        config.success_radius, config.max_steps, axis)


class ReachEnv:
    """Kinematic point end-effector; success = inside the target ball with
    the gripper closed. Rendering happens per observation request."""

    def __init__(self, task: TaskInstance):
        self.task = task
        self.config = task.config
        self._rig = external_rig(self.config)
        self._reset_state()

    def _reset_state(self) -> None:
        self.ee = np.array(self.config.ee_home, dtype=np.float64)
        self.gripper = 0.0
        self.t = 0
        self.done = False
        self.success = False

    def reset(self) -> StereoObservation:
        self._reset_state()
        return self.observe()

    def _scene(self) -> Scene:
        if not self.config.render_ee:
            return self.task.scene
        marker = SceneObject("sphere", self.ee, 0.02, np.array([0.35, 0.45, 0.95]), EE_OID)
        return self.task.scene.with_extra([marker])

    def observe(self) -> StereoObservation:
        scene = self._scene()
        views = [render(scene, self._rig)]
        if self.config.n_views == 2:
            views.append(render(scene, wrist_rig(self.config, self.ee)))
        images = np.stack([np.stack([v.left, v.right]) for v in views])
        proprio = np.concatenate([self.ee, [self.gripper]]).astype(np.float32)
        return StereoObservation(images, proprio, self.t)

    def step_fast(self, action: np.ndarray) -> tuple[bool, bool]:
        """Advance dynamics without rendering; returns (done, success)."""
        if self.done:
            raise RuntimeError("episode is done; call reset()")
        a = np.asarray(action, dtype=np.float64).reshape(4)
        lim = self.config.action_limit
        move = np.clip(a[:3], -lim, lim)
        self.ee = np.clip(self.ee + move,
                          np.asarray(self.config.workspace_lo) + 0.02,
                          np.asarray(self.config.workspace_hi) - 0.02)
        self.gripper = float(np.clip(self.gripper + np.clip(a[3], -1.0, 1.0), 0.0, 1.0))
        self.t += 1
        dist = float(np.linalg.norm(self.ee - self.task.target_point))
        self.success = dist <= self.task.success_radius and self.gripper >= 0.8
        self.done = self.success or self.t >= self.task.max_steps
        return self.done, self.success

    def step(self, action: np.ndarray) -> tuple[StereoObservation, bool, bool]:
        done, success = self.step_fast(action)
        return self.observe(), done, success


def replay_success(task: TaskInstance, actions: np.ndarray) -> bool:
    """Re-run a recorded action sequence through fresh dynamics."""
    env = ReachEnv(task)
    for a in actions:
        done, success = env.step_fast(a)
        if done:
            return success
    return env.success
