"""Scripted demonstrator: noisy proportional reach, then close the gripper."""

from __future__ import annotations

import numpy as np

from ..autodiff.rng import RngStream
from .task import ReachEnv, TaskInstance, Trajectory

KP = 0.55
NOISE_STD = 0.004
MAX_ATTEMPTS = 5


class ExpertError(RuntimeError):
    pass


def _attempt(task: TaskInstance, rng: RngStream) -> Trajectory:
    env = ReachEnv(task)
    obs = env.reset()
    observations, actions = [], []
    close_dist = 0.6 * task.success_radius
    while True:
        delta = task.target_point - env.ee
        if np.linalg.norm(delta) <= close_dist:
            a = np.array([0.0, 0.0, 0.0, 1.0])
        else:
            lim = task.config.action_limit
            move = KP * delta + rng.normal((3,), NOISE_STD)
            a = np.concatenate([np.clip(move, -lim, lim), [0.0]])
        a = a.astype(np.float32)
        observations.append(obs)
        actions.append(a)
        obs, done, success = env.step(a)
        if done:
            return Trajectory(observations, np.stack(actions), success)


def scripted_expert(task: TaskInstance, rng: RngStream) -> Trajectory:
    """Returns a successful demonstration; retries with fresh noise, then fails loudly."""
    lo = np.asarray(task.config.workspace_lo)
    hi = np.asarray(task.config.workspace_hi)
    if np.any(task.target_point < lo) or np.any(task.target_point > hi):
        raise ExpertError(f"target {task.target_point} outside the workspace")
    for attempt in range(MAX_ATTEMPTS):
        traj = _attempt(task, rng.child(f"attempt{attempt}"))
        if traj.success:
            return traj
    raise ExpertError(f"no successful demonstration in {MAX_ATTEMPTS} attempts")
