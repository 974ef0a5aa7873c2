"""Closed-loop policy evaluation with chunked replanning.

Episodes run in lockstep: one planner call per replanning cycle produces a
full action chunk for every live environment, the chunk executes open loop
(no rendering between actions), and the observation window refreshes only at
chunk boundaries. Success is the environment's own criterion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..autodiff import RngStream, no_grad
from ..models.diffusion import DiffusionSchedule, Normalizer, sample_actions
from ..world import ReachEnv, StereoObservation, sample_task
from ..world.expert import KP
from .config import ExperimentConfig
from .data import task_depth_map
from .modality import ModalityPipeline, ViewBatch

EVAL_STREAM = 202  # rollout stream id, distinct from data generation


@dataclass(frozen=True)
class EvalReport:
    n_rollouts: int
    successes: int
    success_rate: float
    ci_lo: float
    ci_hi: float


def wilson_interval(successes: int, n: int,
                    confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ValueError("need at least one trial")
    if not 0 <= successes <= n:
        raise ValueError(f"successes {successes} outside [0, {n}]")
    z = float(stats.norm.ppf(0.5 + confidence / 2.0))
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    # roundoff can push an endpoint past the estimate at p = 0 or 1
    lo = min(p, max(0.0, center - half))
    hi = max(p, min(1.0, center + half))
    return (float(lo), float(hi))


class DiffusionPlanner:
    """Trained conditioning pipeline plus denoiser, sampled as a chunk planner."""

    def __init__(self, pipeline: ModalityPipeline, net, sched: DiffusionSchedule,
                 normalizer: Normalizer, h_act: int, action_dim: int = 4):
        self.pipeline = pipeline
        self.net = net
        self.sched = sched
        self.normalizer = normalizer
        self.h_act = h_act
        self.action_dim = action_dim
        self.needs_depth = pipeline.modality == "rgb-d"

    def _window_batches(self, windows, depths):
        h_obs = self.pipeline.h_obs
        n_views = self.pipeline.n_views
        depth_batch = None
        if self.needs_depth:
            depth_batch = np.stack(depths)
        obs_window = []
        for k in range(h_obs):
            frames: list[StereoObservation] = []
            for win in windows:
                # clamp at episode start: the oldest frame repeats
                frames.append(win[max(0, len(win) - h_obs + k)])
            images = np.stack([f.images for f in frames])
            proprio = np.stack([f.proprio for f in frames])
            views = []
            for v in range(n_views):
                d = depth_batch if (v == 0 and self.needs_depth) else None
                views.append(ViewBatch(images=images[:, v], depth=d))
            obs_window.append((views, proprio))
        return obs_window

    def plan(self, envs, windows, depths, rng: RngStream) -> np.ndarray:
        with no_grad():
            cond, _ = self.pipeline.condition(self._window_batches(windows, depths))
        return sample_actions(cond, self.sched, self.net, rng,
                              self.h_act, self.action_dim, self.normalizer)


class ExpertPlanner:
    """Privileged ceiling baseline: simulates the noise-free demonstration
    controller forward through the known dynamics for one chunk."""

    needs_depth = False

    def __init__(self, h_act: int):
        self.h_act = h_act

    def plan(self, envs, windows, depths, rng: RngStream) -> np.ndarray:
        chunks = np.zeros((len(envs), self.h_act, 4))
        for j, env in enumerate(envs):
            ee = env.ee.copy()
            target = env.task.target_point
            close_dist = 0.6 * env.task.success_radius
            lim = env.config.action_limit
            lo = np.asarray(env.config.workspace_lo) + 0.02
            hi = np.asarray(env.config.workspace_hi) - 0.02
            for k in range(self.h_act):
                delta = target - ee
                if np.linalg.norm(delta) <= close_dist:
                    a = np.array([0.0, 0.0, 0.0, 1.0])
                else:
                    a = np.concatenate([np.clip(KP * delta, -lim, lim), [0.0]])
                chunks[j, k] = a
                ee = np.clip(ee + a[:3], lo, hi)
        return chunks


class RandomPlanner:
    """Uniform actions within the per-step limits."""

    needs_depth = False

    def __init__(self, h_act: int, action_limit: float):
        self.h_act = h_act
        self.action_limit = action_limit

    def plan(self, envs, windows, depths, rng: RngStream) -> np.ndarray:
        chunks = rng.uniform(-1.0, 1.0, shape=(len(envs), self.h_act, 4))
        chunks[:, :, :3] *= self.action_limit
        return chunks


def evaluate(planner, cfg: ExperimentConfig, n_rollouts: int,
             seed: int) -> EvalReport:
    """Roll out the planner on freshly sampled tasks; returns the success
    rate with its 95% Wilson interval."""
    if n_rollouts <= 0:
        raise ValueError("need at least one rollout")
    stream = RngStream(seed, EVAL_STREAM)
    envs, windows, depths = [], [], []
    for i in range(n_rollouts):
        task = sample_task(cfg.task, stream.child(f"task{i}"))
        env = ReachEnv(task)
        obs = env.reset()
        envs.append(env)
        windows.append([obs])
        depths.append(task_depth_map(task) if planner.needs_depth else None)
    h_obs = cfg.horizons.obs
    alive = list(range(n_rollouts))
    results = [False] * n_rollouts
    cycle = 0
    while alive:
        chunk = planner.plan([envs[i] for i in alive],
                             [windows[i] for i in alive],
                             [depths[i] for i in alive],
                             stream.child(f"plan{cycle}"))
        still = []
        for j, i in enumerate(alive):
            env = envs[i]
            done = False
            for a in chunk[j]:
                done, success = env.step_fast(a)
                if done:
                    results[i] = success
                    break
            if not done:
                windows[i].append(env.observe())
                if len(windows[i]) > h_obs:
                    windows[i] = windows[i][-h_obs:]
                still.append(i)
        alive = still
        cycle += 1
    k = sum(results)
    lo, hi = wilson_interval(k, n_rollouts)
    return EvalReport(n_rollouts=n_rollouts, successes=k,
                      success_rate=k / n_rollouts, ci_lo=lo, ci_hi=hi)
