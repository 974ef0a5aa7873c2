"""Behaviour-cloning training loop for the diffusion policy.

One process, one modality, one seed. Metrics rows are deterministic for a
fixed (config, seed, machine); anything wall-clock lives in a separate
timings file so the metrics stream stays reproducible byte for byte.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..autodiff import Adam, Module, RngStream, set_default_dtype
from ..models.denoiser import DenoiserNet
from ..models.diffusion import Normalizer, make_schedule, train_loss
from .checkpoint import module_params, save_checkpoint
from .config import ExperimentConfig
from .data import DemoBuffer, ensure_demos
from .evaluate import DiffusionPlanner, EvalReport, evaluate
from .metrics import MetricsRecord, MetricsWriter
from .modality import build_modality
from .timing import ComponentTimer, TimingWriter

log = logging.getLogger(__name__)

TRAIN_STREAM = 303
ACTION_DIM = 4


class PolicyModel(Module):
    """Conditioning pipeline plus denoiser under one parameter namespace."""

    def __init__(self, pipeline, net):
        self.pipeline = pipeline
        self.net = net


@dataclass
class TrainResult:
    config_hash: str
    steps: int
    final_loss: float
    best_success: float | None
    evals: list[tuple[int, EvalReport]] = field(default_factory=list)
    out_dir: Path | None = None


def build_policy(cfg: ExperimentConfig, seed: int) -> tuple[PolicyModel, RngStream]:
    """Deterministic model construction for one (config, seed)."""
    stream = RngStream(seed, TRAIN_STREAM)
    pipeline = build_modality(cfg, stream.child("pipeline"))
    net = DenoiserNet(stream.child("denoiser"),
                      horizon=cfg.horizons.act,
                      action_dim=ACTION_DIM,
                      cond_dim=pipeline.cond_dim,
                      base=cfg.model.denoiser_base,
                      cond_hidden=cfg.model.cond_hidden,
                      t_emb_dim=cfg.model.t_emb_dim)
    return PolicyModel(pipeline, net), stream


def train(cfg: ExperimentConfig, out_dir: str | Path, seed: int,
          dataset_path: str | Path | None = None,
          log_every: int = 50) -> TrainResult:
    """Train one policy; writes metrics.jsonl, timings.jsonl, and SPCK
    checkpoints (best.ckpt on eval improvement, last.ckpt at the end)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    chash = cfg.config_hash()
    set_default_dtype(np.float32)
    try:
        model, stream = build_policy(cfg, seed)
        sched = make_schedule(cfg.diffusion_steps)

        trajs, depths = ensure_demos(cfg, dataset_path)
        buffer = DemoBuffer(trajs, depths, cfg.horizons.obs, cfg.horizons.act)
        normalizer = Normalizer.fit(buffer.all_actions)
        buffer.set_normalizer(normalizer)
        with_depth = cfg.modality == "rgb-d"

        optimizer = Adam(model.parameters(trainable_only=True),
                         lr=cfg.training.lr)
        planner = DiffusionPlanner(model.pipeline, model.net, sched,
                                   normalizer, cfg.horizons.act, ACTION_DIM)
        batch_rng = stream.child("batches")
        loss_rng = stream.child("loss")
        timer = ComponentTimer()

        evals: list[tuple[int, EvalReport]] = []
        best: float | None = None
        last_loss = float("nan")
        n_steps = cfg.training.steps
        with MetricsWriter(out / "metrics.jsonl") as mw, \
                TimingWriter(out / "timings.jsonl") as tw:
            for step in range(1, n_steps + 1):
                t0 = time.perf_counter()
                batch = buffer.sample_batch(batch_rng, cfg.training.batch,
                                            with_depth)
                cond, _ = model.pipeline.condition(batch.obs_window,
                                                   timer=timer)
                with timer.section("denoise"):
                    loss = train_loss(batch.actions, cond, sched,
                                      model.net, loss_rng)
                with timer.section("backward"):
                    loss.backward()
                with timer.section("update"):
                    optimizer.step()
                    optimizer.zero_grad()
                last_loss = float(loss.data)
                total_ms = (time.perf_counter() - t0) * 1000.0
                tw.write(step, total_ms, timer.drain())

                do_eval = (cfg.training.eval_every > 0
                           and step % cfg.training.eval_every == 0)
                if step == n_steps:
                    do_eval = True
                record = None
                if step == 1 or step % log_every == 0 or step == n_steps:
                    record = MetricsRecord(step=step, train_loss=last_loss)
                if do_eval:
                    report = evaluate(planner, cfg,
                                      cfg.training.eval_rollouts, seed)
                    evals.append((step, report))
                    record = MetricsRecord(
                        step=step, train_loss=last_loss,
                        eval_success_rate=report.success_rate,
                        eval_ci_lo=report.ci_lo, eval_ci_hi=report.ci_hi)
                    if best is None or report.success_rate > best:
                        best = report.success_rate
                        save_checkpoint(out / "best.ckpt", module_params(model),
                                        chash, normalizer)
                    log.info("step %d loss %.4f success %.2f",
                             step, last_loss, report.success_rate)
                if record is not None:
                    mw.write(record)
        save_checkpoint(out / "last.ckpt", module_params(model), chash,
                        normalizer)
        if not (out / "best.ckpt").exists():
            save_checkpoint(out / "best.ckpt", module_params(model), chash,
                            normalizer)
        return TrainResult(config_hash=chash, steps=n_steps,
                           final_loss=last_loss, best_success=best,
                           evals=evals, out_dir=out)
    finally:
        set_default_dtype(np.float64)
