"""End-to-end gradient verification on a miniature stereo policy.

Exercises every trainable stage in one scalar loss: shared-weight pair
encoding with the frozen prior path, cross-attention fusion, window
aggregation with proprioception, and the denoiser's noise-prediction MSE.
The diffusion draw (timesteps and noise) is fixed up front so the loss is a
deterministic function of the parameters.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ..autodiff import (Module, RngStream, grad_check, mean,
                        set_default_dtype, tensor)
from ..models.denoiser import DenoiserNet
from ..models.diffusion import make_schedule
from ..models.encoder import PairEncoder
from ..models.fusion import StereoFusion, aggregate

PROPRIO_DIM = 4
ACTION_DIM = 4


@dataclass(frozen=True)
class GradCheckReport:
    max_rel_err: float
    n_params: int
    n_entries_checked: int
    runtime_s: float


class MiniPolicy(Module):
    """16x16 inputs, 4x4 token grid, 4-step action horizon."""

    def __init__(self, rng: RngStream):
        self.pair = PairEncoder(rng.child("pair"), channels=16,
                                strides=(2, 2, 1, 1), use_prior=True,
                                prior_channels=4)
        self.fusion = StereoFusion(rng.child("fusion"), d=16, d_z=16,
                                   n_layers=1, n_heads=2, grid=(4, 4),
                                   mlp_hidden=16)
        self.net = DenoiserNet(rng.child("net"), horizon=4,
                               action_dim=ACTION_DIM,
                               cond_dim=16 + PROPRIO_DIM, base=8,
                               cond_hidden=16, t_emb_dim=8)

    def loss(self, left, right, proprio, x_tau, taus, eps_target):
        fl, fr = self.pair(tensor(left), tensor(right))
        z = self.fusion(fl, fr)
        cond, _ = aggregate([([z], tensor(proprio))], n_views=1)
        pred = self.net(tensor(x_tau), taus, cond)
        diff = pred + tensor(eps_target) * (-1.0)
        return mean(diff * diff)


def full_pipeline_gradcheck(seed: int = 0, batch: int = 2,
                            max_entries: int = 6,
                            eps: float = 1e-5) -> GradCheckReport:
    """Compare analytic and central-difference gradients for every parameter
    of the miniature policy (subsampled entries per parameter)."""
    t0 = time.perf_counter()
    set_default_dtype(np.float64)
    rng = RngStream(seed, 505)
    model = MiniPolicy(rng.child("model"))

    data = rng.child("data")
    left = data.uniform(shape=(batch, 16, 16, 3))
    right = data.uniform(shape=(batch, 16, 16, 3))
    proprio = data.normal((batch, PROPRIO_DIM))
    a0 = data.uniform(-1.0, 1.0, shape=(batch, 4, ACTION_DIM))
    sched = make_schedule(10)
    taus = data.integers(1, sched.n_steps + 1, (batch,))
    noise = data.normal(a0.shape)
    ab = sched.alpha_bar[taus][:, None, None]
    x_tau = np.sqrt(ab) * a0 + np.sqrt(1.0 - ab) * noise

    def f():
        return model.loss(left, right, proprio, x_tau, taus, noise)

    params = model.parameters()
    trainable = [p for p in params if p.trainable]
    err = grad_check(f, trainable, eps=eps, max_entries=max_entries)
    checked = sum(min(max_entries, int(np.prod(p.shape))) for p in trainable)
    return GradCheckReport(max_rel_err=float(err), n_params=len(trainable),
                           n_entries_checked=checked,
                           runtime_s=time.perf_counter() - t0)
