"""DDPM machinery: schedule, forward corruption, training loss, ancestral sampling.

Schedule arrays carry a sentinel at index 0 (beta=0, alpha_bar=1) so the
1-based diffusion step indexes directly; step 0 means "clean data".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import RngStream, Tensor, mean, no_grad, tensor


@dataclass(frozen=True)
class DiffusionSchedule:
    n_steps: int
    betas: np.ndarray  # (T+1,), betas[0] = 0
    alphas: np.ndarray  # 1 - betas
    alpha_bar: np.ndarray  # cumulative products, alpha_bar[0] = 1
    posterior_var: np.ndarray  # beta_tilde, variance of the ancestral step


def make_schedule(n_steps: int, kind: str = "linear",
                  beta_start: float = 1e-4, beta_end: float = 2e-2) -> DiffusionSchedule:
    if n_steps < 1:
        raise ValueError(f"need at least 1 diffusion step, got {n_steps}")
    if kind != "linear":
        raise ValueError(f"unknown schedule kind {kind!r}")
    betas = np.concatenate([[0.0], np.linspace(beta_start, beta_end, n_steps)])
    alphas = 1.0 - betas
    alpha_bar = np.cumprod(alphas)
    # beta_tilde_t = beta_t * (1 - abar_{t-1}) / (1 - abar_t); zero at t=0,1
    post = np.zeros_like(betas)
    post[1:] = betas[1:] * (1.0 - alpha_bar[:-1]) / (1.0 - alpha_bar[1:])
    return DiffusionSchedule(n_steps, betas, alphas, alpha_bar, post)


def _check_tau(tau: int, sched: DiffusionSchedule, lo: int = 0) -> None:
    if not (lo <= tau <= sched.n_steps):
        raise ValueError(f"diffusion step {tau} outside [{lo}, {sched.n_steps}]")


def ddpm_forward(a0: np.ndarray, tau: int, noise: np.ndarray,
                 sched: DiffusionSchedule) -> np.ndarray:
    """x^(tau) = sqrt(abar) a0 + sqrt(1 - abar) noise; tau=0 returns a0."""
    _check_tau(tau, sched)
    ab = sched.alpha_bar[tau]
    return np.sqrt(ab) * a0 + np.sqrt(1.0 - ab) * noise


class Normalizer:
    """Per-dimension min/max map to [-1, 1]; degenerate dims map to 0."""

    def __init__(self, lo: np.ndarray, hi: np.ndarray):
        self.lo = np.asarray(lo, dtype=np.float64)
        self.hi = np.asarray(hi, dtype=np.float64)
        span = self.hi - self.lo
        self._scale = np.where(span > 0, 2.0 / np.where(span > 0, span, 1.0), 0.0)

    @classmethod
    def fit(cls, values: np.ndarray) -> "Normalizer":
        flat = values.reshape(-1, values.shape[-1]).astype(np.float64)
        return cls(flat.min(axis=0), flat.max(axis=0))

    def normalize(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.lo) * self._scale - np.where(
            self._scale > 0, 1.0, 0.0)

    def denormalize(self, y: np.ndarray) -> np.ndarray:
        offset = np.where(self._scale > 0, 1.0, 0.0)
        scale = np.where(self._scale > 0, self._scale, 1.0)
        return (np.asarray(y, dtype=np.float64) + offset) / scale + self.lo

    def state(self) -> dict[str, np.ndarray]:
        return {"lo": self.lo.copy(), "hi": self.hi.copy()}


def train_loss(a0: np.ndarray, cond: Tensor, sched: DiffusionSchedule,
               net, rng: RngStream) -> Tensor:
    """Noise-prediction MSE on one batch of normalized action chunks."""
    if a0.ndim != 3 or a0.shape[0] == 0:
        raise ValueError(f"need a nonempty (B, H, A) batch, got shape {a0.shape}")
    b = a0.shape[0]
    taus = rng.integers(1, sched.n_steps + 1, (b,))
    eps = rng.normal(a0.shape)
    ab = sched.alpha_bar[taus][:, None, None]
    x = np.sqrt(ab) * a0 + np.sqrt(1.0 - ab) * eps
    pred = net(tensor(x), taus, cond)
    diff = pred + tensor(eps) * (-1.0)
    return mean(diff * diff)


def sample_actions(cond: Tensor, sched: DiffusionSchedule, net, rng: RngStream,
                   horizon: int, action_dim: int,
                   normalizer: Normalizer | None = None) -> np.ndarray:
    """Ancestral DDPM sampling; returns (B, horizon, action_dim) actions,
    de-normalized when a normalizer is supplied."""
    b = cond.shape[0]
    x = rng.normal((b, horizon, action_dim))
    with no_grad():
        for tau in range(sched.n_steps, 0, -1):
            eps_hat = net(tensor(x), np.full(b, tau), cond).data
            alpha = sched.alphas[tau]
            ab = sched.alpha_bar[tau]
            x = (x - sched.betas[tau] / np.sqrt(1.0 - ab) * eps_hat) / np.sqrt(alpha)
            if tau > 1:
                x = x + np.sqrt(sched.posterior_var[tau]) * rng.normal(x.shape)
    if normalizer is not None:
        x = normalizer.denormalize(x)
    return x
