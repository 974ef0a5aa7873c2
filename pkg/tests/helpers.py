"""Closed-form denoising oracles used by the diffusion and acceptance tests."""

import numpy as np

from stereolab.autodiff import Tensor, tensor
from stereolab.models import DiffusionSchedule


class ExactNoiseOracle:
    """Returns the exact noise for a known clean chunk: (x - sqrt(ab) a0) / sqrt(1 - ab)."""

    def __init__(self, a0: np.ndarray, sched: DiffusionSchedule):
        self.a0 = np.asarray(a0, dtype=np.float64)
        self.sched = sched

    def __call__(self, x: Tensor, taus: np.ndarray, cond: Tensor) -> Tensor:
        ab = self.sched.alpha_bar[np.asarray(taus)][:, None, None]
        return tensor((x.data - np.sqrt(ab) * self.a0) / np.sqrt(1.0 - ab))


class GaussianNoiseOracle:
    """Posterior-mean noise prediction when the clean data is N(mu, sigma^2).

    With x = sqrt(ab) a0 + sqrt(1-ab) eps and a0 Gaussian, eps and x are
    jointly Gaussian, so E[eps | x] is linear in x.
    """

    def __init__(self, mu: float, sigma: float, sched: DiffusionSchedule):
        self.mu = mu
        self.var = sigma * sigma
        self.sched = sched

    def __call__(self, x: Tensor, taus: np.ndarray, cond: Tensor) -> Tensor:
        ab = self.sched.alpha_bar[np.asarray(taus)][:, None, None]
        num = np.sqrt(1.0 - ab) * (x.data - np.sqrt(ab) * self.mu)
        den = ab * self.var + (1.0 - ab)
        return tensor(num / den)
