"""Adam with bias correction and a non-finite-gradient guard."""

from __future__ import annotations

import logging

import numpy as np

from .nn import Parameter

log = logging.getLogger(__name__)


class Adam:
    def __init__(self, params: list[Parameter], lr: float = 1e-4,
                 betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8):
        if lr <= 0:
            raise ValueError(f"lr must be positive, got {lr}")
        b1, b2 = betas
        if not (0.0 <= b1 < 1.0 and 0.0 <= b2 < 1.0):
            raise ValueError(f"betas must lie in [0, 1), got {betas}")
        self.params = [p for p in params if p.trainable]
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.t = 0
        self._m = [np.zeros_like(p.value.data) for p in self.params]
        self._v = [np.zeros_like(p.value.data) for p in self.params]
        self.skipped_steps = 0

    def step(self) -> bool:
        """Apply one update; returns False (and skips) on non-finite grads."""
        grads = []
        for p in self.params:
            g = p.value.grad
            if g is None:
                g = np.zeros_like(p.value.data)
            if not np.all(np.isfinite(g)):
                self.skipped_steps += 1
                log.warning("adam: non-finite gradient in %r, skipping step", p.name)
                return False
            grads.append(g)

        self.t += 1
        b1, b2 = self.betas
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for p, g, m, v in zip(self.params, grads, self._m, self._v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p.assign(p.value.data - self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps))
        return True

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()
