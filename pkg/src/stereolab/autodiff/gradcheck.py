"""Central-difference gradient checking for scalar-valued graphs."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .nn import Parameter
from .tensor import Tensor, no_grad


def grad_check(f: Callable[[], Tensor], params: list[Parameter],
               eps: float = 1e-5, max_entries: int | None = None) -> float:
    """Max relative error between analytic and numeric gradients.

    f() must rebuild the graph from the current parameter values and
    return a scalar Tensor. Error metric per entry:
    |analytic - numeric| / max(1, |analytic|, |numeric|).
    max_entries caps the number of coordinates probed per parameter
    (deterministic stride subsample); None checks every entry.
    """
    if not (1e-7 <= eps <= 1e-3):
        raise ValueError(f"eps must lie in [1e-7, 1e-3], got {eps}")

    out = f()
    if out.data.size != 1:
        raise ValueError(f"f() must return a scalar, got shape {out.data.shape}")
    for p in params:
        p.zero_grad()
    out.backward()
    analytic = [np.array(p.value.grad, dtype=np.float64, copy=True) for p in params]

    worst = 0.0
    for p, a in zip(params, analytic):
        base = p.value.data.copy()
        flat = base.reshape(-1)
        n = flat.size
        if max_entries is not None and n > max_entries:
            idxs = np.linspace(0, n - 1, max_entries).astype(np.int64)
            idxs = np.unique(idxs)
        else:
            idxs = np.arange(n)
        a_flat = a.reshape(-1)
        with no_grad():  # numeric probes need values only, skip the tape
            for i in idxs:
                orig = flat[i]
                flat[i] = orig + eps
                p.value.data = base
                hi = float(f().data.reshape(()))
                flat[i] = orig - eps
                lo = float(f().data.reshape(()))
                flat[i] = orig
                numeric = (hi - lo) / (2.0 * eps)
                err = abs(a_flat[i] - numeric) / max(1.0, abs(a_flat[i]), abs(numeric))
                if err > worst:
                    worst = err
        p.value.data = base
    return worst
