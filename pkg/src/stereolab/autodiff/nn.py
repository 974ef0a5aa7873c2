"""Parameter containers and the handful of layers the models are built from."""

from __future__ import annotations

from typing import Iterator

import numpy as np

from .rng import RngStream
from .tensor import (ShapeError, Tensor, conv1d, conv2d, default_dtype,
                     matmul, mean, mul, pow_const, reshape)


class Parameter:
    """A named, trainable (or frozen) tensor.

    `name` is assigned from the module path on registration walks; it is
    unique within one model and is the key used by checkpoints and Adam state.
    """

    def __init__(self, data: np.ndarray, trainable: bool = True):
        self.value = Tensor(np.array(data, dtype=default_dtype()), requires_grad=trainable)
        self.trainable = trainable
        self.name = ""

    @property
    def shape(self):
        return self.value.shape

    @property
    def grad(self):
        return self.value.grad

    def zero_grad(self):
        self.value.grad = None

    def assign(self, data: np.ndarray) -> None:
        """Overwrite the value in place (optimizer updates, checkpoint load)."""
        data = np.asarray(data, dtype=self.value.data.dtype)
        if data.shape != self.value.data.shape:
            raise ShapeError(f"assign shape {data.shape} != parameter shape {self.value.data.shape}")
        self.value.data = data

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.shape}, trainable={self.trainable})"


class Module:
    """Minimal container: parameters are discovered by walking attributes."""

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Parameter]]:
        for key, val in vars(self).items():
            path = f"{prefix}.{key}" if prefix else key
            yield from _walk(path, val)

    def parameters(self, trainable_only: bool = False) -> list[Parameter]:
        out = []
        for name, p in self.named_parameters():
            p.name = name
            if trainable_only and not p.trainable:
                continue
            out.append(p)
        return out

    def param_count(self, trainable_only: bool = True) -> int:
        return sum(p.value.size for p in self.parameters()
                   if p.trainable or not trainable_only)

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.value.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        own = dict(self.named_parameters())
        missing = sorted(set(own) - set(state))
        extra = sorted(set(state) - set(own))
        if missing or extra:
            raise KeyError(f"state dict mismatch: missing={missing}, unexpected={extra}")
        for name, p in own.items():
            p.assign(state[name])


def _walk(path: str, val) -> Iterator[tuple[str, Parameter]]:
    if isinstance(val, Parameter):
        val.name = path
        yield path, val
    elif isinstance(val, Module):
        yield from val.named_parameters(prefix=path)
    elif isinstance(val, (list, tuple)):
        for i, item in enumerate(val):
            yield from _walk(f"{path}.{i}", item)


class Linear(Module):
    def __init__(self, d_in: int, d_out: int, rng: RngStream, bias: bool = True):
        scale = 1.0 / np.sqrt(d_in)
        self.w = Parameter(rng.normal((d_in, d_out), scale))
        self.b = Parameter(np.zeros(d_out)) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        y = matmul(x, self.w.value)
        if self.b is not None:
            y = y + self.b.value
        return y


class Conv2d(Module):
    def __init__(self, c_in: int, c_out: int, kernel: int, rng: RngStream,
                 stride: int = 1, padding: int = 0, trainable: bool = True):
        scale = 1.0 / np.sqrt(kernel * kernel * c_in)
        self.w = Parameter(rng.normal((kernel, kernel, c_in, c_out), scale), trainable)
        self.b = Parameter(np.zeros(c_out), trainable)
        self.stride = stride
        self.padding = padding

    def __call__(self, x: Tensor) -> Tensor:
        return conv2d(x, self.w.value, self.b.value, self.stride, self.padding)


class Conv1d(Module):
    def __init__(self, c_in: int, c_out: int, kernel: int, rng: RngStream,
                 stride: int = 1, padding: int = 0):
        scale = 1.0 / np.sqrt(kernel * c_in)
        self.w = Parameter(rng.normal((kernel, c_in, c_out), scale))
        self.b = Parameter(np.zeros(c_out))
        self.stride = stride
        self.padding = padding

    def __call__(self, x: Tensor) -> Tensor:
        return conv1d(x, self.w.value, self.b.value, self.stride, self.padding)


class GroupNorm(Module):
    """Normalize channel groups over (spatial, group-channels) per sample.

    Works on channels-last inputs of any rank >= 2: (B, ..., C).  Batch-free
    statistics keep training deterministic regardless of batch composition.
    """

    def __init__(self, channels: int, groups: int = 8, eps: float = 1e-5, trainable: bool = True):
        if channels % groups:
            raise ShapeError(f"channels {channels} not divisible by groups {groups}")
        self.gamma = Parameter(np.ones(channels), trainable)
        self.beta = Parameter(np.zeros(channels), trainable)
        self.groups = groups
        self.eps = eps

    def __call__(self, x: Tensor) -> Tensor:
        B = x.shape[0]
        C = x.shape[-1]
        spatial = x.shape[1:-1]
        g = self.groups
        xg = reshape(x, (B, int(np.prod(spatial, initial=1)), g, C // g))
        mu = mean(xg, axis=(1, 3), keepdims=True)
        centered = xg + mul(mu, -1.0)
        var = mean(mul(centered, centered), axis=(1, 3), keepdims=True)
        inv = pow_const(var + self.eps, -0.5)
        y = reshape(mul(centered, inv), x.shape)
        return mul(y, self.gamma.value) + self.beta.value


class LayerNorm(Module):
    def __init__(self, dim: int, eps: float = 1e-5):
        self.gamma = Parameter(np.ones(dim))
        self.beta = Parameter(np.zeros(dim))
        self.eps = eps

    def __call__(self, x: Tensor) -> Tensor:
        mu = mean(x, axis=-1, keepdims=True)
        centered = x + mul(mu, -1.0)
        var = mean(mul(centered, centered), axis=-1, keepdims=True)
        inv = pow_const(var + self.eps, -0.5)
        return mul(mul(centered, inv), self.gamma.value) + self.beta.value


def sinusoidal_embedding(values: np.ndarray, dim: int, max_period: float = 10000.0) -> np.ndarray:
    """Classic sin/cos embedding of scalar values; returns (len(values), dim)."""
    if dim % 2:
        raise ShapeError(f"embedding dim must be even, got {dim}")
    half = dim // 2
    freqs = max_period ** (-np.arange(half) / half)
    ang = np.asarray(values, dtype=np.float64)[:, None] * freqs[None, :]
    return np.concatenate([np.sin(ang), np.cos(ang)], axis=1)
