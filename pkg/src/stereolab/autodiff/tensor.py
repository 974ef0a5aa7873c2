"""Tape-based reverse-mode autodiff over dense numpy arrays.

Tensors are immutable once produced by an op.  Every registered op checks its
output for non-finite values and aborts with the op name, so a NaN can never
propagate silently into an experiment.  The op set is fixed and small:
elementwise arithmetic, matmul, softmax, GELU/ReLU, convolutions, and the
shape plumbing (reshape/transpose/concat/slice/reductions) the models need.
"""

from __future__ import annotations

import contextlib
from typing import Callable, Sequence

import numpy as np
from scipy.special import erf

_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_INV_SQRT2PI = 1.0 / np.sqrt(2.0 * np.pi)

_DEFAULT_DTYPE = np.float64
_GRAD_ENABLED = True


class NonFiniteError(RuntimeError):
    """An op produced NaN or Inf; the step must be aborted."""


class ShapeError(ValueError):
    """Operand shapes violate an op's contract."""


def set_default_dtype(dtype) -> None:
    """Set the dtype new tensors are created with (float64 or float32)."""
    global _DEFAULT_DTYPE
    if dtype not in (np.float64, np.float32):
        raise ValueError(f"unsupported dtype {dtype!r}")
    _DEFAULT_DTYPE = dtype


def default_dtype():
    return _DEFAULT_DTYPE


@contextlib.contextmanager
def no_grad():
    """Disable graph recording (inference / finite-difference evaluations)."""
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


def is_grad_enabled() -> bool:
    return _GRAD_ENABLED


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_vjp", "op")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=_DEFAULT_DTYPE)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._vjp: Callable[[np.ndarray], Sequence[np.ndarray | None]] | None = None
        self.op = "leaf"

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        """Reverse-mode sweep from this (scalar or any-shape) tensor."""
        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in visited:
                    stack.append((p, False))

        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._vjp is None or node.grad is None:
                continue
            grads = node._vjp(node.grad)
            for parent, g in zip(node._parents, grads):
                if g is None or not parent.requires_grad:
                    continue
                if parent.grad is None:
                    parent.grad = g.copy() if g.base is not None else g
                else:
                    parent.grad = parent.grad + g

    # -- operator sugar ----------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, mul(other, -1.0) if isinstance(other, Tensor) else -np.asarray(other))

    def __rsub__(self, other):
        return add(mul(self, -1.0), other)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            return mul(self, pow_const(other, -1.0))
        return mul(self, 1.0 / np.asarray(other))

    def __pow__(self, c):
        return pow_const(self, c)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return take(self, key)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, op={self.op!r}, requires_grad={self.requires_grad})"


def tensor(data, requires_grad: bool = False) -> Tensor:
    return Tensor(data, requires_grad=requires_grad)


def _coerce(x) -> np.ndarray:
    if isinstance(x, Tensor):
        return x.data
    return np.asarray(x, dtype=_DEFAULT_DTYPE)


def _result(data: np.ndarray, parents: tuple[Tensor, ...], vjp, op: str) -> Tensor:
    if not np.all(np.isfinite(data)):
        raise NonFiniteError(f"op '{op}' produced non-finite values")
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out.op = op
    if _GRAD_ENABLED and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._vjp = vjp
    else:
        out.requires_grad = False
        out._parents = ()
        out._vjp = None
    return out


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum g down to `shape` (reverse of numpy broadcasting)."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


# -- elementwise ------------------------------------------------------------

def add(a, b) -> Tensor:
    ta = a if isinstance(a, Tensor) else Tensor(a)
    tb = b if isinstance(b, Tensor) else Tensor(b)
    data = ta.data + tb.data

    def vjp(g):
        return _unbroadcast(g, ta.data.shape), _unbroadcast(g, tb.data.shape)

    return _result(data, (ta, tb), vjp, "add")


def mul(a, b) -> Tensor:
    ta = a if isinstance(a, Tensor) else Tensor(a)
    tb = b if isinstance(b, Tensor) else Tensor(b)
    data = ta.data * tb.data

    def vjp(g):
        return (_unbroadcast(g * tb.data, ta.data.shape),
                _unbroadcast(g * ta.data, tb.data.shape))

    return _result(data, (ta, tb), vjp, "mul")


def pow_const(x: Tensor, c: float) -> Tensor:
    c = float(c)
    data = x.data ** c

    def vjp(g):
        return (g * c * x.data ** (c - 1.0),)

    return _result(data, (x,), vjp, f"pow{c}")


def relu(x: Tensor) -> Tensor:
    data = np.maximum(x.data, 0.0)

    def vjp(g):
        return (g * (x.data > 0.0),)

    return _result(data, (x,), vjp, "relu")


def gelu(x: Tensor) -> Tensor:
    """Exact GELU: x * Phi(x) with the Gaussian CDF."""
    phi = 0.5 * (1.0 + erf(x.data * _INV_SQRT2))
    data = x.data * phi

    def vjp(g):
        pdf = np.exp(-0.5 * x.data * x.data) * _INV_SQRT2PI
        return (g * (phi + x.data * pdf),)

    return _result(data, (x,), vjp, "gelu")


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """Numerically stable softmax (max-subtraction) along `axis`."""
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    data = e / e.sum(axis=axis, keepdims=True)

    def vjp(g):
        dot = (g * data).sum(axis=axis, keepdims=True)
        return (data * (g - dot),)

    return _result(data, (x,), vjp, "softmax")


# -- shape plumbing ----------------------------------------------------------

def reshape(x: Tensor, shape) -> Tensor:
    shape = tuple(shape)
    data = x.data.reshape(shape)

    def vjp(g):
        return (g.reshape(x.data.shape),)

    return _result(data, (x,), vjp, "reshape")


def transpose(x: Tensor, axes) -> Tensor:
    axes = tuple(axes)
    data = np.transpose(x.data, axes)
    inv = tuple(np.argsort(axes))

    def vjp(g):
        return (np.transpose(g, inv),)

    return _result(data, (x,), vjp, "transpose")


def swap_last2(x: Tensor) -> Tensor:
    axes = list(range(x.ndim))
    axes[-1], axes[-2] = axes[-2], axes[-1]
    return transpose(x, axes)


def take(x: Tensor, key) -> Tensor:
    """Basic slice/index; gradient scatters back into a zero tensor."""
    data = x.data[key]

    def vjp(g):
        dx = np.zeros_like(x.data)
        dx[key] = g
        return (dx,)

    return _result(data, (x,), vjp, "slice")


def concat(parts: Sequence[Tensor], axis: int = 0) -> Tensor:
    parts = list(parts)
    data = np.concatenate([p.data for p in parts], axis=axis)
    sizes = [p.data.shape[axis] for p in parts]
    splits = np.cumsum(sizes)[:-1]

    def vjp(g):
        return tuple(np.split(g, splits, axis=axis))

    return _result(data, tuple(parts), vjp, "concat")


def tensor_sum(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    data = x.data.sum(axis=axis, keepdims=keepdims)

    def vjp(g):
        if axis is None:
            return (np.broadcast_to(g, x.data.shape).copy(),)
        if not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.data.shape).copy(),)

    return _result(data, (x,), vjp, "sum")


def mean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    if axis is None:
        n = x.data.size
    elif isinstance(axis, tuple):
        n = int(np.prod([x.data.shape[a] for a in axis]))
    else:
        n = x.data.shape[axis]
    data = x.data.mean(axis=axis, keepdims=keepdims)

    def vjp(g):
        if axis is None:
            return (np.broadcast_to(g / n, x.data.shape).copy(),)
        if not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g / n, x.data.shape).copy(),)

    return _result(data, (x,), vjp, "mean")


# -- linear algebra -----------------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul expects >=2-D operands, got {a.shape} @ {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul inner dims differ: {a.shape} @ {b.shape}")
    data = a.data @ b.data

    def vjp(g):
        da = g @ np.swapaxes(b.data, -1, -2)
        db = np.swapaxes(a.data, -1, -2) @ g
        return _unbroadcast(da, a.data.shape), _unbroadcast(db, b.data.shape)

    return _result(data, (a, b), vjp, "matmul")


def attention(q: Tensor, k: Tensor, v: Tensor, scale: float | None = None) -> Tensor:
    """Scaled-dot-product attention rows: softmax(scale * q @ k^T) @ v.

    q: (..., n_q, d), k: (..., n_k, d), v: (..., n_k, d_v).  `scale` defaults
    to 1/sqrt(d).  Softmax uses max-subtraction; each output row is a convex
    combination of the rows of v.
    """
    if q.shape[-1] != k.shape[-1]:
        raise ShapeError(f"attention query/key dims differ: {q.shape} vs {k.shape}")
    if k.shape[-2] != v.shape[-2]:
        raise ShapeError(f"attention key/value counts differ: {k.shape} vs {v.shape}")
    if scale is None:
        scale = 1.0 / np.sqrt(q.shape[-1])
    if scale <= 0:
        raise ShapeError(f"attention scale must be positive, got {scale}")
    logits = mul(matmul(q, swap_last2(k)), float(scale))
    return matmul(softmax(logits, axis=-1), v)


# -- convolutions --------------------------------------------------------------

def conv2d(x: Tensor, w: Tensor, b: Tensor | None = None,
           stride: int = 1, padding: int = 0) -> Tensor:
    """2-D convolution, channels-last: x (B,H,W,Ci), w (kh,kw,Ci,Co), b (Co,)."""
    B, H, W, Ci = x.shape
    kh, kw, Ci_w, Co = w.shape
    if Ci != Ci_w:
        raise ShapeError(f"conv2d channel mismatch: input {Ci}, kernel {Ci_w}")
    s, p = stride, padding
    Ho = (H + 2 * p - kh) // s + 1
    Wo = (W + 2 * p - kw) // s + 1
    if Ho < 1 or Wo < 1:
        raise ShapeError(f"conv2d output would be empty for input {x.shape}")
    xp = np.pad(x.data, ((0, 0), (p, p), (p, p), (0, 0))) if p else x.data
    out = np.zeros((B * Ho * Wo, Co), dtype=x.data.dtype)
    for i in range(kh):
        for j in range(kw):
            xs = xp[:, i:i + s * Ho:s, j:j + s * Wo:s, :]
            out += xs.reshape(-1, Ci) @ w.data[i, j]
    if b is not None:
        out += b.data
    data = out.reshape(B, Ho, Wo, Co)

    def vjp(g):
        g2 = g.reshape(-1, Co)
        dxp = np.zeros_like(xp)
        dw = np.zeros_like(w.data)
        for i in range(kh):
            for j in range(kw):
                xs = xp[:, i:i + s * Ho:s, j:j + s * Wo:s, :]
                dw[i, j] = xs.reshape(-1, Ci).T @ g2
                dxp[:, i:i + s * Ho:s, j:j + s * Wo:s, :] += (g2 @ w.data[i, j].T).reshape(B, Ho, Wo, Ci)
        dx = dxp[:, p:p + H, p:p + W, :] if p else dxp
        if b is not None:
            return dx, dw, g2.sum(axis=0)
        return dx, dw

    parents = (x, w) if b is None else (x, w, b)
    return _result(data, parents, vjp, "conv2d")


def conv1d(x: Tensor, w: Tensor, b: Tensor | None = None,
           stride: int = 1, padding: int = 0) -> Tensor:
    """1-D convolution over the middle axis: x (B,L,Ci), w (k,Ci,Co)."""
    B, L, Ci = x.shape
    k, Ci_w, Co = w.shape
    if Ci != Ci_w:
        raise ShapeError(f"conv1d channel mismatch: input {Ci}, kernel {Ci_w}")
    s, p = stride, padding
    Lo = (L + 2 * p - k) // s + 1
    if Lo < 1:
        raise ShapeError(f"conv1d output would be empty for input {x.shape}")
    xp = np.pad(x.data, ((0, 0), (p, p), (0, 0))) if p else x.data
    out = np.zeros((B * Lo, Co), dtype=x.data.dtype)
    for i in range(k):
        xs = xp[:, i:i + s * Lo:s, :]
        out += xs.reshape(-1, Ci) @ w.data[i]
    if b is not None:
        out += b.data
    data = out.reshape(B, Lo, Co)

    def vjp(g):
        g2 = g.reshape(-1, Co)
        dxp = np.zeros_like(xp)
        dw = np.zeros_like(w.data)
        for i in range(k):
            xs = xp[:, i:i + s * Lo:s, :]
            dw[i] = xs.reshape(-1, Ci).T @ g2
            dxp[:, i:i + s * Lo:s, :] += (g2 @ w.data[i].T).reshape(B, Lo, Ci)
        dx = dxp[:, p:p + L, :] if p else dxp
        if b is not None:
            return dx, dw, g2.sum(axis=0)
        return dx, dw

    parents = (x, w) if b is None else (x, w, b)
    return _result(data, parents, vjp, "conv1d")


def upsample1d(x: Tensor, factor: int = 2) -> Tensor:
    """Nearest-neighbour upsample along the middle axis of (B,L,C)."""
    B, L, C = x.shape
    data = np.repeat(x.data, factor, axis=1)

    def vjp(g):
        return (g.reshape(B, L, factor, C).sum(axis=2),)

    return _result(data, (x,), vjp, "upsample1d")
