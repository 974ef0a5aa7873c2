"""Stereo fusion: 2D rotary embeddings, alternating self/cross attention,
and pooling to a per-view embedding.

Geometry enters twice: self-attention sees learned additive 2D position
embeddings on its query/key inputs, while cross attention rotates projected
queries and keys with 2D RoPE so that left/right matching depends on relative
image offsets only. All sublayers share parameters across eyes, which makes
the layer exactly equivariant to swapping the two input streams.
"""

from __future__ import annotations

import numpy as np

from ..autodiff import (LayerNorm, Linear, Module, Parameter, RngStream, ShapeError,
                        Tensor, attention, concat, gelu, mean, reshape, transpose)
from ..autodiff.tensor import mul


def grid_positions(rows: int, cols: int) -> np.ndarray:
    """Row-major (row, col) integer positions for an rows x cols token grid."""
    rr, cc = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    return np.stack([rr.reshape(-1), cc.reshape(-1)], axis=1)


def _rope_tables(positions: np.ndarray, d: int, base: float) -> tuple[np.ndarray, np.ndarray]:
    half = d // 2
    n_pair = half // 2
    freqs = base ** (-2.0 * np.arange(n_pair) / half)
    ang_row = positions[:, 0:1] * freqs[None, :]
    ang_col = positions[:, 1:2] * freqs[None, :]
    ang = np.stack([ang_row, ang_col], axis=1)  # (n, 2, n_pair)
    return np.cos(ang), np.sin(ang)


def rope2d(tokens: Tensor, positions: np.ndarray, base: float = 10000.0) -> Tensor:
    """Rotate token channels by 2D position.

    First half of the channels rotates with the row index, second half with
    the column; within each half, channels pair up as (2j, 2j+1) with
    frequencies base^(-2j/(d/2)). Accepts (..., n, d) with positions (n, 2).
    """
    d = tokens.shape[-1]
    if d % 4:
        raise ShapeError(f"token dim {d} not divisible by 4")
    n = tokens.shape[-2]
    positions = np.asarray(positions)
    if positions.shape != (n, 2):
        raise ShapeError(f"positions {positions.shape} do not match {n} tokens")
    cos, sin = _rope_tables(positions, d, base)
    lead = tokens.shape[:-2]
    split = tokens.shape[:-1] + (2, d // 4, 2)
    x = reshape(tokens, split)
    x1 = x[..., 0]
    x2 = x[..., 1]
    y1 = x1 * cos + mul(x2 * sin, -1.0)
    y2 = x1 * sin + x2 * cos
    y = concat([reshape(y1, y1.shape + (1,)), reshape(y2, y2.shape + (1,))], axis=-1)
    return reshape(y, lead + (n, d))


def _split_heads(x: Tensor, n_heads: int) -> Tensor:
    b, n, d = x.shape
    x = reshape(x, (b, n, n_heads, d // n_heads))
    return transpose(x, (0, 2, 1, 3))


def _merge_heads(x: Tensor) -> Tensor:
    b, h, n, hd = x.shape
    return reshape(transpose(x, (0, 2, 1, 3)), (b, n, h * hd))


class StereoLayer(Module):
    """self-attention (per eye) -> cross attention (both directions) -> MLP."""

    def __init__(self, rng: RngStream, d: int = 64, n_heads: int = 8,
                 grid: tuple[int, int] = (8, 8), mlp_ratio: int = 4,
                 rope_base: float = 10000.0):
        if d % n_heads:
            raise ShapeError(f"d={d} not divisible by {n_heads} heads")
        if (d // n_heads) % 4:
            raise ShapeError(f"head dim {d // n_heads} not divisible by 4 (2D RoPE)")
        self.d = d
        self.n_heads = n_heads
        self.grid = grid
        self.rope_base = rope_base
        self.positions = grid_positions(*grid)
        n = grid[0] * grid[1]
        if self.positions.shape[0] != n:
            raise ShapeError("positions must enumerate the grid exactly once")

        mk = lambda tag: Linear(d, d, rng.child(tag))
        self.self_q, self.self_k, self.self_v, self.self_o = (
            mk("sq"), mk("sk"), mk("sv"), mk("so"))
        self.cross_q, self.cross_k, self.cross_v, self.cross_o = (
            mk("cq"), mk("ck"), mk("cv"), mk("co"))
        # learned additive 2D position embedding, factored row+col, applied to
        # self-attention query/key inputs only (values stay position-free)
        self.pos_row = Parameter(rng.child("prow").normal((grid[0], 1, d), 0.02))
        self.pos_col = Parameter(rng.child("pcol").normal((1, grid[1], d), 0.02))
        self.norm_self = LayerNorm(d)
        self.norm_cross = LayerNorm(d)
        self.norm_mlp = LayerNorm(d)
        self.mlp_in = Linear(d, mlp_ratio * d, rng.child("m1"))
        self.mlp_out = Linear(mlp_ratio * d, d, rng.child("m2"))

    def _pos_embed(self) -> Tensor:
        n = self.grid[0] * self.grid[1]
        return reshape(self.pos_row.value + self.pos_col.value, (n, self.d))

    def _self_block(self, x: Tensor) -> Tensor:
        h = self.norm_self(x)
        qk_in = h + self._pos_embed()
        q = _split_heads(self.self_q(qk_in), self.n_heads)
        k = _split_heads(self.self_k(qk_in), self.n_heads)
        v = _split_heads(self.self_v(h), self.n_heads)
        return x + self.self_o(_merge_heads(attention(q, k, v)))

    def _cross_qkv(self, h_query: Tensor, h_keyval: Tensor, positions: np.ndarray | None = None):
        pos = self.positions if positions is None else positions
        q = rope2d(_split_heads(self.cross_q(h_query), self.n_heads), pos, self.rope_base)
        k = rope2d(_split_heads(self.cross_k(h_keyval), self.n_heads), pos, self.rope_base)
        v = _split_heads(self.cross_v(h_keyval), self.n_heads)
        return q, k, v

    def _cross_block(self, x_q: Tensor, x_kv: Tensor) -> Tensor:
        q, k, v = self._cross_qkv(self.norm_cross(x_q), self.norm_cross(x_kv))
        return x_q + self.cross_o(_merge_heads(attention(q, k, v)))

    def _mlp_block(self, x: Tensor) -> Tensor:
        return x + self.mlp_out(gelu(self.mlp_in(self.norm_mlp(x))))

    def __call__(self, left: Tensor, right: Tensor) -> tuple[Tensor, Tensor]:
        if left.shape != right.shape:
            raise ShapeError(f"eye token shapes differ: {left.shape} vs {right.shape}")
        if left.shape[-1] != self.d or left.shape[-2] != self.positions.shape[0]:
            raise ShapeError(f"tokens {left.shape} do not match layer grid {self.grid} x d={self.d}")
        left = self._self_block(left)
        right = self._self_block(right)
        new_left = self._cross_block(left, right)
        new_right = self._cross_block(right, left)
        left, right = self._mlp_block(new_left), self._mlp_block(new_right)
        return left, right

    def cross_logits(self, left: Tensor, right: Tensor,
                     positions: np.ndarray | None = None) -> np.ndarray:
        """Pre-softmax left->right cross-attention logits (B, heads, n, n)."""
        q, k, _ = self._cross_qkv(self.norm_cross(left), self.norm_cross(right),
                                  positions=positions)
        hd = self.d // self.n_heads
        logits = (q.data @ np.swapaxes(k.data, -1, -2)) / np.sqrt(hd)
        return logits


class StereoFusion(Module):
    """Tokenize a stereo feature-map pair, fuse, and pool to one embedding.

    With bypass=True the transformer stack is skipped entirely: each eye is
    mean-pooled on its own and the two pooled vectors are concatenated
    channelwise before the output MLP. That is the multi-view baseline; the
    eyes never exchange information before pooling.
    """

    def __init__(self, rng: RngStream, d: int = 64, d_z: int = 128,
                 n_layers: int = 2, n_heads: int = 8, grid: tuple[int, int] = (8, 8),
                 mlp_hidden: int = 128, bypass: bool = False):
        self.d = d
        self.d_z = d_z
        self.grid = grid
        self.bypass = bypass
        if not bypass:
            self.layers = [StereoLayer(rng.child(f"layer{i}"), d, n_heads, grid)
                           for i in range(n_layers)]
        self.head_in = Linear(2 * d if bypass else d, mlp_hidden, rng.child("h1"))
        self.head_out = Linear(mlp_hidden, d_z, rng.child("h2"))

    def _tokenize(self, fmap: Tensor) -> Tensor:
        b, h, w, c = fmap.shape
        if (h, w) != self.grid:
            raise ShapeError(f"feature grid {(h, w)} does not match fusion grid {self.grid}")
        return reshape(fmap, (b, h * w, c))

    def __call__(self, f_left: Tensor, f_right: Tensor) -> Tensor:
        """(B, H', W', C) per eye -> (B, d_z)."""
        left, right = self._tokenize(f_left), self._tokenize(f_right)
        if self.bypass:
            pooled = concat([mean(left, axis=1), mean(right, axis=1)], axis=-1)
        else:
            for layer in self.layers:
                left, right = layer(left, right)
            pooled = mean(concat([left, right], axis=1), axis=1)
        return self.head_out(gelu(self.head_in(pooled)))


def aggregate(history: list[tuple[list[Tensor], Tensor]],
              n_views: int) -> tuple[Tensor, dict[str, tuple[int, int]]]:
    """Concatenate per-view embeddings and state over the observation window.

    history is oldest-first: one (z_per_view, state) entry per timestep, each
    z (B, d_z) and state (B, s). Returns the (B, total) condition vector and a
    layout of named segment offsets.
    """
    if not history:
        raise ValueError("empty observation history")
    parts = []
    layout = {}
    offset = 0
    for t, (zs, state) in enumerate(history):
        if len(zs) != n_views:
            raise ValueError(f"timestep {t}: expected {n_views} views, got {len(zs)}")
        for i, z in enumerate(zs):
            d = z.shape[-1]
            layout[f"t{t}.view{i}"] = (offset, offset + d)
            parts.append(z)
            offset += d
        s = state.shape[-1]
        layout[f"t{t}.state"] = (offset, offset + s)
        parts.append(state)
        offset += s
    return concat(parts, axis=-1), layout
