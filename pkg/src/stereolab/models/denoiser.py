"""Conditional 1D UNet over the action-time axis.

Conditioning (diffusion timestep embedding + observation vector) enters every
residual block through feature-wise affine modulation. Channels-last layout
(B, horizon, channels) throughout.
"""

from __future__ import annotations

import numpy as np

from ..autodiff import (Conv1d, GroupNorm, Linear, Module, RngStream, ShapeError,
                        Tensor, concat, gelu, reshape, tensor, upsample1d)
from ..autodiff.nn import sinusoidal_embedding


class FilmResBlock(Module):
    def __init__(self, rng: RngStream, c_in: int, c_out: int, cond_dim: int, groups: int):
        self.conv1 = Conv1d(c_in, c_out, 3, rng.child("c1"), padding=1)
        self.conv2 = Conv1d(c_out, c_out, 3, rng.child("c2"), padding=1)
        self.norm1 = GroupNorm(c_out, groups)
        self.norm2 = GroupNorm(c_out, groups)
        self.film = Linear(cond_dim, 2 * c_out, rng.child("film"))
        self.skip = Linear(c_in, c_out, rng.child("skip"), bias=False) if c_in != c_out else None
        self.c_out = c_out

    def __call__(self, x: Tensor, cond: Tensor) -> Tensor:
        h = self.norm1(self.conv1(x))
        fs = reshape(self.film(cond), (cond.shape[0], 1, 2 * self.c_out))
        scale = fs[:, :, : self.c_out]
        shift = fs[:, :, self.c_out:]
        h = h * (scale + 1.0) + shift
        h = self.norm2(self.conv2(gelu(h)))
        res = x if self.skip is None else self.skip(x)
        return gelu(h) + res


class DenoiserNet(Module):
    """Two-level encoder/decoder; predicts the noise residual for a chunk."""

    def __init__(self, rng: RngStream, horizon: int = 16, action_dim: int = 4,
                 cond_dim: int = 264, base: int = 32, cond_hidden: int = 96,
                 t_emb_dim: int = 64, groups: int = 8):
        if horizon % 4:
            raise ShapeError(f"horizon {horizon} must be divisible by 4 (two downsamples)")
        self.horizon = horizon
        self.action_dim = action_dim
        self.cond_dim = cond_dim
        self.t_emb_dim = t_emb_dim
        c0, c1 = base, base * 2

        self.cond_in = Linear(t_emb_dim + cond_dim, cond_hidden, rng.child("cond1"))
        self.cond_out = Linear(cond_hidden, cond_hidden, rng.child("cond2"))

        self.in_proj = Conv1d(action_dim, c0, 3, rng.child("inp"), padding=1)
        self.res_down0 = FilmResBlock(rng.child("rd0"), c0, c0, cond_hidden, groups)
        self.down0 = Conv1d(c0, c0, 3, rng.child("d0"), stride=2, padding=1)
        self.res_down1 = FilmResBlock(rng.child("rd1"), c0, c1, cond_hidden, groups)
        self.down1 = Conv1d(c1, c1, 3, rng.child("d1"), stride=2, padding=1)
        self.mid = FilmResBlock(rng.child("mid"), c1, c1, cond_hidden, groups)
        self.up1 = Conv1d(c1, c1, 3, rng.child("u1"), padding=1)
        self.res_up1 = FilmResBlock(rng.child("ru1"), 2 * c1, c0, cond_hidden, groups)
        self.up0 = Conv1d(c0, c0, 3, rng.child("u0"), padding=1)
        self.res_up0 = FilmResBlock(rng.child("ru0"), 2 * c0, c0, cond_hidden, groups)
        self.out_norm = GroupNorm(c0, groups)
        self.out_proj = Conv1d(c0, action_dim, 3, rng.child("outp"), padding=1)
        # keep the initial prediction small without killing gradient flow
        self.out_proj.w.assign(self.out_proj.w.value.data * 0.01)

    def __call__(self, x: Tensor, taus: np.ndarray, cond: Tensor) -> Tensor:
        if x.shape[1] != self.horizon or x.shape[2] != self.action_dim:
            raise ShapeError(f"chunk shape {x.shape[1:]} != ({self.horizon}, {self.action_dim})")
        if cond.shape[-1] != self.cond_dim:
            raise ShapeError(f"cond dim {cond.shape[-1]} != {self.cond_dim}")
        taus = np.atleast_1d(np.asarray(taus))
        if taus.shape != (x.shape[0],):
            raise ShapeError(f"need one timestep per batch element, got {taus.shape}")
        temb = tensor(sinusoidal_embedding(taus, self.t_emb_dim))
        c = gelu(self.cond_out(gelu(self.cond_in(concat([temb, cond], axis=-1)))))

        h0 = self.res_down0(self.in_proj(x), c)
        h1 = self.res_down1(self.down0(h0), c)
        m = self.mid(self.down1(h1), c)
        u1 = self.res_up1(concat([self.up1(upsample1d(m, 2)), h1], axis=-1), c)
        u0 = self.res_up0(concat([self.up0(upsample1d(u1, 2)), h0], axis=-1), c)
        return self.out_proj(gelu(self.out_norm(u0)))
