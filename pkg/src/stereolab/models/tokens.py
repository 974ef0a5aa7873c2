"""Token-conditioned policy stub.

Shows that fused stereo embeddings drop into a token-sequence backbone: the
observation condition is chopped into tokens and attended alongside language
tokens and a state token, then pooled and regressed to an action chunk. The
backbone is a small self-attention block, not a pretrained model. Language
tokens carry no position encoding, so permuting them cannot change the output.
"""

from __future__ import annotations

import numpy as np

from ..autodiff import (LayerNorm, Linear, Module, RngStream, ShapeError, Tensor,
                        attention, concat, gelu, mean, reshape, transpose)


class TokenPolicy(Module):
    def __init__(self, rng: RngStream, cond_dim: int, lang_dim: int = 16,
                 n_lang_tokens: int = 4, d_tok: int = 32, n_heads: int = 4,
                 horizon: int = 16, action_dim: int = 4, n_cond_tokens: int = 8):
        if cond_dim % n_cond_tokens:
            raise ShapeError(f"cond dim {cond_dim} not divisible into {n_cond_tokens} tokens")
        self.cond_dim = cond_dim
        self.lang_dim = lang_dim
        self.n_lang_tokens = n_lang_tokens
        self.n_cond_tokens = n_cond_tokens
        self.d_tok = d_tok
        self.n_heads = n_heads
        self.horizon = horizon
        self.action_dim = action_dim
        self.embed_cond = Linear(cond_dim // n_cond_tokens, d_tok, rng.child("ec"))
        self.embed_lang = Linear(lang_dim, d_tok, rng.child("el"))
        self.embed_state = Linear(action_dim, d_tok, rng.child("es"))
        self.norm = LayerNorm(d_tok)
        self.q = Linear(d_tok, d_tok, rng.child("q"))
        self.k = Linear(d_tok, d_tok, rng.child("k"))
        self.v = Linear(d_tok, d_tok, rng.child("v"))
        self.o = Linear(d_tok, d_tok, rng.child("o"))
        self.head_in = Linear(d_tok, 2 * d_tok, rng.child("h1"))
        self.head_out = Linear(2 * d_tok, horizon * action_dim, rng.child("h2"))

    def __call__(self, cond: Tensor, lang: Tensor, state: Tensor) -> Tensor:
        """(B, cond_dim), (B, n_lang, lang_dim), (B, action_dim) -> (B, H, A)."""
        b = cond.shape[0]
        if cond.shape[-1] != self.cond_dim:
            raise ShapeError(f"cond dim {cond.shape[-1]} != {self.cond_dim}")
        if lang.shape[1:] != (self.n_lang_tokens, self.lang_dim):
            raise ShapeError(f"lang tokens {lang.shape[1:]} != "
                             f"({self.n_lang_tokens}, {self.lang_dim})")
        ct = self.embed_cond(reshape(cond, (b, self.n_cond_tokens, -1)))
        lt = self.embed_lang(lang)
        st = reshape(self.embed_state(state), (b, 1, self.d_tok))
        toks = self.norm(concat([ct, lt, st], axis=1))
        hd = self.d_tok // self.n_heads

        def heads(t):
            n = t.shape[1]
            return transpose(reshape(t, (b, n, self.n_heads, hd)), (0, 2, 1, 3))

        att = attention(heads(self.q(toks)), heads(self.k(toks)), heads(self.v(toks)))
        n = toks.shape[1]
        merged = reshape(transpose(att, (0, 2, 1, 3)), (b, n, self.d_tok))
        pooled = mean(toks + self.o(merged), axis=1)
        out = self.head_out(gelu(self.head_in(pooled)))
        return reshape(out, (b, self.horizon, self.action_dim))
