"""Per-eye convolutional encoders with shared weights and a frozen prior stream.

Both eyes of a stereo pair go through the same parameter set so that
corresponding surface patches map to comparable features; the fusion stack
downstream relies on that consistency. The frozen prior encoder is a stand-in
for a pretrained monocular backbone: its features are concatenated channelwise
and projected back down (external views only).
"""

from __future__ import annotations

import hashlib

import numpy as np

from ..autodiff import (Conv2d, GroupNorm, Linear, Module, RngStream, ShapeError,
                        Tensor, concat, gelu)


class ConvEncoder(Module):
    """Stack of conv blocks (conv -> GroupNorm -> GELU), channels-last."""

    def __init__(self, rng: RngStream, channels: int = 64,
                 strides: tuple[int, ...] = (2, 2, 2, 1), in_channels: int = 3):
        self.channels = channels
        self.strides = strides
        self.total_stride = int(np.prod(strides))
        self.convs = []
        self.norms = []
        c_in = in_channels
        for i, s in enumerate(strides):
            self.convs.append(Conv2d(c_in, channels, 3, rng.child(f"conv{i}"),
                                     stride=s, padding=1))
            self.norms.append(GroupNorm(channels, groups=8))
            c_in = channels

    def __call__(self, images: Tensor) -> Tensor:
        """(B, H, W, 3) -> (B, H/stride, W/stride, C)."""
        h, w = images.shape[1], images.shape[2]
        if h % self.total_stride or w % self.total_stride:
            raise ShapeError(f"resolution {h}x{w} not divisible by stride {self.total_stride}")
        x = images
        for conv, norm in zip(self.convs, self.norms):
            x = gelu(norm(conv(x)))
        return x


class PriorEncoder(Module):
    """Frozen random-weight feature stream.

    Patchifies with a 4x4 stride-4 convolution, then (when the main encoder
    strides by 8) one stride-2 conv so the grids line up. Never trained; a
    parameter checksum guards against accidental updates.
    """

    def __init__(self, rng: RngStream, out_channels: int = 32, total_stride: int = 8):
        if total_stride not in (4, 8):
            raise ShapeError(f"prior stream supports stride 4 or 8, got {total_stride}")
        self.out_channels = out_channels
        self.total_stride = total_stride
        self.patch = Conv2d(3, out_channels, 4, rng.child("patch"), stride=4,
                            trainable=False)
        self.down = None
        if total_stride == 8:
            self.down = Conv2d(out_channels, out_channels, 3, rng.child("down"),
                               stride=2, padding=1, trainable=False)

    def __call__(self, images: Tensor) -> Tensor:
        h, w = images.shape[1], images.shape[2]
        if h % self.total_stride or w % self.total_stride:
            raise ShapeError(f"resolution {h}x{w} not divisible by stride {self.total_stride}")
        x = gelu(self.patch(images))
        if self.down is not None:
            x = gelu(self.down(x))
        return x

    def checksum(self) -> str:
        digest = hashlib.blake2b(digest_size=16)
        for name, p in sorted(self.named_parameters()):
            digest.update(name.encode())
            digest.update(np.ascontiguousarray(p.value.data).tobytes())
        return digest.hexdigest()


def fuse_prior(features: Tensor, prior: Tensor, proj: Linear) -> Tensor:
    """Channel-concatenate the two streams and project each cell back to C."""
    if features.shape[:3] != prior.shape[:3]:
        raise ShapeError(f"grid mismatch {features.shape[:3]} vs {prior.shape[:3]}")
    both = concat([features, prior], axis=-1)
    return proj(both)


class PairEncoder(Module):
    """Shared-weight encoding of a stereo pair, with optional prior fusion.

    use_prior selects the external-view path (trainable features concatenated
    with frozen prior features, then projected); the wrist view constructs
    this with use_prior=False and the fusion path is then structurally
    absent, not merely disabled.
    """

    def __init__(self, rng: RngStream, channels: int = 64,
                 strides: tuple[int, ...] = (2, 2, 2, 1),
                 use_prior: bool = True, prior_channels: int = 32):
        self.encoder = ConvEncoder(rng.child("trunk"), channels, strides)
        self.use_prior = use_prior
        if use_prior:
            self.prior = PriorEncoder(rng.child("prior"), prior_channels,
                                      self.encoder.total_stride)
            self.proj = Linear(channels + prior_channels, channels, rng.child("proj"))

    def encode_one(self, image: Tensor) -> Tensor:
        f = self.encoder(image)
        if not self.use_prior:
            return f
        return fuse_prior(f, self.prior(image), self.proj)

    def __call__(self, left: Tensor, right: Tensor) -> tuple[Tensor, Tensor]:
        return self.encode_one(left), self.encode_one(right)
