"""Depth-from-disparity probe on minimal dot scenes.

A single small sphere of fixed angular size sits at a random image position
and a random depth around a reference distance. Angular size, color, and
image position carry no depth information, so the only usable cue is the
left/right disparity; a monocular readout (or a zero-baseline rig) can do no
better than predicting the mean. The probe regresses the normalized depth
offset and reports held-out RMSE; chance level for the uniform [-1, 1]
target is 1/sqrt(3).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import (Adam, Linear, Module, RngStream, concat, gelu, mean,
                        no_grad, reshape, set_default_dtype, tensor)
from ..models.encoder import ConvEncoder
from ..models.fusion import StereoLayer
from ..world import Scene, SceneObject, TaskConfig, external_rig, render

PROBE_STREAM = 404
CHANCE_RMSE = 1.0 / np.sqrt(3.0)

_DOT_COLOR = np.array([0.85, 0.25, 0.20])
_DOT_OID = 1
# generous bounds so dots at the far end of every distance cell fit
_WORKSPACE = (np.array([-0.9, -0.9, 0.05]), np.array([0.9, 0.9, 1.8]))


@dataclass(frozen=True)
class ProbeConfig:
    width: int = 32
    height: int = 32
    focal_px: float = 32.0
    margin_frac: float = 0.15
    dot_radius_px: float = 2.2
    depth_span: float = 1.0 / 3.0
    n_train: int = 512
    n_test: int = 256
    batch: int = 64
    steps: int = 300
    lr: float = 3e-3
    channels: int = 8
    d_model: int = 16
    heads: int = 2


@dataclass(frozen=True)
class ProbeResult:
    baseline_m: float
    distance_m: float
    ratio: float
    mode: str
    frozen: bool
    rmse: float


def _probe_task_config(pcfg: ProbeConfig, baseline_m: float) -> TaskConfig:
    return TaskConfig(width=pcfg.width, height=pcfg.height,
                      focal_px=pcfg.focal_px, baseline_m=baseline_m,
                      n_distractors=0)


def render_dot_set(baseline_m: float, distance_m: float, pcfg: ProbeConfig,
                   rng: RngStream, n: int) -> tuple[np.ndarray, np.ndarray]:
    """n stereo dot scenes; returns (images (n, 2, H, W, 3) f32, zeta (n,))."""
    if distance_m <= 0:
        raise ValueError("distance must be positive")
    tc = _probe_task_config(pcfg, baseline_m)
    rig = external_rig(tc)
    f = tc.focal
    w, h = pcfg.width, pcfg.height
    mu, mv = pcfg.margin_frac * w, pcfg.margin_frac * h
    images = np.zeros((n, 2, h, w, 3), dtype=np.float32)
    zeta = np.zeros(n)
    for i in range(n):
        child = rng.child(f"dot{i}")
        u = float(child.uniform(mu, w - mu, ()))
        v = float(child.uniform(mv, h - mv, ()))
        z = float(child.uniform(-1.0, 1.0, ()))
        depth = distance_m * (1.0 + z * pcfg.depth_span)
        center = np.array([(u - w / 2.0) / f * depth,
                           (v - h / 2.0) / f * depth, depth])
        radius = pcfg.dot_radius_px * depth / f
        dot = SceneObject("sphere", center, radius, _DOT_COLOR, _DOT_OID)
        scene = Scene((dot,), _DOT_OID, _WORKSPACE)
        res = render(scene, rig)
        images[i, 0] = res.left
        images[i, 1] = res.right
        zeta[i] = z
    return images, zeta


class DepthProbe(Module):
    """Tiny per-eye encoder, optional one-layer stereo fusion, and a readout
    over spatially pooled tokens.

    Pooling happens per eye after fusion, so image position is marginalized
    out; the only route by which depth can reach the readout is the
    relative-offset information that cross-attention extracts from the pair.
    A monocular probe with the same pooling is structurally blind to depth.
    """

    def __init__(self, rng: RngStream, pcfg: ProbeConfig, mode: str = "stereo"):
        if mode not in ("stereo", "mono"):
            raise ValueError(f"unknown probe mode {mode!r}")
        self.mode = mode
        self.encoder = ConvEncoder(rng.child("encoder"), channels=pcfg.channels,
                                   strides=(2, 2), in_channels=3)
        self.proj = Linear(pcfg.channels, pcfg.d_model, rng.child("proj"))
        g = (pcfg.height // 4, pcfg.width // 4)
        self.grid = g
        if mode == "stereo":
            self.fusion = StereoLayer(rng.child("fusion"), pcfg.d_model,
                                      pcfg.heads, g)
        d_in = pcfg.d_model * (2 if mode == "stereo" else 1)
        self.head_in = Linear(d_in, 64, rng.child("head_in"))
        self.head_out = Linear(64, 1, rng.child("head_out"))

    def _tokens(self, images):
        h = self.encoder(images)
        b = h.shape[0]
        n = h.shape[1] * h.shape[2]
        return self.proj(reshape(h, (b, n, h.shape[3])))

    def fused_tokens(self, images: np.ndarray) -> tuple:
        """Per-token features after fusion, (left, right) each (B, n, d)."""
        if self.mode != "stereo":
            raise ValueError("fused tokens exist only in stereo mode")
        left = self._tokens(tensor(images[:, 0]))
        right = self._tokens(tensor(images[:, 1]))
        return self.fusion(left, right)

    def __call__(self, images: np.ndarray):
        if self.mode == "mono":
            feats = mean(self._tokens(tensor(images[:, 0])), axis=1)
        else:
            fl, fr = self.fused_tokens(images)
            feats = concat([mean(fl, axis=1), mean(fr, axis=1)], axis=-1)
        return self.head_out(gelu(self.head_in(feats)))


def _frozen_features(probe: DepthProbe, images: np.ndarray,
                     batch: int = 64) -> np.ndarray:
    """Pooled fusion features of a randomly initialized probe, (B, 2d)."""
    out = []
    with no_grad():
        for i in range(0, len(images), batch):
            chunk = images[i:i + batch]
            fl, fr = probe.fused_tokens(chunk)
            out.append(np.concatenate(
                [fl.data.mean(axis=1), fr.data.mean(axis=1)], axis=1))
    return np.concatenate(out).astype(np.float64)


def ridge_readout_rmse(f_train: np.ndarray, y_train: np.ndarray,
                       f_test: np.ndarray, y_test: np.ndarray,
                       lam_scale: float = 1e-3) -> float:
    """Closed-form linear ridge readout, solved in sample space so feature
    dimension can exceed the sample count."""
    mu = f_train.mean(axis=0)
    sd = f_train.std() + 1e-12
    a_tr = (f_train - mu) / sd
    a_te = (f_test - mu) / sd
    y_mu = y_train.mean()
    k = a_tr @ a_tr.T
    n = len(y_train)
    lam = lam_scale * np.trace(k) / n
    alpha = np.linalg.solve(k + lam * np.eye(n), y_train - y_mu)
    pred = a_te @ a_tr.T @ alpha + y_mu
    return float(np.sqrt(np.mean((pred - y_test) ** 2)))


def train_probe(baseline_m: float, distance_m: float, pcfg: ProbeConfig,
                seed: int, mode: str = "stereo",
                frozen: bool = False) -> ProbeResult:
    """Fit one probe on freshly rendered scenes; RMSE is on held-out scenes.

    frozen=True keeps the whole network at its random initialization and fits
    only a closed-form linear ridge readout on the per-token fusion features.
    """
    stream = RngStream(seed, PROBE_STREAM)
    key = f"b{baseline_m:.3f}d{distance_m:.3f}"
    tr_img, tr_z = render_dot_set(baseline_m, distance_m, pcfg,
                                  stream.child(f"train-{key}"), pcfg.n_train)
    te_img, te_z = render_dot_set(baseline_m, distance_m, pcfg,
                                  stream.child(f"test-{key}"), pcfg.n_test)
    set_default_dtype(np.float32)
    try:
        probe = DepthProbe(stream.child("model"), pcfg, mode=mode)
        if frozen:
            f_tr = _frozen_features(probe, tr_img)
            f_te = _frozen_features(probe, te_img)
            rmse = ridge_readout_rmse(f_tr, tr_z, f_te, te_z)
        else:
            optim = Adam(probe.parameters(trainable_only=True), lr=pcfg.lr)
            batch_rng = stream.child("batches")
            for _ in range(pcfg.steps):
                picks = batch_rng.integers(0, pcfg.n_train, (pcfg.batch,))
                pred = probe(tr_img[picks])
                err = pred + tensor(tr_z[picks][:, None]) * (-1.0)
                loss = mean(err * err)
                loss.backward()
                optim.step()
                optim.zero_grad()
            with no_grad():
                pred = probe(te_img).data[:, 0]
            rmse = float(np.sqrt(np.mean((pred - te_z) ** 2)))
    finally:
        set_default_dtype(np.float64)
    ratio = baseline_m / distance_m
    return ProbeResult(baseline_m=baseline_m, distance_m=distance_m,
                       ratio=ratio, mode=mode, frozen=frozen, rmse=rmse)
