"""Deterministic z-buffered ray caster for sphere/box scenes.

Flat ambient+directional shading, optional world-space checkerboard albedo.
Output images are quantized to 8-bit levels (multiples of 1/255) so that
dataset round-trips are exact. Ground-truth depth and object-id maps are
returned for oracle tests and the depth probe; policies never see them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import CameraIntrinsics, CameraRig, Pose
from .scene import Scene, SceneObject

MAX_RES = 256
_EPS = 1e-9


@dataclass(frozen=True)
class RenderResult:
    left: np.ndarray  # (H, W, 3) float64 in [0, 1], 8-bit quantized
    right: np.ndarray
    depth_left: np.ndarray  # (H, W) camera-frame z, inf at background
    depth_right: np.ndarray
    oid_left: np.ndarray  # (H, W) int32 object ids, -1 at background
    oid_right: np.ndarray


def _ray_grid(intrinsics: CameraIntrinsics, pose: Pose) -> tuple[np.ndarray, np.ndarray]:
    """Unit world-frame ray directions through pixel centers and 1/norm factors."""
    w, h = intrinsics.resolution
    cx, cy = intrinsics.principal_point
    f = intrinsics.focal_px
    us = (np.arange(w) + 0.5 - cx) / f
    vs = (np.arange(h) + 0.5 - cy) / f
    dx, dy = np.meshgrid(us, vs)
    dirs = np.stack([dx, dy, np.ones_like(dx)], axis=-1)
    norms = np.linalg.norm(dirs, axis=-1, keepdims=True)
    unit_cam = dirs / norms
    unit_world = unit_cam @ pose.rotation.T
    # camera-frame z of the unit direction; converts ray length to z-depth
    z_factor = 1.0 / norms[..., 0]
    return unit_world, z_factor


def _intersect_sphere(origin, dirs, obj: SceneObject):
    oc = origin - obj.center
    b = dirs @ oc
    c0 = float(oc @ oc) - float(obj.size[0]) ** 2
    disc = b * b - c0
    with np.errstate(invalid="ignore"):
        t = -b - np.sqrt(disc)
    hit = (disc >= 0) & (t > _EPS)
    return np.where(hit, t, np.inf)


def _intersect_box(origin, dirs, obj: SceneObject):
    lo = obj.center - obj.size
    hi = obj.center + obj.size
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / dirs
        t1 = (lo - origin) * inv
        t2 = (hi - origin) * inv
    tn = np.nanmax(np.minimum(t1, t2), axis=-1)
    tf = np.nanmin(np.maximum(t1, t2), axis=-1)
    t = np.where(tn > _EPS, tn, tf)
    hit = (tn <= tf) & (tf > _EPS) & (t > _EPS)
    return np.where(hit, t, np.inf)


def _box_normal(hit_pts, obj: SceneObject):
    rel = (hit_pts - obj.center) / obj.size
    axis = np.argmax(np.abs(rel), axis=-1)
    n = np.zeros_like(hit_pts)
    rows = np.arange(hit_pts.shape[0])
    n[rows, axis] = np.sign(rel[rows, axis])
    return n


def _checker_factor(points: np.ndarray, cell: float) -> np.ndarray:
    parity = np.floor(points / cell).sum(axis=-1).astype(np.int64) & 1
    return np.where(parity == 0, 1.0, 0.55)


def render_view(scene: Scene, intrinsics: CameraIntrinsics,
                pose: Pose) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Render one eye; returns (image, depth, oid) maps."""
    w, h = intrinsics.resolution
    if w > MAX_RES or h > MAX_RES:
        raise ValueError(f"resolution {w}x{h} exceeds {MAX_RES}x{MAX_RES}")
    dirs, z_factor = _ray_grid(intrinsics, pose)
    origin = pose.position

    t_best = np.full((h, w), np.inf)
    idx_best = np.full((h, w), -1, dtype=np.int64)
    for i, obj in enumerate(scene.objects):
        t = (_intersect_sphere if obj.kind == "sphere" else _intersect_box)(origin, dirs, obj)
        closer = t < t_best
        t_best = np.where(closer, t, t_best)
        idx_best = np.where(closer, i, idx_best)

    img = np.tile(scene.background, (h, w, 1))
    oid = np.full((h, w), -1, dtype=np.int32)
    light = scene.lighting
    for i, obj in enumerate(scene.objects):
        mask = idx_best == i
        if not mask.any():
            continue
        tm = t_best[mask]
        pts = origin + dirs[mask] * tm[:, None]
        if obj.kind == "sphere":
            normals = (pts - obj.center) / obj.size[0]
        else:
            normals = _box_normal(pts, obj)
        albedo = np.tile(obj.albedo, (pts.shape[0], 1))
        if scene.checker:
            albedo = albedo * _checker_factor(pts, scene.checker_cell)[:, None]
        lambert = np.maximum(normals @ light.direction, 0.0)
        shade = np.clip(light.ambient + light.directional * lambert, 0.0, 1.0)
        img[mask] = np.clip(albedo * shade[:, None], 0.0, 1.0)
        oid[mask] = obj.oid

    depth = np.where(np.isfinite(t_best), t_best * z_factor, np.inf)
    img = np.round(img * 255.0) / 255.0
    return img, depth, oid


def render(scene: Scene, rig: CameraRig) -> RenderResult:
    li, ld, lo = render_view(scene, rig.intrinsics, rig.left_pose)
    ri, rd, ro = render_view(scene, rig.intrinsics, rig.right_pose)
    return RenderResult(li, ri, ld, rd, lo, ro)
