"""Rectified pinhole stereo rig: projection and disparity.

Camera frame convention: +x right, +y down, +z forward (optical axis).
Poses map camera coordinates to world coordinates; the right eye sits at
+baseline along the rig's local x-axis with the same orientation, so
epipolar lines are horizontal and v_left == v_right exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class BehindCameraError(ValueError):
    """Raised when a query point has non-positive depth in some eye."""


@dataclass(frozen=True)
class CameraIntrinsics:
    focal_px: float
    principal_point: tuple[float, float]
    resolution: tuple[int, int]  # (W, H)

    def __post_init__(self):
        if self.focal_px <= 0:
            raise ValueError(f"focal_px must be positive, got {self.focal_px}")
        w, h = self.resolution
        cx, cy = self.principal_point
        if not (w > 0 and h > 0):
            raise ValueError(f"resolution must be positive, got {self.resolution}")
        if not (0.0 <= cx <= w and 0.0 <= cy <= h):
            raise ValueError(f"principal point {self.principal_point} outside {w}x{h} image")


def _identity_rotation() -> np.ndarray:
    return np.eye(3)


def _zero_position() -> np.ndarray:
    return np.zeros(3)


@dataclass(frozen=True)
class Pose:
    """Rigid camera-to-world transform."""

    rotation: np.ndarray = field(default_factory=_identity_rotation)
    position: np.ndarray = field(default_factory=_zero_position)

    def world_to_camera(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points, dtype=np.float64) - self.position) @ self.rotation

    def camera_to_world(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) @ self.rotation.T + self.position

    def translated(self, offset_local: np.ndarray) -> "Pose":
        return Pose(self.rotation, self.position + self.rotation @ np.asarray(offset_local, dtype=np.float64))


@dataclass(frozen=True)
class CameraRig:
    """Rectified stereo pair; both eyes share intrinsics and orientation."""

    intrinsics: CameraIntrinsics
    baseline_m: float
    pose: Pose = field(default_factory=Pose)
    rectified: bool = True

    def __post_init__(self):
        if self.baseline_m < 0:
            raise ValueError(f"baseline must be non-negative, got {self.baseline_m}")
        if not self.rectified:
            raise ValueError("only rectified rigs are supported")

    @property
    def left_pose(self) -> Pose:
        return self.pose

    @property
    def right_pose(self) -> Pose:
        return self.pose.translated(np.array([self.baseline_m, 0.0, 0.0]))

    def ratio(self, point: np.ndarray) -> float:
        """baseline / euclidean camera-object distance."""
        d = float(np.linalg.norm(np.asarray(point, dtype=np.float64) - self.pose.position))
        if d <= 0:
            raise ValueError("point coincides with the rig origin")
        return self.baseline_m / d


def project_points(points: np.ndarray, intrinsics: CameraIntrinsics,
                   pose: Pose | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized pinhole projection.

    Returns (uv (M,2), depth (M,), in_front (M,) bool); uv is nan where
    in_front is False.
    """
    pose = pose or Pose()
    pc = pose.world_to_camera(np.atleast_2d(points))
    z = pc[:, 2]
    in_front = z > 0.0
    cx, cy = intrinsics.principal_point
    with np.errstate(divide="ignore", invalid="ignore"):
        u = intrinsics.focal_px * pc[:, 0] / z + cx
        v = intrinsics.focal_px * pc[:, 1] / z + cy
    uv = np.stack([u, v], axis=1)
    uv[~in_front] = np.nan
    return uv, z, in_front


def project(point: np.ndarray, intrinsics: CameraIntrinsics,
            pose: Pose | None = None) -> tuple[float, float, bool]:
    """Single-point projection: (u, v, in_front). u, v are nan behind the camera."""
    uv, _, in_front = project_points(np.asarray(point, dtype=np.float64)[None, :], intrinsics, pose)
    return float(uv[0, 0]), float(uv[0, 1]), bool(in_front[0])


def disparity(point: np.ndarray, rig: CameraRig) -> float:
    """u_left - u_right; equals focal * baseline / depth for rectified rigs."""
    ul, _, ok_l = project(point, rig.intrinsics, rig.left_pose)
    ur, _, ok_r = project(point, rig.intrinsics, rig.right_pose)
    if not (ok_l and ok_r):
        raise BehindCameraError(f"point {point} is behind the rig")
    return ul - ur
