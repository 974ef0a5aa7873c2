"""Scene description: shaded primitives inside a declared workspace box."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _default_light() -> np.ndarray:
    v = np.array([0.25, -0.45, -0.86])
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class Lighting:
    ambient: float = 0.35
    directional: float = 0.65
    direction: np.ndarray = field(default_factory=_default_light)  # unit vector toward the light


@dataclass(frozen=True)
class SceneObject:
    kind: str  # "sphere" or "box"
    center: np.ndarray  # (3,) world position
    size: np.ndarray  # sphere: (1,) radius; box: (3,) half extents
    albedo: np.ndarray  # (3,) rgb in [0,1]
    oid: int

    def __post_init__(self):
        if self.kind not in ("sphere", "box"):
            raise ValueError(f"unknown primitive kind {self.kind!r}")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64))
        object.__setattr__(self, "size", np.atleast_1d(np.asarray(self.size, dtype=np.float64)))
        object.__setattr__(self, "albedo", np.asarray(self.albedo, dtype=np.float64))
        if np.any(self.size <= 0):
            raise ValueError("object size must be positive")

    @property
    def extent(self) -> np.ndarray:
        """Axis-aligned half extents of the bounding box."""
        if self.kind == "sphere":
            return np.full(3, self.size[0])
        return self.size


@dataclass(frozen=True)
class Scene:
    objects: tuple[SceneObject, ...]
    target_id: int
    workspace: tuple[np.ndarray, np.ndarray]  # (lo, hi) corners
    lighting: Lighting = field(default_factory=Lighting)
    background: np.ndarray = field(default_factory=lambda: np.array([0.10, 0.11, 0.13]))
    checker: bool = False  # world-space checkerboard albedo modulation
    checker_cell: float = 0.04

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        lo, hi = (np.asarray(c, dtype=np.float64) for c in self.workspace)
        object.__setattr__(self, "workspace", (lo, hi))
        n_targets = sum(1 for o in self.objects if o.oid == self.target_id)
        if n_targets != 1:
            raise ValueError(f"scene must contain exactly one target object, found {n_targets}")
        ids = [o.oid for o in self.objects]
        if len(set(ids)) != len(ids):
            raise ValueError("object ids must be unique")
        for o in self.objects:
            if np.any(o.center - o.extent < lo - 1e-9) or np.any(o.center + o.extent > hi + 1e-9):
                raise ValueError(f"object {o.oid} leaves the workspace box")

    @property
    def target(self) -> SceneObject:
        return next(o for o in self.objects if o.oid == self.target_id)

    def with_extra(self, extra: list[SceneObject]) -> "Scene":
        """Scene plus transient objects (e.g. the end effector marker)."""
        return Scene(self.objects + tuple(extra), self.target_id, self.workspace,
                     self.lighting, self.background, self.checker, self.checker_cell)
