"""Binary trajectory persistence.

Layout (little-endian throughout):
  header: magic "SPL1", version u32, trajectory count u64,
          W u32, H u32, N_views u32, A u32, P u32
  per trajectory: n_steps u32, success u8, then per step:
          images u8[N_views, 2, H, W, 3], proprio f32[P], action f32[A]

Images are stored as 8-bit channels; observations already hold exact
multiples of 1/255, so write -> read -> write is byte-stable.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .task import StereoObservation, Trajectory

MAGIC = b"SPL1"
VERSION = 1
_HEADER = struct.Struct("<4sIQIIIII")
_TRAJ = struct.Struct("<IB")


class DatasetFormatError(ValueError):
    pass


def _dims(traj: Trajectory) -> tuple[int, int, int, int, int]:
    obs = traj.observations[0]
    n_views, _, h, w, _ = obs.images.shape
    return w, h, n_views, traj.actions.shape[1], obs.proprio.shape[0]


def write_dataset(trajectories: list[Trajectory], path: str | Path) -> None:
    path = Path(path)
    if trajectories:
        w, h, n_views, a_dim, p_dim = _dims(trajectories[0])
    else:
        w = h = n_views = a_dim = p_dim = 0
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, len(trajectories), w, h, n_views, a_dim, p_dim))
        for traj in trajectories:
            if _dims(traj) != (w, h, n_views, a_dim, p_dim):
                raise DatasetFormatError("trajectories disagree on dimensions")
            fh.write(_TRAJ.pack(len(traj.observations), int(traj.success)))
            for obs, act in zip(traj.observations, traj.actions):
                img8 = np.round(obs.images * 255.0).astype(np.uint8)
                fh.write(img8.tobytes())
                fh.write(np.ascontiguousarray(obs.proprio, dtype="<f4").tobytes())
                fh.write(np.ascontiguousarray(act, dtype="<f4").tobytes())


def _read_exact(fh, n: int) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise DatasetFormatError(f"truncated file: wanted {n} bytes, got {len(buf)}")
    return buf


def read_dataset(path: str | Path) -> list[Trajectory]:
    path = Path(path)
    with open(path, "rb") as fh:
        magic, version, count, w, h, n_views, a_dim, p_dim = _HEADER.unpack(
            _read_exact(fh, _HEADER.size))
        if magic != MAGIC:
            raise DatasetFormatError(f"bad magic {magic!r}")
        if version != VERSION:
            raise DatasetFormatError(f"unsupported version {version} (expected {VERSION})")
        img_bytes = n_views * 2 * h * w * 3
        out = []
        for _ in range(count):
            n_steps, success = _TRAJ.unpack(_read_exact(fh, _TRAJ.size))
            observations = []
            actions = np.empty((n_steps, a_dim), dtype=np.float32)
            for t in range(n_steps):
                img8 = np.frombuffer(_read_exact(fh, img_bytes), dtype=np.uint8)
                images = img8.reshape(n_views, 2, h, w, 3).astype(np.float64) / 255.0
                proprio = np.frombuffer(_read_exact(fh, 4 * p_dim), dtype="<f4").copy()
                actions[t] = np.frombuffer(_read_exact(fh, 4 * a_dim), dtype="<f4")
                observations.append(StereoObservation(images, proprio, t))
            out.append(Trajectory(observations, actions, bool(success)))
        trailing = fh.read(1)
        if trailing:
            raise DatasetFormatError("trailing bytes after last trajectory")
    return out
