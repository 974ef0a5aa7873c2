"""Binary checkpoint container: named float64 parameter blobs plus action
normalization statistics, written in sorted-name order so files are
byte-stable for identical contents.

Layout (little-endian):
    magic "SPCK" | u32 version | u32 hash_len | config hash (ascii)
    u32 n_params
    per parameter, names sorted:
        u16 name_len | name utf-8 | u8 ndim | u32 dims... | f64 data
    u8 has_normalizer | [u32 dim | f64 lo... | f64 hi...]
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..autodiff import Module
from ..models import Normalizer

MAGIC = b"SPCK"
VERSION = 1


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    params: dict[str, np.ndarray]  # float64
    config_hash: str
    normalizer: Normalizer | None
    version: int = VERSION


def save_checkpoint(path: str | Path, params: dict[str, np.ndarray],
                    config_hash: str, normalizer: Normalizer | None = None) -> None:
    chunks = [MAGIC, struct.pack("<I", VERSION)]
    h = config_hash.encode("ascii")
    chunks.append(struct.pack("<I", len(h)))
    chunks.append(h)
    chunks.append(struct.pack("<I", len(params)))
    for name in sorted(params):
        # ascontiguousarray would promote 0-d entries to 1-d; keep their shape
        data = np.asarray(params[name], dtype="<f8")
        if data.ndim:
            data = np.ascontiguousarray(data)
        nb = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(nb)))
        chunks.append(nb)
        chunks.append(struct.pack("<B", data.ndim))
        chunks.append(struct.pack(f"<{data.ndim}I", *data.shape))
        chunks.append(data.tobytes())
    if normalizer is None:
        chunks.append(struct.pack("<B", 0))
    else:
        st = normalizer.state()
        lo = np.ascontiguousarray(st["lo"], dtype="<f8")
        hi = np.ascontiguousarray(st["hi"], dtype="<f8")
        chunks.append(struct.pack("<B", 1))
        chunks.append(struct.pack("<I", lo.size))
        chunks.append(lo.tobytes())
        chunks.append(hi.tobytes())
    Path(path).write_bytes(b"".join(chunks))


class _Reader:
    def __init__(self, blob: bytes, path):
        self.blob = blob
        self.off = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.off + n > len(self.blob):
            raise CheckpointError(f"{self.path}: truncated checkpoint")
        out = self.blob[self.off:self.off + n]
        self.off += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def read_checkpoint(path: str | Path) -> Checkpoint:
    r = _Reader(Path(path).read_bytes(), path)
    if r.take(4) != MAGIC:
        raise CheckpointError(f"{path}: bad magic, not a checkpoint file")
    (version,) = r.unpack("<I")
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    (hash_len,) = r.unpack("<I")
    config_hash = r.take(hash_len).decode("ascii")
    (n_params,) = r.unpack("<I")
    params = {}
    for _ in range(n_params):
        (name_len,) = r.unpack("<H")
        name = r.take(name_len).decode("utf-8")
        (ndim,) = r.unpack("<B")
        shape = r.unpack(f"<{ndim}I")
        count = int(np.prod(shape)) if ndim else 1
        data = np.frombuffer(r.take(8 * count), dtype="<f8").reshape(shape)
        params[name] = data.copy()
    (has_norm,) = r.unpack("<B")
    normalizer = None
    if has_norm:
        (dim,) = r.unpack("<I")
        lo = np.frombuffer(r.take(8 * dim), dtype="<f8").copy()
        hi = np.frombuffer(r.take(8 * dim), dtype="<f8").copy()
        normalizer = Normalizer(lo, hi)
    if r.off != len(r.blob):
        raise CheckpointError(f"{path}: {len(r.blob) - r.off} trailing bytes")
    return Checkpoint(params=params, config_hash=config_hash, normalizer=normalizer)


def module_params(module: Module) -> dict[str, np.ndarray]:
    return {name: np.asarray(p.value.data, dtype=np.float64)
            for name, p in module.named_parameters()}


def load_into(module: Module, ckpt: Checkpoint) -> None:
    own = dict(module.named_parameters())
    missing = sorted(set(own) - set(ckpt.params))
    extra = sorted(set(ckpt.params) - set(own))
    if missing or extra:
        raise CheckpointError(f"parameter mismatch: missing={missing}, extra={extra}")
    for name, p in own.items():
        stored = ckpt.params[name]
        if stored.shape != tuple(p.shape):
            raise CheckpointError(f"{name}: stored shape {stored.shape} != {tuple(p.shape)}")
        p.assign(stored)
