"""Frame-feature tensors, the FVT1 binary format, and synthetic test data.

A frame-feature tensor collects per-frame patch-token embeddings with shape
(n_frames, n_patches, dim) in 32-bit floats. Everything downstream (scene
selection, merging, compression) consumes this one type.
"""

from __future__ import annotations

import json
import math
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, ParameterError

MAGIC = b"FVT1"
FORMAT_VERSION = 1

# magic (4 bytes), version (1 byte), rank (uint32-LE); dims follow as uint32-LE.
_HEADER = struct.Struct("<4sBI")
_DIM = struct.Struct("<I")
HEADER_SIZE = _HEADER.size + 3 * _DIM.size


@dataclass(frozen=True, eq=False)
class FrameFeatures:
    """Per-frame patch-token embeddings, shape (n_frames, n_patches, dim).

    The tensor is stored float32 C-contiguous and treated as immutable.
    ``frame_timestamps``, when present, gives one non-negative second value
    per frame in strictly increasing order.
    """

    data: np.ndarray
    frame_timestamps: tuple[float, ...] | None = None

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 3:
            raise ParameterError(f"frame features must be rank 3, got rank {data.ndim}")
        if min(data.shape) < 1:
            raise ParameterError(f"frame feature dims must be >= 1, got {data.shape}")
        data = np.ascontiguousarray(data, dtype=np.float32)
        if not np.all(np.isfinite(data)):
            raise ParameterError("frame features contain non-finite values")
        object.__setattr__(self, "data", data)
        if self.frame_timestamps is not None:
            ts = tuple(float(t) for t in self.frame_timestamps)
            if len(ts) != data.shape[0]:
                raise ParameterError(
                    f"expected {data.shape[0]} timestamps, got {len(ts)}"
                )
            if any(t < 0 or not math.isfinite(t) for t in ts):
                raise ParameterError("timestamps must be finite and non-negative")
            if any(b <= a for a, b in zip(ts, ts[1:])):
                raise ParameterError("timestamps must be strictly increasing")
            object.__setattr__(self, "frame_timestamps", ts)

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    @property
    def n_patches(self) -> int:
        return self.data.shape[1]

    @property
    def dim(self) -> int:
        return self.data.shape[2]


def _meta_path(path: Path) -> Path:
    return path.with_name(path.name + ".meta.json")


def _atomic_write(path: Path, payload: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_features(features: FrameFeatures, path: str | Path) -> None:
    """Write *features* to *path* in the FVT1 layout.

    Layout: magic b"FVT1", one version byte, the rank (always 3) as
    uint32-LE, three uint32-LE dims, then the float32-LE payload in
    row-major order. Identical tensors always produce identical bytes.
    Timestamps, when present, go to a ``<path>.meta.json`` sidecar.
    """
    path = Path(path)
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, 3)
    dims = b"".join(_DIM.pack(d) for d in features.data.shape)
    payload = np.ascontiguousarray(features.data, dtype="<f4").tobytes()
    _atomic_write(path, header + dims + payload)
    meta = _meta_path(path)
    if features.frame_timestamps is not None:
        doc = {"frame_timestamps": list(features.frame_timestamps)}
        _atomic_write(meta, (json.dumps(doc, sort_keys=True) + "\n").encode())
    elif meta.exists():
        # a stale sidecar would attach wrong timestamps on the next load
        meta.unlink()


def load_features(path: str | Path) -> FrameFeatures:
    """Read an FVT1 file written by :func:`save_features`.

    Raises:
        FormatError: bad magic, version, rank, or dims; truncated or
            oversized payload.
        ParameterError: payload contains non-finite values.
    """
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < HEADER_SIZE:
        raise FormatError(f"{path}: truncated header ({len(raw)} of {HEADER_SIZE} bytes)")
    magic, version, rank = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported version {version}, expected {FORMAT_VERSION}")
    if rank != 3:
        raise FormatError(f"{path}: bad rank {rank}, expected 3")
    dims = [
        _DIM.unpack_from(raw, _HEADER.size + i * _DIM.size)[0] for i in range(3)
    ]
    for name, d in zip(("n_frames", "n_patches", "dim"), dims):
        if d < 1:
            raise FormatError(f"{path}: invalid {name} {d}, must be >= 1")
    expected = dims[0] * dims[1] * dims[2] * 4
    got = len(raw) - HEADER_SIZE
    if got < expected:
        raise FormatError(f"{path}: truncated payload, expected {expected} bytes, got {got}")
    if got > expected:
        raise FormatError(f"{path}: {got - expected} trailing bytes after payload")
    data = np.frombuffer(raw, dtype="<f4", count=expected // 4, offset=HEADER_SIZE)
    data = data.reshape(dims).copy()

    timestamps = None
    meta = _meta_path(path)
    if meta.exists():
        try:
            doc = json.loads(meta.read_text())
        except json.JSONDecodeError as exc:
            raise FormatError(f"{meta}: invalid JSON at byte offset {exc.pos}") from exc
        if not isinstance(doc, dict) or "frame_timestamps" not in doc:
            raise FormatError(f"{meta}: missing frame_timestamps field")
        timestamps = tuple(doc["frame_timestamps"])
    return FrameFeatures(data, timestamps)


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a deterministic tensor with planted scene structure."""

    n_frames: int
    n_patches: int
    dim: int
    n_scenes: int
    noise_sigma: float = 0.1
    seed: int = 0

    def __post_init__(self):
        for name in ("n_frames", "n_patches", "dim", "n_scenes"):
            if getattr(self, name) < 1:
                raise ParameterError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.n_scenes > self.n_frames:
            raise ParameterError(
                f"n_scenes {self.n_scenes} exceeds n_frames {self.n_frames}"
            )
        if not (math.isfinite(self.noise_sigma) and self.noise_sigma >= 0):
            raise ParameterError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if self.seed < 0:
            raise ParameterError(f"seed must be a non-negative integer, got {self.seed}")


def planted_block_labels(spec: SyntheticSpec) -> np.ndarray:
    """Ground-truth block label per frame for :func:`generate_synthetic`."""
    labels = np.empty(spec.n_frames, dtype=np.int64)
    for b, block in enumerate(np.array_split(np.arange(spec.n_frames), spec.n_scenes)):
        labels[block] = b
    return labels


def _block_offset(b: int, dim: int, scale: float) -> np.ndarray:
    # axis-aligned offsets: blocks get orthogonal directions first, then
    # opposite signs, then larger magnitudes, so any two block means sit at
    # least `scale` apart while cross-block cosine stays far from 1
    axis = b % dim
    sign = 1.0 if (b // dim) % 2 == 0 else -1.0
    tier = 1 + b // (2 * dim)
    offset = np.zeros(dim)
    offset[axis] = sign * tier * scale
    return offset


def generate_synthetic(spec: SyntheticSpec) -> FrameFeatures:
    """Generate frames in contiguous blocks around well-separated base patterns.

    Each block's base pattern has a per-dim mean over patches equal to an
    axis-aligned offset of length at least ``(10*noise_sigma + 1) *
    sqrt(dim)``, so block means in representative space are pairwise
    separated by at least ``10 * noise_sigma * sqrt(dim)`` and point in
    distinguishable directions. Frames are the base pattern plus i.i.d.
    Gaussian noise of std ``noise_sigma``. Pure function of the spec,
    including the seed.
    """
    rng = np.random.default_rng(spec.seed)
    scale = (10.0 * spec.noise_sigma + 1.0) * math.sqrt(spec.dim)
    data = np.empty((spec.n_frames, spec.n_patches, spec.dim), dtype=np.float64)
    for b, block in enumerate(np.array_split(np.arange(spec.n_frames), spec.n_scenes)):
        texture = rng.standard_normal((spec.n_patches, spec.dim))
        texture -= texture.mean(axis=0, keepdims=True)  # keeps block means exact
        base = texture + _block_offset(b, spec.dim, scale)
        noise = rng.standard_normal((len(block), spec.n_patches, spec.dim))
        data[block] = base + spec.noise_sigma * noise
    return FrameFeatures(data.astype(np.float32))
