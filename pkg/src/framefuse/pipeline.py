"""End-to-end compression: sample frames, group into scenes, merge each
scene, and emit the compressed feature sequence (for example 96 input
frames reduced to 32 merged frames)."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .features import FrameFeatures
from .merge import STRATEGIES, attn_projections, merge_scene
from .select import (
    Scene,
    SceneSet,
    representative_features,
    select_scenes_bsm,
    select_scenes_kmeans,
)

SELECTIONS = ("uniform", "kmeans", "bsm")


@dataclass(frozen=True)
class CompressConfig:
    """One compression run: how many frames to take, how to group and merge."""

    input_frames: int
    scenes_k: int
    supplements_r: int
    selection: str = "uniform"
    merging: str = "tavg"
    seed: int = 0

    def __post_init__(self):
        if self.input_frames < 1:
            raise ParameterError(f"input_frames must be >= 1, got {self.input_frames}")
        if self.scenes_k < 1:
            raise ParameterError(f"scenes_k must be >= 1, got {self.scenes_k}")
        if self.supplements_r < 0:
            raise ParameterError(f"supplements_r must be >= 0, got {self.supplements_r}")
        if self.scenes_k * (self.supplements_r + 1) > self.input_frames:
            raise ParameterError(
                f"scenes_k*(supplements_r+1) = {self.scenes_k * (self.supplements_r + 1)} "
                f"exceeds input_frames {self.input_frames}"
            )
        if self.selection not in SELECTIONS:
            raise ParameterError(
                f"unknown selection {self.selection!r}, expected one of {SELECTIONS}"
            )
        if self.merging not in STRATEGIES:
            raise ParameterError(
                f"unknown merging {self.merging!r}, expected one of {STRATEGIES}"
            )
        if self.seed < 0:
            raise ParameterError(f"seed must be a non-negative integer, got {self.seed}")

    def to_dict(self) -> dict:
        return {
            "input_frames": self.input_frames,
            "scenes_k": self.scenes_k,
            "supplements_r": self.supplements_r,
            "selection": self.selection,
            "merging": self.merging,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "CompressConfig":
        missing = {"input_frames", "scenes_k", "supplements_r"} - set(doc)
        if missing:
            raise ParameterError(f"config missing fields: {sorted(missing)}")
        return cls(
            input_frames=int(doc["input_frames"]),
            scenes_k=int(doc["scenes_k"]),
            supplements_r=int(doc["supplements_r"]),
            selection=doc.get("selection", "uniform"),
            merging=doc.get("merging", "tavg"),
            seed=int(doc.get("seed", 0)),
        )


def uniform_sample_indices(total: int, n: int) -> list[int]:
    """Evenly spread n frame indices over [0, total): index j is floor(j*total/n)."""
    if total < 1:
        raise ParameterError(f"total must be >= 1, got {total}")
    if not 1 <= n <= total:
        raise ParameterError(f"sample count {n} outside [1, {total}]")
    return [(j * total) // n for j in range(n)]


def group_uniform_scenes(indices: list[int], scene_size: int) -> SceneSet:
    """Chunk consecutive indices into scenes; the middle member represents."""
    if scene_size < 1:
        raise ParameterError(f"scene_size must be >= 1, got {scene_size}")
    if len(indices) % scene_size != 0:
        raise ParameterError(
            f"{len(indices)} frames do not divide into scenes of {scene_size}"
        )
    scenes = []
    for start in range(0, len(indices), scene_size):
        chunk = [int(i) for i in indices[start:start + scene_size]]
        scenes.append(Scene(representative=chunk[scene_size // 2], members=tuple(chunk)))
    return SceneSet(scenes=tuple(scenes), r=scene_size - 1, warnings=())


def _select(sub: FrameFeatures, cfg: CompressConfig) -> SceneSet:
    if cfg.selection == "uniform":
        if cfg.input_frames != cfg.scenes_k * (cfg.supplements_r + 1):
            raise ParameterError(
                "uniform selection requires input_frames == scenes_k*(supplements_r+1); "
                f"got {cfg.input_frames} != {cfg.scenes_k}*{cfg.supplements_r + 1}"
            )
        return group_uniform_scenes(list(range(cfg.input_frames)), cfg.supplements_r + 1)
    if cfg.selection == "kmeans":
        return select_scenes_kmeans(sub, cfg.scenes_k, cfg.supplements_r, seed=cfg.seed)
    return select_scenes_bsm(sub, cfg.scenes_k, cfg.supplements_r)


def compress(
    features: FrameFeatures,
    cfg: CompressConfig,
    weights: np.ndarray | None = None,
) -> FrameFeatures:
    """Compress a feature tensor to exactly cfg.scenes_k merged frames.

    Uniformly samples cfg.input_frames frames, groups them into scenes by
    the configured selection, merges each scene with the configured
    strategy, and stacks the merged maps in representative order.
    Deterministic for identical (input, config, seed).
    """
    if cfg.input_frames > features.n_frames:
        raise ParameterError(
            f"config wants {cfg.input_frames} input frames but tensor has {features.n_frames}"
        )
    idx = uniform_sample_indices(features.n_frames, cfg.input_frames)
    data = features.data[np.asarray(idx)]
    ts = None
    if features.frame_timestamps is not None:
        ts = tuple(features.frame_timestamps[i] for i in idx)
    sub = FrameFeatures(data, ts)

    scene_set = _select(sub, cfg)
    proj = None
    if cfg.merging == "attnpool":
        proj = attn_projections(features.dim, cfg.seed)
    merged = [
        merge_scene(sub.data[np.asarray(scene.members)], cfg.merging,
                    weights=weights, proj=proj, seed=cfg.seed)
        for scene in scene_set.scenes
    ]
    out_ts = None
    if ts is not None:
        out_ts = tuple(ts[s.representative] for s in scene_set.scenes)
    return FrameFeatures(np.stack(merged).astype(np.float32), out_ts)


def reconstruction_proxy(original: FrameFeatures, compressed: FrameFeatures) -> float:
    """Mean squared distance from each original frame's representative
    feature to the nearest merged frame's representative feature."""
    a = representative_features(original)
    b = representative_features(compressed)
    d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=-1)
    return float(d2.min(axis=1).mean())


def bench(
    features: FrameFeatures,
    configs: list[CompressConfig],
    weights: np.ndarray | None = None,
) -> list[dict]:
    """Run each config and report token count, wall time, and the
    reconstruction proxy. Configs run sequentially for stable timing."""
    results = []
    for cfg in configs:
        start = time.perf_counter()
        out = compress(features, cfg, weights)
        wall_ms = (time.perf_counter() - start) * 1000.0
        results.append(
            {
                "config": cfg.to_dict(),
                "out_frames": out.n_frames,
                "wall_ms": wall_ms,
                "recon_mse": reconstruction_proxy(features, out),
            }
        )
    return results
