"""Strategies for collapsing a scene's frames into a single feature map.

A scene tensor has shape (s, n_patches, dim): the stacked feature maps of
one scene's s frames. Every strategy returns an (n_patches, dim) map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

STRATEGIES = ("tavg", "fusion", "attnpool", "bsm")


def _as_scene(scene: np.ndarray) -> np.ndarray:
    scene = np.asarray(scene, dtype=np.float64)
    if scene.ndim != 3:
        raise ParameterError(f"scene tensor must be rank 3, got rank {scene.ndim}")
    if min(scene.shape) < 1:
        raise ParameterError(f"scene dims must be >= 1, got {scene.shape}")
    if not np.all(np.isfinite(scene)):
        raise ParameterError("scene tensor contains non-finite values")
    return scene


def temporal_average(scene: np.ndarray) -> np.ndarray:
    """Unweighted mean over the scene's frames."""
    return _as_scene(scene).mean(axis=0)


def fusion_init(s: int, n_patches: int, dim: int) -> np.ndarray:
    """Uniform fusion weights 1/s, so fusion starts as temporal averaging."""
    if min(s, n_patches, dim) < 1:
        raise ParameterError(f"fusion dims must be >= 1, got {(s, n_patches, dim)}")
    return np.full((s, n_patches, dim), 1.0 / s, dtype=np.float64)


def fusion(scene: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Per-frame, per-patch, per-dim weighted sum over the scene's frames."""
    scene = _as_scene(scene)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != scene.shape:
        raise ParameterError(
            f"weights shape {weights.shape} does not match scene shape {scene.shape}"
        )
    return (scene * weights).sum(axis=0)


def fusion_gradient(scene: np.ndarray, weights: np.ndarray,
                    upstream: np.ndarray) -> np.ndarray:
    """Gradient of the fused output w.r.t. the weights, contracted with
    *upstream* (the loss gradient at the output): grad[i] = upstream * F_i."""
    scene = _as_scene(scene)
    weights = np.asarray(weights, dtype=np.float64)
    upstream = np.asarray(upstream, dtype=np.float64)
    if weights.shape != scene.shape:
        raise ParameterError(
            f"weights shape {weights.shape} does not match scene shape {scene.shape}"
        )
    if upstream.shape != scene.shape[1:]:
        raise ParameterError(
            f"upstream shape {upstream.shape} does not match output shape {scene.shape[1:]}"
        )
    return upstream[None, :, :] * scene


def fusion_loss(scenes: list[np.ndarray], targets: list[np.ndarray],
                weights: np.ndarray) -> float:
    """Mean over scenes of the half squared error of fusion vs target."""
    total = 0.0
    for scene, target in zip(scenes, targets):
        resid = fusion(scene, weights) - np.asarray(target, dtype=np.float64)
        total += 0.5 * float((resid * resid).sum())
    return total / len(scenes)


def fit_fusion_weights(
    scenes: list[np.ndarray],
    targets: list[np.ndarray],
    lr: float,
    steps: int,
    return_history: bool = False,
):
    """Fit fusion weights to (scene, target) pairs by gradient descent.

    Starts from the uniform init and returns the best iterate seen; with a
    stable learning rate (at most 1 over the largest per-coordinate
    sum of squared frame values) the loss is non-increasing and the best
    iterate is the last. Set *return_history* for the per-step losses.
    """
    if not scenes or len(scenes) != len(targets):
        raise ParameterError("scenes and targets must be nonempty lists of equal length")
    if lr <= 0:
        raise ParameterError(f"learning rate must be > 0, got {lr}")
    if steps < 0:
        raise ParameterError(f"steps must be >= 0, got {steps}")
    scenes = [_as_scene(sc) for sc in scenes]
    shape = scenes[0].shape
    targets = [np.asarray(t, dtype=np.float64) for t in targets]
    for sc, t in zip(scenes, targets):
        if sc.shape != shape:
            raise ParameterError(f"scene shape {sc.shape} differs from {shape}")
        if t.shape != shape[1:]:
            raise ParameterError(f"target shape {t.shape} does not match {shape[1:]}")

    w = fusion_init(*shape)
    best_w = w.copy()
    best_loss = fusion_loss(scenes, targets, w)
    history = [best_loss]
    n = len(scenes)
    for _ in range(steps):
        grad = np.zeros_like(w)
        for scene, target in zip(scenes, targets):
            grad += fusion_gradient(scene, w, fusion(scene, w) - target)
        w = w - (lr / n) * grad
        loss = fusion_loss(scenes, targets, w)
        history.append(loss)
        if loss < best_loss:
            best_loss = loss
            best_w = w.copy()
    if return_history:
        return best_w, history
    return best_w


@dataclass(frozen=True, eq=False)
class AttnProjections:
    """Query/key projection matrices for attention pooling."""

    wq: np.ndarray
    wk: np.ndarray
    seed: int


def attn_projections(dim: int, seed: int = 0) -> AttnProjections:
    """Xavier-uniform (dim, dim) projections, deterministic given the seed."""
    if dim < 1:
        raise ParameterError(f"dim must be >= 1, got {dim}")
    rng = np.random.default_rng(seed)
    bound = math.sqrt(6.0 / (dim + dim))
    wq = rng.uniform(-bound, bound, size=(dim, dim))
    wk = rng.uniform(-bound, bound, size=(dim, dim))
    return AttnProjections(wq=wq, wk=wk, seed=seed)


def attention_weights(scene: np.ndarray, proj: AttnProjections) -> np.ndarray:
    """Per-patch softmax weights over frames, shape (s, n_patches).

    The middle frame's projected features act as the query; each frame's
    projected features as keys. Scores are scaled per-patch dot products,
    normalized over the frame axis so each patch gets a convex combination.
    """
    scene = _as_scene(scene)
    s, n_patches, dim = scene.shape
    query = scene[s // 2] @ proj.wq
    keys = scene @ proj.wk
    logits = np.einsum("ld,mld->ml", query, keys) / math.sqrt(dim)
    logits -= logits.max(axis=0, keepdims=True)
    w = np.exp(logits)
    w /= w.sum(axis=0, keepdims=True)
    return w


def attention_pool(scene: np.ndarray, proj: AttnProjections) -> np.ndarray:
    """Merge a scene as the per-patch attention-weighted sum of its frames."""
    scene = _as_scene(scene)
    w = attention_weights(scene, proj)
    return np.einsum("ml,mld->ld", w, scene)


@dataclass(frozen=True, eq=False)
class SizedTokens:
    """Token matrix plus per-token merge multiplicities."""

    tokens: np.ndarray
    sizes: np.ndarray

    def __post_init__(self):
        tokens = np.asarray(self.tokens, dtype=np.float64)
        sizes = np.asarray(self.sizes, dtype=np.int64)
        if tokens.ndim != 2 or sizes.shape != (tokens.shape[0],):
            raise ParameterError(
                f"tokens {tokens.shape} and sizes {sizes.shape} are inconsistent"
            )
        if np.any(sizes < 1):
            raise ParameterError("token sizes must be positive")
        object.__setattr__(self, "tokens", tokens)
        object.__setattr__(self, "sizes", sizes)


def bsm_merge(tokens: np.ndarray, target: int) -> SizedTokens:
    """Reduce a token matrix to *target* rows by iterative pair merging.

    Each round splits the current tokens alternately into partitions A and
    B, matches every A token to its most similar B token (cosine on
    normalized tokens), and merges the highest-scoring matches as
    size-weighted averages, summing the sizes. At most half the current
    tokens merge per round. The result keeps exactly *target* tokens whose
    sizes sum to the original count, ordered by the earliest original index
    each token absorbed.
    """
    tokens = np.asarray(tokens, dtype=np.float64)
    if tokens.ndim != 2 or min(tokens.shape) < 1:
        raise ParameterError(f"tokens must be a nonempty matrix, got shape {tokens.shape}")
    if not np.all(np.isfinite(tokens)):
        raise ParameterError("tokens contain non-finite values")
    t0 = tokens.shape[0]
    if not 1 <= target <= t0:
        raise ParameterError(f"target token count {target} outside [1, {t0}]")

    tok = tokens.copy()
    sizes = np.ones(t0, dtype=np.int64)
    first = np.arange(t0)  # earliest original index absorbed by each token
    remaining = t0 - target
    while remaining > 0:
        t_cur = tok.shape[0]
        step = min(remaining, max(1, t_cur // 2))
        a_idx = np.arange(0, t_cur, 2)
        b_idx = np.arange(1, t_cur, 2)
        unit = tok / np.maximum(np.linalg.norm(tok, axis=1, keepdims=True), 1e-12)
        scores = unit[a_idx] @ unit[b_idx].T
        best_b = scores.argmax(axis=1)  # ties break to the lowest B position
        best_score = scores[np.arange(a_idx.size), best_b]
        order = np.argsort(-best_score, kind="stable")
        merged_a = order[:step]
        kept_a = np.sort(order[step:])

        weighted = tok[b_idx] * sizes[b_idx, None]
        new_sizes = sizes[b_idx].copy()
        new_first = first[b_idx].copy()
        src = a_idx[merged_a]
        dst = best_b[merged_a]
        np.add.at(weighted, dst, tok[src] * sizes[src, None])
        np.add.at(new_sizes, dst, sizes[src])
        np.minimum.at(new_first, dst, first[src])
        new_tok = tok[b_idx].copy()
        touched = np.unique(dst)
        new_tok[touched] = weighted[touched] / new_sizes[touched, None]

        keep = a_idx[kept_a]
        tok = np.concatenate([tok[keep], new_tok])
        sizes = np.concatenate([sizes[keep], new_sizes])
        first = np.concatenate([first[keep], new_first])
        remaining -= step

    order = np.argsort(first, kind="stable")
    return SizedTokens(tokens=tok[order], sizes=sizes[order])


def merge_scene(
    scene: np.ndarray,
    strategy: str,
    weights: np.ndarray | None = None,
    proj: AttnProjections | None = None,
    seed: int = 0,
) -> np.ndarray:
    """Collapse a scene to one (n_patches, dim) map with the named strategy.

    ``fusion`` uses *weights* or the uniform init; ``attnpool`` uses *proj*
    or seed-derived projections; ``bsm`` flattens the scene patch-major so
    each patch's temporal copies land in alternating partitions, merges
    s*n_patches tokens down to n_patches, and reshapes.
    """
    scene = _as_scene(scene)
    s, n_patches, dim = scene.shape
    if strategy == "tavg":
        return temporal_average(scene)
    if strategy == "fusion":
        if weights is None:
            weights = fusion_init(s, n_patches, dim)
        return fusion(scene, weights)
    if strategy == "attnpool":
        if proj is None:
            proj = attn_projections(dim, seed)
        return attention_pool(scene, proj)
    if strategy == "bsm":
        tokens = scene.transpose(1, 0, 2).reshape(s * n_patches, dim)
        return bsm_merge(tokens, n_patches).tokens.reshape(n_patches, dim)
    raise ParameterError(f"unknown merge strategy {strategy!r}, expected one of {STRATEGIES}")
