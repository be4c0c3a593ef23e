"""Scene selection over representative frame features.

Two routes to k scenes of r+1 frames each: Lloyd clustering with
similarity-ranked historical supplements, and a bipartite-matching
alternative over evenly split segments. Both retain exactly k*(r+1)
frames on feasible inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .features import FrameFeatures

SUPPLEMENT_MODES = ("similar", "dissimilar")


@dataclass(frozen=True)
class Scene:
    """One scene: a representative frame plus its supplement frames."""

    representative: int
    members: tuple[int, ...]

    def __post_init__(self):
        members = tuple(int(m) for m in self.members)
        if any(b <= a for a, b in zip(members, members[1:])):
            raise ParameterError(f"scene members must be strictly increasing: {members}")
        if self.representative not in members:
            raise ParameterError(
                f"representative {self.representative} not among members {members}"
            )
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "representative", int(self.representative))


@dataclass(frozen=True)
class SceneSet:
    """k disjoint scenes ordered chronologically by representative frame."""

    scenes: tuple[Scene, ...]
    r: int
    warnings: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        scenes = tuple(self.scenes)
        reps = [s.representative for s in scenes]
        if any(b <= a for a, b in zip(reps, reps[1:])):
            raise ParameterError("scenes must be ordered by representative index")
        seen: set[int] = set()
        for scene in scenes:
            if len(scene.members) != self.r + 1:
                raise ParameterError(
                    f"scene at {scene.representative} has {len(scene.members)} members, "
                    f"expected {self.r + 1}"
                )
            overlap = seen.intersection(scene.members)
            if overlap:
                raise ParameterError(f"frames {sorted(overlap)} appear in two scenes")
            seen.update(scene.members)
        object.__setattr__(self, "scenes", scenes)
        object.__setattr__(self, "warnings", tuple(self.warnings))

    @property
    def k(self) -> int:
        return len(self.scenes)

    def retained_indices(self) -> list[int]:
        return sorted(m for s in self.scenes for m in s.members)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "r": self.r,
            "scenes": [
                {"representative": s.representative, "members": list(s.members)}
                for s in self.scenes
            ],
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SceneSet":
        scenes = tuple(
            Scene(s["representative"], tuple(s["members"])) for s in doc["scenes"]
        )
        return cls(scenes=scenes, r=int(doc["r"]), warnings=tuple(doc.get("warnings", ())))


@dataclass(frozen=True, eq=False)
class Clustering:
    """Result of Lloyd iterations: centers, assignments, and the objective."""

    centers: np.ndarray
    assignments: np.ndarray
    inertia: float
    iterations_run: int


def representative_features(features: FrameFeatures) -> np.ndarray:
    """Mean of each frame's patch tokens, shape (n_frames, dim), float64."""
    return features.data.mean(axis=1, dtype=np.float64)


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of the angle between two vectors; requires nonzero norms."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ParameterError("cosine similarity undefined for zero-norm input")
    return float(a @ b) / (na * nb)


def _sqdist(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    # (n, m) squared Euclidean distances; direct form avoids negative rounding
    return ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=-1)


def _init_center_indices(reps: np.ndarray, m: int, rng: np.random.Generator) -> list[int]:
    # distance-squared weighted seeding over data rows; always m distinct rows
    n = reps.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = ((reps - reps[chosen[0]]) ** 2).sum(axis=1)
    while len(chosen) < m:
        total = float(d2.sum())
        if total <= 0.0:
            # remaining rows duplicate chosen centers; take unused rows in order
            used = set(chosen)
            chosen.extend(i for i in range(n) if i not in used)
            return chosen[:m]
        nxt = int(rng.choice(n, p=d2 / total))
        chosen.append(nxt)
        d2 = np.minimum(d2, ((reps - reps[nxt]) ** 2).sum(axis=1))
    return chosen


def kmeans(
    reps: np.ndarray,
    m: int,
    max_iters: int = 100,
    tol: float = 1e-6,
    seed: int = 0,
) -> Clustering:
    """Lloyd clustering of representative features into *m* clusters.

    Deterministic given *seed*. Iterates assignment and mean-update steps
    until the largest center displacement drops below *tol* or *max_iters*
    is reached; a cluster that empties is re-seeded at the point farthest
    from its assigned center. Returned assignments are consistent with the
    returned centers (ties break to the lowest center index).
    """
    reps = np.asarray(reps, dtype=np.float64)
    if reps.ndim != 2:
        raise ParameterError(f"representative features must be rank 2, got {reps.ndim}")
    n = reps.shape[0]
    if not 1 <= m <= n:
        raise ParameterError(f"cluster count {m} outside [1, {n}]")
    if max_iters < 1:
        raise ParameterError(f"max_iters must be >= 1, got {max_iters}")
    if tol < 0:
        raise ParameterError(f"tol must be >= 0, got {tol}")

    rng = np.random.default_rng(seed)
    centers = reps[_init_center_indices(reps, m, rng)].copy()
    iterations = 0
    for _ in range(max_iters):
        d2 = _sqdist(reps, centers)
        assign = d2.argmin(axis=1)
        new_centers = centers.copy()
        counts = np.bincount(assign, minlength=m)
        for j in range(m):
            if counts[j]:
                new_centers[j] = reps[assign == j].mean(axis=0)
        empties = np.flatnonzero(counts == 0)
        if empties.size:
            point_d2 = d2[np.arange(n), assign].copy()
            for j in empties:
                far = int(point_d2.argmax())
                new_centers[j] = reps[far]
                point_d2[far] = -1.0
        iterations += 1
        shift = np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max()
        centers = new_centers
        if shift < tol:
            break

    d2 = _sqdist(reps, centers)
    assign = d2.argmin(axis=1)
    inertia = float(d2[np.arange(n), assign].sum())
    return Clustering(centers=centers, assignments=assign, inertia=inertia,
                      iterations_run=iterations)


def representative_indices(reps: np.ndarray, clustering: Clustering) -> list[int]:
    """Frame nearest each cluster center, deduplicated and sorted ascending."""
    reps = np.asarray(reps, dtype=np.float64)
    d2 = _sqdist(reps, clustering.centers)
    nearest = d2.argmin(axis=0)  # ties break to the lowest frame index
    return sorted({int(i) for i in nearest})


def _distinct_representatives(reps: np.ndarray, centers: np.ndarray) -> list[int]:
    # nearest-frame mapping with collisions resolved to the next-nearest frame
    d2 = _sqdist(reps, centers)
    used: set[int] = set()
    out = []
    for j in range(centers.shape[0]):
        for i in np.argsort(d2[:, j], kind="stable"):
            if int(i) not in used:
                used.add(int(i))
                out.append(int(i))
                break
    return sorted(out)


def _similarity_ranked(reps: np.ndarray, anchor: int, candidates: list[int],
                       mode: str) -> list[int]:
    """Candidates ranked by cosine similarity to the anchor frame.

    ``similar`` ranks best-first, ``dissimilar`` worst-first; ties break to
    the earlier frame index.
    """
    if not candidates:
        return []
    anchor_vec = reps[anchor]
    na = np.linalg.norm(anchor_vec)
    cand = np.asarray(candidates)
    vecs = reps[cand]
    norms = np.linalg.norm(vecs, axis=1)
    if na == 0.0 or np.any(norms == 0.0):
        raise ParameterError("cosine similarity undefined for zero-norm input")
    sims = (vecs @ anchor_vec) / (norms * na)
    key = -sims if mode == "similar" else sims
    order = np.lexsort((cand, key))
    return [int(cand[t]) for t in order]


def select_supplements(
    reps: np.ndarray,
    rep_indices: list[int],
    r: int,
    mode: str = "similar",
) -> SceneSet:
    """Grow each representative into a scene of r+1 frames.

    Candidates come from the history window between consecutive
    representatives, ranked by cosine similarity to the scene's
    representative. When a window runs short the scene is padded, first
    from the span up to the next representative, then from any remaining
    unused frames; padded scenes are reported in the warnings.
    """
    reps = np.asarray(reps, dtype=np.float64)
    n = reps.shape[0]
    if r < 0:
        raise ParameterError(f"supplement count r must be >= 0, got {r}")
    if mode not in SUPPLEMENT_MODES:
        raise ParameterError(f"unknown supplement mode {mode!r}, expected {SUPPLEMENT_MODES}")
    rep_list = [int(i) for i in rep_indices]
    if rep_list != sorted(set(rep_list)):
        raise ParameterError("rep_indices must be sorted and unique")
    if rep_list and not (0 <= rep_list[0] and rep_list[-1] < n):
        raise ParameterError(f"rep_indices out of range [0, {n})")
    if len(rep_list) * (r + 1) > n:
        raise ParameterError(
            f"cannot form {len(rep_list)} disjoint scenes of {r + 1} frames from {n} frames"
        )

    taken = set(rep_list)
    warnings: list[str] = []
    scenes = []
    for i, rep in enumerate(rep_list):
        lo = rep_list[i - 1] if i > 0 else -1
        hi = rep_list[i + 1] if i + 1 < len(rep_list) else n
        history = [j for j in range(lo + 1, rep) if j not in taken]
        chosen = _similarity_ranked(reps, rep, history, mode)[:r]
        if len(chosen) < r:
            forward = [j for j in range(rep + 1, hi) if j not in taken]
            chosen += _similarity_ranked(reps, rep, forward, mode)[: r - len(chosen)]
            warnings.append(
                f"scene at frame {rep}: history window has only {len(history)} "
                f"candidates for r={r}; padded from nearby frames"
            )
        if len(chosen) < r:
            pool = [j for j in range(n) if j not in taken and j not in chosen]
            chosen += _similarity_ranked(reps, rep, pool, mode)[: r - len(chosen)]
        taken.update(chosen)
        scenes.append(Scene(representative=rep, members=tuple(sorted(chosen + [rep]))))
    return SceneSet(scenes=tuple(scenes), r=r, warnings=tuple(warnings))


def select_scenes_kmeans(
    features: FrameFeatures,
    k: int,
    r: int,
    max_iters: int = 100,
    tol: float = 1e-6,
    seed: int = 0,
    mode: str = "similar",
) -> SceneSet:
    """Cluster representative features and grow each center into a scene."""
    n = features.n_frames
    if k < 1:
        raise ParameterError(f"scene count k must be >= 1, got {k}")
    if r < 0:
        raise ParameterError(f"supplement count r must be >= 0, got {r}")
    if k * (r + 1) > n:
        raise ParameterError(
            f"cannot form {k} disjoint scenes of {r + 1} frames from {n} frames"
        )
    reps = representative_features(features)
    clustering = kmeans(reps, k, max_iters=max_iters, tol=tol, seed=seed)
    rep_idx = representative_indices(reps, clustering)
    if len(rep_idx) < k:
        # two centers collapsed onto one frame; remap to distinct frames
        rep_idx = _distinct_representatives(reps, clustering.centers)
    return select_supplements(reps, rep_idx, r, mode=mode)


def _segment_members(reps: np.ndarray, segment: np.ndarray, want: int) -> list[int]:
    """Pick *want* frames of one segment by ranked cross-partition similarity."""
    frames_a = segment[0::2]
    frames_b = segment[1::2]
    picked: list[int] = []
    if frames_b.size:
        vecs = reps[segment]
        unit = vecs / np.maximum(np.linalg.norm(vecs, axis=1, keepdims=True), 1e-12)
        unit_a = unit[0::2]
        unit_b = unit[1::2]
        scores = unit_a @ unit_b.T
        ai, bi = np.unravel_index(np.arange(scores.size), scores.shape)
        order = np.lexsort((bi, ai, -scores.ravel()))
        seen: set[int] = set()
        for t in order:
            for frame in (int(frames_a[ai[t]]), int(frames_b[bi[t]])):
                if frame not in seen:
                    seen.add(frame)
                    picked.append(frame)
            if len(picked) >= want:
                break
    if len(picked) > want:
        picked = picked[:want]
    if len(picked) < want:
        have = set(picked)
        for frame in segment:
            if int(frame) not in have:
                picked.append(int(frame))
                if len(picked) == want:
                    break
    return sorted(picked)


def select_scenes_bsm(features: FrameFeatures, k: int, r: int) -> SceneSet:
    """Alternative selection: split frames into k even segments and keep,
    per segment, the r+1 frames touched by the most similar cross-partition
    pairs (segment frames alternate between the two partitions)."""
    n = features.n_frames
    if k < 1:
        raise ParameterError(f"scene count k must be >= 1, got {k}")
    if r < 0:
        raise ParameterError(f"supplement count r must be >= 0, got {r}")
    if k * (r + 1) > n:
        raise ParameterError(
            f"cannot form {k} disjoint scenes of {r + 1} frames from {n} frames"
        )
    reps = representative_features(features)
    scenes = []
    for segment in np.array_split(np.arange(n), k):
        members = _segment_members(reps, segment, r + 1)
        scenes.append(
            Scene(representative=members[len(members) // 2], members=tuple(members))
        )
    return SceneSet(scenes=tuple(scenes), r=r, warnings=())
