"""Scene-selection tests: representative features, clustering, supplements,
and the bipartite-matching alternative."""

import numpy as np
import pytest

from framefuse import (
    FrameFeatures,
    ParameterError,
    SceneSet,
    SyntheticSpec,
    cosine_similarity,
    generate_synthetic,
    kmeans,
    planted_block_labels,
    representative_features,
    representative_indices,
    select_scenes_bsm,
    select_scenes_kmeans,
    select_supplements,
)
from framefuse.select import Scene


def scene_sizes(scene_set):
    return [len(s.members) for s in scene_set.scenes]


def test_representative_features_small():
    f = FrameFeatures(np.array([[[1.0, 3.0], [3.0, 5.0]]]))
    assert np.allclose(representative_features(f), [[2.0, 4.0]])


def test_representative_features_identical_patches():
    p = np.array([2.0, -1.0, 0.5], dtype=np.float32)
    f = FrameFeatures(np.stack([np.tile(p, (5, 1))]))
    assert np.allclose(representative_features(f)[0], p)


def test_representative_features_vs_float64_oracle():
    rng = np.random.default_rng(7)
    data = rng.standard_normal((4, 8, 16)).astype(np.float32)
    f = FrameFeatures(data)
    got = representative_features(f)
    # independent mean with explicit 64-bit accumulation
    want = np.zeros((4, 16))
    for i in range(4):
        acc = np.zeros(16, dtype=np.float64)
        for j in range(8):
            acc += data[i, j].astype(np.float64)
        want[i] = acc / 8
    assert np.max(np.abs(got - want)) <= 1e-5


def test_kmeans_single_cluster_is_global_mean():
    rng = np.random.default_rng(0)
    reps = rng.standard_normal((10, 4))
    c = kmeans(reps, 1, seed=1)
    assert np.allclose(c.centers[0], reps.mean(axis=0))
    assert set(c.assignments) == {0}


def test_kmeans_two_planted_clouds():
    rng = np.random.default_rng(3)
    base = np.zeros(6), np.full(6, 5.0)
    pts = np.concatenate([
        base[0] + 0.05 * rng.standard_normal((20, 6)),
        base[1] + 0.05 * rng.standard_normal((20, 6)),
    ])
    c = kmeans(pts, 2, seed=4)
    cloud_means = pts[:20].mean(axis=0), pts[20:].mean(axis=0)
    # match centers to clouds by proximity, then check the planted labels
    order = np.argsort([np.linalg.norm(ctr) for ctr in c.centers])
    assert np.max(np.abs(c.centers[order[0]] - cloud_means[0])) <= 1e-3
    assert np.max(np.abs(c.centers[order[1]] - cloud_means[1])) <= 1e-3
    assert len(set(c.assignments[:20])) == 1
    assert len(set(c.assignments[20:])) == 1
    assert c.assignments[0] != c.assignments[-1]


def test_kmeans_m_equals_n_distinct_rows():
    rng = np.random.default_rng(5)
    reps = rng.standard_normal((7, 3))
    c = kmeans(reps, 7, seed=6)
    assert c.inertia == 0.0
    assert sorted(c.assignments) == list(range(7))


def test_kmeans_parameter_errors():
    reps = np.zeros((3, 2))
    with pytest.raises(ParameterError):
        kmeans(reps, 4)
    with pytest.raises(ParameterError):
        kmeans(reps, 0)


def test_kmeans_inertia_matches_recomputed_objective():
    rng = np.random.default_rng(8)
    reps = rng.standard_normal((40, 5))
    c = kmeans(reps, 4, seed=9)
    recomputed = sum(
        float(((reps[i] - c.centers[c.assignments[i]]) ** 2).sum()) for i in range(40)
    )
    assert abs(c.inertia - recomputed) <= 1e-5 * max(1.0, recomputed)


def test_kmeans_inertia_non_increasing_over_iterations():
    rng = np.random.default_rng(10)
    reps = rng.standard_normal((60, 4))
    inertias = [kmeans(reps, 5, max_iters=i, seed=11).inertia for i in range(1, 12)]
    assert all(b <= a + 1e-9 for a, b in zip(inertias, inertias[1:]))


def test_kmeans_dim_permutation_equivariance():
    rng = np.random.default_rng(12)
    reps = rng.standard_normal((30, 6))
    perm = rng.permutation(6)
    a = kmeans(reps, 3, seed=13)
    b = kmeans(reps[:, perm], 3, seed=13)
    assert np.array_equal(a.assignments, b.assignments)
    assert np.allclose(a.centers[:, perm], b.centers, atol=1e-10)


def test_kmeans_uniform_scaling_invariance():
    rng = np.random.default_rng(14)
    reps = rng.standard_normal((25, 4))
    a = kmeans(reps, 3, seed=15)
    b = kmeans(reps * 4.0, 3, seed=15)  # power-of-two scale keeps floats exact
    assert np.array_equal(a.assignments, b.assignments)
    assert np.allclose(a.centers * 4.0, b.centers)


def test_representative_indices_zero_noise_blocks():
    spec = SyntheticSpec(n_frames=10, n_patches=3, dim=6, n_scenes=2, noise_sigma=0.0, seed=2)
    f = generate_synthetic(spec)
    reps = representative_features(f)
    labels = planted_block_labels(spec)
    idx = representative_indices(reps, kmeans(reps, 2, seed=3))
    assert len(idx) == 2
    assert {labels[i] for i in idx} == {0, 1}


def test_representative_indices_m1_exhaustive_scan():
    rng = np.random.default_rng(16)
    reps = rng.standard_normal((15, 5))
    c = kmeans(reps, 1, seed=17)
    idx = representative_indices(reps, c)
    dists = ((reps - c.centers[0]) ** 2).sum(axis=1)
    assert idx == [int(dists.argmin())]


def test_representative_indices_tie_breaks_to_lowest():
    reps = np.ones((4, 3))
    c = kmeans(reps, 1, seed=18)
    assert representative_indices(reps, c) == [0]


def test_cosine_similarity_cases():
    v = np.array([1.0, 2.0, -3.0])
    assert cosine_similarity(v, v) == pytest.approx(1.0)
    assert cosine_similarity(v, -v) == pytest.approx(-1.0)
    assert cosine_similarity([1.0, 0.0], [0.0, 1.0]) == pytest.approx(0.0)
    with pytest.raises(ParameterError):
        cosine_similarity([0.0, 0.0], [1.0, 0.0])


def test_supplements_r0():
    rng = np.random.default_rng(19)
    reps = rng.standard_normal((12, 4))
    ss = select_supplements(reps, [2, 7, 11], 0)
    assert scene_sizes(ss) == [1, 1, 1]
    assert [s.representative for s in ss.scenes] == [2, 7, 11]


def test_supplements_pick_identical_history_frame():
    rng = np.random.default_rng(20)
    reps = rng.standard_normal((8, 5))
    reps[3] = reps[5]  # frame 3 equals the representative at 5
    ss = select_supplements(reps, [5], 1)
    assert ss.scenes[0].members == (3, 5)


def test_supplements_full_scenes_with_ample_history():
    rng = np.random.default_rng(21)
    reps = rng.standard_normal((40, 6))
    ss = select_supplements(reps, [9, 19, 29, 39], 3)
    assert scene_sizes(ss) == [4, 4, 4, 4]
    assert ss.warnings == ()


def test_supplements_dissimilar_mode_picks_bottom():
    reps = np.array([
        [1.0, 0.0],
        [0.9, 0.1],
        [0.0, 1.0],
        [1.0, 0.05],
    ])
    top = select_supplements(reps, [3], 1, mode="similar")
    bottom = select_supplements(reps, [3], 1, mode="dissimilar")
    assert top.scenes[0].members == (0, 3)  # frame 0 is most similar to frame 3
    assert bottom.scenes[0].members == (2, 3)  # frame 2 is least similar


def test_supplements_padding_warns():
    rng = np.random.default_rng(22)
    reps = rng.standard_normal((10, 4))
    # representative at 0 has no history; padding must reach forward
    ss = select_supplements(reps, [0], 3)
    assert scene_sizes(ss) == [4]
    assert len(ss.warnings) == 1


def test_select_scenes_kmeans_planted_blocks():
    spec = SyntheticSpec(n_frames=30, n_patches=4, dim=8, n_scenes=3, noise_sigma=0.1, seed=23)
    f = generate_synthetic(spec)
    labels = planted_block_labels(spec)
    ss = select_scenes_kmeans(f, 3, 1, seed=24)
    for scene in ss.scenes:
        assert len({labels[m] for m in scene.members}) == 1


def test_select_scenes_kmeans_infeasible():
    f = FrameFeatures(np.random.default_rng(25).standard_normal((6, 2, 3)))
    with pytest.raises(ParameterError):
        select_scenes_kmeans(f, 3, 2)  # 3*3 > 6


def test_select_scenes_kmeans_k1_r_full_padded():
    # boundary case: k=1, r=N-1 is feasible but history is short; the scene
    # pads to all frames and reports a warning
    f = FrameFeatures(np.random.default_rng(26).standard_normal((6, 2, 3)))
    ss = select_scenes_kmeans(f, 1, 5, seed=27)
    assert scene_sizes(ss) == [6]
    assert ss.scenes[0].members == (0, 1, 2, 3, 4, 5)
    assert ss.warnings


def test_select_scenes_kmeans_96_8_3_counts():
    f = generate_synthetic(SyntheticSpec(96, 8, 16, 4, 0.1, seed=28))
    ss = select_scenes_kmeans(f, 8, 3, seed=29)
    assert ss.k == 8
    assert scene_sizes(ss) == [4] * 8
    assert len(ss.retained_indices()) == 32


def test_bsm_identical_segment():
    f = FrameFeatures(np.ones((4, 2, 3)))
    ss = select_scenes_bsm(f, 1, 1)
    # all similarities equal; dedup keeps the top-ranked edge's endpoints
    assert ss.scenes[0].members == (0, 1)


def test_bsm_xxyy_hand_enumerated():
    # frames [x, x, y, y]: partition A holds frames 0,2 and B holds 1,3.
    # edges ranked by cosine: (0,1)=1.0, (2,3)=1.0, rest < 1; the top edge
    # gives the identical pair {0, 1}
    x = np.array([1.0, 0.0, 0.0])
    y = np.array([0.6, 0.8, 0.0])
    data = np.stack([np.tile(v, (2, 1)) for v in (x, x, y, y)])
    ss = select_scenes_bsm(FrameFeatures(data), 1, 1)
    assert ss.scenes[0].members == (0, 1)


def test_bsm_96_8_3_counts():
    f = generate_synthetic(SyntheticSpec(96, 8, 16, 4, 0.1, seed=30))
    ss = select_scenes_bsm(f, 8, 3)
    assert ss.k == 8
    assert len(ss.retained_indices()) == 32
    # members stay inside their contiguous segment
    for i, scene in enumerate(ss.scenes):
        assert all(12 * i <= m < 12 * (i + 1) for m in scene.members)


def test_both_methods_retain_same_count():
    f = generate_synthetic(SyntheticSpec(60, 4, 8, 5, 0.1, seed=31))
    a = select_scenes_kmeans(f, 6, 4, seed=32)
    b = select_scenes_bsm(f, 6, 4)
    assert len(a.retained_indices()) == len(b.retained_indices()) == 30


def test_scene_set_validation():
    with pytest.raises(ParameterError):
        Scene(representative=5, members=(1, 2))  # rep not a member
    with pytest.raises(ParameterError):
        Scene(representative=2, members=(2, 1))  # not increasing
    ok = Scene(representative=1, members=(1, 2))
    with pytest.raises(ParameterError):
        SceneSet(scenes=(ok, Scene(representative=2, members=(2, 3))), r=1)
    with pytest.raises(ParameterError):  # duplicated frame across scenes
        SceneSet(
            scenes=(ok, Scene(representative=3, members=(2, 3))), r=1
        )


def test_scene_set_json_schema_roundtrip():
    f = generate_synthetic(SyntheticSpec(20, 3, 6, 2, 0.1, seed=33))
    ss = select_scenes_kmeans(f, 2, 2, seed=34)
    doc = ss.to_dict()
    assert set(doc) == {"k", "r", "scenes", "warnings"}
    assert doc["k"] == 2 and doc["r"] == 2
    back = SceneSet.from_dict(doc)
    assert back.to_dict() == doc


def test_selection_scaling_invariance():
    f = generate_synthetic(SyntheticSpec(24, 3, 6, 3, 0.1, seed=35))
    scaled = FrameFeatures(f.data * 4.0)
    a = select_scenes_kmeans(f, 3, 2, seed=36)
    b = select_scenes_kmeans(scaled, 3, 2, seed=36)
    assert a.to_dict() == b.to_dict()
    assert select_scenes_bsm(f, 3, 2).to_dict() == select_scenes_bsm(scaled, 3, 2).to_dict()
