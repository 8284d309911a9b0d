import json

import numpy as np
import pytest
from scipy.spatial.distance import cdist
from sklearn.metrics import adjusted_rand_score

from stancelab.core.cluster import (
    NOISE,
    ClusterParams,
    cluster,
    flat_assignment,
    load_assignment,
    load_cluster_labels,
    mutual_reachability,
    save_assignment,
    subclusters,
)
from stancelab.core.errors import ClusterLookupError, FormatError, PreconditionError
from stancelab.core.project import Layout2D


def gaussian_blobs(centers, n_per_blob, scale=1.0, seed=0):
    rng = np.random.default_rng(seed)
    points = np.vstack([rng.normal(loc=c, scale=scale, size=(n_per_blob, 2)) for c in centers])
    truth = np.repeat(np.arange(len(centers)), n_per_blob)
    return points, truth


def test_mutual_reachability_by_hand():
    core, reach = mutual_reachability(np.array([[0.0, 0.0], [1.0, 0.0], [10.0, 0.0]]), min_samples=1)
    assert core.tolist() == [1.0, 1.0, 9.0]
    assert reach[0, 1] == 1.0
    assert reach[0, 2] == 10.0
    assert reach[1, 2] == 9.0


def test_mutual_reachability_identical_points():
    core, reach = mutual_reachability(np.zeros((4, 2)), min_samples=2)
    assert np.all(core == 0.0)
    assert np.all(reach == 0.0)


def test_mutual_reachability_matches_direct_formula():
    rng = np.random.default_rng(3)
    points = rng.uniform(size=(30, 2))
    core, reach = mutual_reachability(points, min_samples=4)
    d = cdist(points, points)
    for i in range(30):
        assert core[i] == pytest.approx(sorted(d[i])[4])
        for j in range(30):
            expected = 0.0 if i == j else max(core[i], core[j], d[i, j])
            assert reach[i, j] == pytest.approx(expected)


def test_mutual_reachability_needs_points():
    with pytest.raises(PreconditionError):
        mutual_reachability(np.zeros((2, 2)), min_samples=2)


def test_two_blobs():
    points, truth = gaussian_blobs([(0.0, 0.0), (10.0, 0.0)], 100)
    result = cluster(points, ClusterParams(min_cluster_size=10))
    assert result.n_clusters == 2
    assert all(size >= 95 for size in result.sizes)
    assert adjusted_rand_score(truth, result.labels) >= 0.99


def test_identical_points_form_one_cluster():
    result = cluster(np.zeros((12, 2)), ClusterParams(min_cluster_size=12))
    assert result.n_clusters == 1
    assert result.noise_fraction == 0.0
    assert result.labels.tolist() == [0] * 12


def test_too_few_points_are_noise():
    points = np.random.default_rng(0).uniform(size=(20, 2))
    result = cluster(points, ClusterParams(min_cluster_size=25))
    assert result.n_clusters == 0
    assert np.all(result.labels == NOISE)


def test_empty_input_rejected():
    with pytest.raises(PreconditionError):
        cluster(np.zeros((0, 2)))


def test_labels_partition_and_respect_min_size():
    points, _ = gaussian_blobs([(0, 0), (8, 0), (0, 8)], 60, seed=2)
    result = cluster(points, ClusterParams(min_cluster_size=15))
    assert len(result.labels) == len(points)
    assert set(result.labels.tolist()) <= set(range(result.n_clusters)) | {NOISE}
    assert all(size >= 15 for size in result.sizes)


@pytest.mark.slow
@pytest.mark.parametrize("trial", range(200))
def test_cluster_sizes_respect_min_size(trial):
    rng = np.random.default_rng(trial)
    centers = rng.uniform(-20, 20, size=(rng.integers(1, 5), 2))
    points, _ = gaussian_blobs(centers, int(rng.integers(15, 60)), scale=float(rng.uniform(0.5, 3.0)), seed=trial)
    min_size = int(rng.integers(5, 30))
    result = cluster(points, ClusterParams(min_cluster_size=min_size))
    assert len(result.labels) == len(points)
    assert set(result.labels.tolist()) <= set(range(result.n_clusters)) | {NOISE}
    assert len(result.sizes) == result.n_clusters
    assert all(size >= min_size for size in result.sizes)


def test_scaling_leaves_labels_unchanged():
    points, _ = gaussian_blobs([(0, 0), (8, 0), (0, 8)], 60, seed=4)
    params = ClusterParams(min_cluster_size=15)
    np.testing.assert_array_equal(cluster(points, params).labels, cluster(points * 3.0, params).labels)


def test_permuted_order_same_partition():
    points, _ = gaussian_blobs([(0, 0), (8, 0), (0, 8)], 60, seed=5)
    params = ClusterParams(min_cluster_size=15)
    perm = np.random.default_rng(1).permutation(len(points))
    original = cluster(points, params).labels
    permuted = cluster(points[perm], params).labels
    assert adjusted_rand_score(original[perm], permuted) == pytest.approx(1.0)


def test_layout_user_ids_carried():
    points, _ = gaussian_blobs([(0, 0), (10, 0)], 30)
    layout = Layout2D(tuple(f"u{i}" for i in range(60)), points)
    result = cluster(layout, ClusterParams(min_cluster_size=10))
    by_user = result.by_user()
    assert list(by_user) == list(layout.user_ids)
    assert set(result.clustered_users().values()) == {0, 1}


def nested_blobs():
    centers = [(0.0, 0.0), (4.0, 0.0), (60.0, 0.0), (64.0, 0.0)]
    return gaussian_blobs(centers, 50, scale=0.3, seed=6)


def test_root_subclusters_are_the_two_groups():
    points, truth = nested_blobs()
    result = cluster(points, ClusterParams(min_cluster_size=20))
    top = subclusters(result, result.root)
    assert len(top) == 2
    groups = [set(truth[list(s.members)] // 2) for s in top]
    assert sorted(map(sorted, groups)) == [[0], [1]]


def test_nested_children_cover_parent():
    points, truth = nested_blobs()
    result = cluster(points, ClusterParams(min_cluster_size=20))
    for parent in subclusters(result, result.root):
        children = subclusters(result, parent.node)
        assert len(children) == 2
        union = set().union(*(set(c.members) for c in children))
        assert union <= set(parent.members)
        assert len(union) >= 0.9 * len(parent.members)
        assert {frozenset(truth[list(c.members)]) for c in children} == {
            frozenset({truth[parent.members[0]] // 2 * 2}),
            frozenset({truth[parent.members[0]] // 2 * 2 + 1}),
        }
        for child in children:
            assert subclusters(result, child.node) == []


def test_members_of_root_and_subclusters():
    points, _ = nested_blobs()
    result = cluster(points, ClusterParams(min_cluster_size=20))
    assert result.members(result.root) == list(range(len(points)))
    for sub in subclusters(result, result.root):
        assert result.members(sub.node) == sorted(sub.members)
    with pytest.raises(ClusterLookupError):
        result.members(-5)


def test_unknown_node_lookup_fails():
    points, _ = nested_blobs()
    result = cluster(points, ClusterParams(min_cluster_size=20))
    with pytest.raises(ClusterLookupError):
        subclusters(result, 0)
    with pytest.raises(ClusterLookupError):
        result.node_of(99)


def test_save_and_load(tmp_path):
    points, _ = gaussian_blobs([(0, 0), (10, 0)], 30)
    layout = Layout2D(tuple(f"u{i:02d}" for i in range(60)), points)
    result = cluster(layout, ClusterParams(min_cluster_size=10))
    path = save_assignment(result, tmp_path / "clusters.csv", tmp_path / "tree.json")
    assert load_cluster_labels(path) == result.by_user()
    tree = json.loads((tmp_path / "tree.json").read_text(encoding="utf-8"))
    assert tree["root"] == 60
    assert tree["selected"] == list(result.cluster_nodes)
    assert load_assignment(path).sizes == result.sizes


def test_flat_assignment_validates_ids():
    result = flat_assignment({"a": 0, "b": 1, "c": -1})
    assert result.n_clusters == 2
    assert result.noise_fraction == pytest.approx(1 / 3)
    with pytest.raises(FormatError):
        flat_assignment({"a": 0, "b": 2})
    with pytest.raises(FormatError):
        flat_assignment({"a": -2})
