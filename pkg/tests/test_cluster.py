"""Density clustering against an independent union-find implementation."""

import numpy as np
import pytest

from disambig.cluster import (
    ClusterConfig,
    canonicalize_labels,
    dbscan,
    dbscan_from_distances,
    finalize_labels,
    labels_to_adjacency,
    pairwise_distances,
)

from oracles import cosine_distances_oracle, dbscan_oracle, partition_key


def _bundle(rng, center, n, spread=0.01):
    c = np.asarray(center, dtype=float)
    return c + rng.normal(scale=spread, size=(n, len(c)))


def test_two_bundles():
    rng = np.random.default_rng(0)
    x = np.vstack([_bundle(rng, [1, 0, 0], 4), _bundle(rng, [0, 1, 0], 4)])
    labels = dbscan(x, ClusterConfig(eps=0.1, min_samples=4))
    assert labels.tolist() == [0, 0, 0, 0, 1, 1, 1, 1]


def test_isolated_point_is_outlier():
    rng = np.random.default_rng(1)
    x = np.vstack([_bundle(rng, [1, 0], 2), [[0.0, 1.0]]])
    labels = dbscan(x, ClusterConfig(eps=0.1, min_samples=2))
    assert labels.tolist() == [0, 0, -1]


def test_zero_rows_always_outliers():
    rng = np.random.default_rng(2)
    x = np.vstack([_bundle(rng, [1, 0], 5), np.zeros((2, 2))])
    labels = dbscan(x, ClusterConfig(eps=0.2, min_samples=1))
    assert labels[:5].tolist() == [0] * 5
    assert labels[5:].tolist() == [-1, -1]
    # a zero row is distance 1 from everything, itself included
    d = pairwise_distances(x)
    assert (d[5] == 1.0).all() and d[5, 5] == 1.0


def test_pairwise_distances_match_scalar_oracle():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(12, 4))
    x[3] = 0.0
    assert np.allclose(pairwise_distances(x, "cosine"), cosine_distances_oracle(x), atol=1e-12)
    d = pairwise_distances(x, "euclidean")
    for i in range(12):
        for j in range(12):
            assert d[i, j] == pytest.approx(np.linalg.norm(x[i] - x[j]), abs=1e-9)


def test_euclidean_line():
    x = np.array([[0.0], [1.0], [2.0], [10.0]])
    labels = dbscan(x, ClusterConfig(eps=1.0, min_samples=2, metric="euclidean"))
    assert labels.tolist() == [0, 0, 0, -1]


def test_matches_oracle_on_random_instances():
    rng = np.random.default_rng(4)
    for trial in range(50):
        n = int(rng.integers(1, 40))
        dim = int(rng.integers(1, 5))
        centers = rng.normal(size=(int(rng.integers(1, 5)), dim))
        idx = rng.integers(0, len(centers), size=n)
        x = centers[idx] + rng.normal(scale=0.15, size=(n, dim))
        eps = float(rng.uniform(0.05, 0.8))
        min_samples = int(rng.integers(1, 6))
        metric = "cosine" if trial % 2 else "euclidean"
        dist = pairwise_distances(x, metric)
        got = dbscan_from_distances(dist, eps, min_samples)
        want = dbscan_oracle(dist, eps, min_samples)
        assert partition_key(got) == partition_key(want), (trial, got, want)
        assert got.tolist() == want.tolist()  # canonical forms coincide too


def test_permutation_invariance():
    rng = np.random.default_rng(5)
    x = np.vstack([_bundle(rng, [1, 0], 6), _bundle(rng, [0, 1], 6), [[0.5, 0.5]]])
    labels = dbscan(x, ClusterConfig(eps=0.1, min_samples=3))
    perm = rng.permutation(len(x))
    permuted = dbscan(x[perm], ClusterConfig(eps=0.1, min_samples=3))
    a = labels_to_adjacency(finalize_labels(labels))[np.ix_(perm, perm)]
    b = labels_to_adjacency(finalize_labels(permuted))
    assert np.array_equal(a, b)


def test_eps_monotonicity():
    rng = np.random.default_rng(6)
    x = rng.normal(size=(40, 3))
    dist = pairwise_distances(x, "euclidean")
    prev_outliers = None
    for eps in (0.3, 0.6, 0.9, 1.3):
        labels = dbscan_from_distances(dist, eps, 3)
        assert partition_key(labels) == partition_key(dbscan_oracle(dist, eps, 3))
        outliers = set(np.flatnonzero(labels == -1).tolist())
        if prev_outliers is not None:
            assert outliers <= prev_outliers
        prev_outliers = outliers


def test_canonical_label_form():
    rng = np.random.default_rng(7)
    x = rng.normal(size=(30, 2))
    labels = dbscan(x, ClusterConfig(eps=0.5, min_samples=2, metric="euclidean"))
    seen = []
    for lbl in labels.tolist():
        if lbl != -1 and lbl not in seen:
            seen.append(lbl)
    assert seen == list(range(len(seen)))


def test_canonicalize_labels():
    assert canonicalize_labels(np.array([5, 5, -1, 2, 5, 2])).tolist() == [0, 0, -1, 1, 0, 1]
    assert canonicalize_labels(np.array([-1, -1])).tolist() == [-1, -1]


def test_labels_to_adjacency():
    got = labels_to_adjacency(np.array([0, 1, 0]))
    assert got.tolist() == [[1, 0, 1], [0, 1, 0], [1, 0, 1]]
    # all outliers share one bin: a pair of -1s counts as co-members
    got = labels_to_adjacency(np.array([-1, -1, 2]))
    assert got.tolist() == [[1, 1, 0], [1, 1, 0], [0, 0, 1]]
    assert np.diagonal(labels_to_adjacency(np.array([3]))).all()


def test_finalize_labels():
    assert finalize_labels(np.array([0, -1, -1])).tolist() == [0, 1, 2]
    assert finalize_labels(np.array([-1, -1, -1])).tolist() == [0, 1, 2]
    assert finalize_labels(np.array([1, 0, 2])).tolist() == [1, 0, 2]  # untouched
    assert finalize_labels(np.array([], dtype=np.int64)).tolist() == []
    assert finalize_labels(np.array([2, -1, 0])).tolist() == [2, 3, 0]
    src = np.array([0, -1])
    finalize_labels(src)
    assert src.tolist() == [0, -1]  # input never mutated


def test_config_validation():
    with pytest.raises(ValueError):
        ClusterConfig(eps=0.0)
    with pytest.raises(ValueError):
        ClusterConfig(min_samples=0)
    with pytest.raises(ValueError):
        ClusterConfig(metric="manhattan")
