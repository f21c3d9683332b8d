"""Density clustering of paper embeddings into pseudo-labels.

DBSCAN over a dense pairwise-distance matrix. The default metric is
cosine distance on L2-normalized rows; an all-zero embedding cannot be
normalized and is given distance 1 to every point (itself included), so
it always lands in the outlier bin. Cluster ids are canonicalized to
first-occurrence order along the point index, outliers keep label -1.

Determinism: clusters are seeded from core points in ascending index
order and grown breadth-first through sorted neighbour lists, so a point
reachable from several clusters joins the earliest-created one with a
core point inside eps of it.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

_UNVISITED = -2
OUTLIER = -1


@dataclass(frozen=True)
class ClusterConfig:
    eps: float = 0.1
    min_samples: int = 4
    metric: str = "cosine"

    def __post_init__(self) -> None:
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.min_samples < 1:
            raise ValueError("min_samples must be positive")
        if self.metric not in ("cosine", "euclidean"):
            raise ValueError("metric must be 'cosine' or 'euclidean'")


def pairwise_distances(x: np.ndarray, metric: str = "cosine") -> np.ndarray:
    """Dense distance matrix. Cosine rows are unit-normalized first;
    zero rows keep distance 1 everywhere, even on the diagonal."""
    x = np.asarray(x, dtype=np.float64)
    if metric == "cosine":
        norms = np.linalg.norm(x, axis=1, keepdims=True)
        unit = np.divide(x, norms, out=np.zeros_like(x), where=norms > 0)
        return np.clip(1.0 - unit @ unit.T, 0.0, 2.0)
    if metric == "euclidean":
        sq = (x * x).sum(axis=1)
        d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
        return np.sqrt(np.clip(d2, 0.0, None))
    raise ValueError("metric must be 'cosine' or 'euclidean'")


def dbscan_from_distances(dist: np.ndarray, eps: float, min_samples: int) -> np.ndarray:
    """DBSCAN given a precomputed distance matrix; see the module
    docstring for the tie-breaking rules."""
    dist = np.asarray(dist)
    n = dist.shape[0]
    within = dist <= eps
    core = within.sum(axis=1) >= min_samples
    labels = np.full(n, _UNVISITED, dtype=np.int64)
    cid = 0
    for i in range(n):
        if labels[i] != _UNVISITED:
            continue
        if not core[i]:
            labels[i] = OUTLIER
            continue
        labels[i] = cid
        queue = deque(np.flatnonzero(within[i]).tolist())
        while queue:
            j = queue.popleft()
            if labels[j] == OUTLIER:
                labels[j] = cid
                continue
            if labels[j] != _UNVISITED:
                continue
            labels[j] = cid
            if core[j]:
                queue.extend(np.flatnonzero(within[j]).tolist())
        cid += 1
    return canonicalize_labels(labels)


def dbscan(x: np.ndarray, config: ClusterConfig = ClusterConfig()) -> np.ndarray:
    """Cluster embedding rows; returns canonical labels with -1 outliers."""
    return dbscan_from_distances(
        pairwise_distances(x, config.metric), config.eps, config.min_samples
    )


def canonicalize_labels(labels: np.ndarray) -> np.ndarray:
    """Relabel clusters to 0, 1, ... in order of first appearance;
    outliers stay -1."""
    labels = np.asarray(labels)
    mapping: dict[int, int] = {}
    out = np.empty(len(labels), dtype=np.int64)
    for idx, value in enumerate(labels.tolist()):
        if value == OUTLIER:
            out[idx] = OUTLIER
        else:
            if value not in mapping:
                mapping[value] = len(mapping)
            out[idx] = mapping[value]
    return out


def labels_to_adjacency(labels: np.ndarray) -> np.ndarray:
    """Pairwise same-cluster indicator matrix with unit diagonal. All
    outliers are treated as one shared cluster, so two -1 points count
    as co-members."""
    y = np.asarray(labels).reshape(-1, 1)
    return (y == y.T).astype(np.float64)


def finalize_labels(labels: np.ndarray) -> np.ndarray:
    """Promote each -1 to a fresh singleton cluster so the result is a
    total partition; existing labels are left untouched."""
    labels = np.asarray(labels, dtype=np.int64).copy()
    assigned = labels[labels != OUTLIER]
    nxt = int(assigned.max()) + 1 if assigned.size else 0
    for idx in np.flatnonzero(labels == OUTLIER):
        labels[idx] = nxt
        nxt += 1
    return labels
