"""Joint training loop: encode, pseudo-label, blend losses, step.

Each epoch runs a full-batch forward pass, clusters the current
embeddings into pseudo-labels (no gradient flows through clustering),
and takes one Adam step on lam * cluster_loss + (1 - lam) * recon_loss.
The labels reported for a run are the ones computed in the final epoch,
i.e. from the embeddings the last update was based on, so reported
labels and reported embeddings always correspond.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cluster import ClusterConfig, dbscan, labels_to_adjacency
from .embed import VocabEmbeddings, embed_papers
from .graphbuild import RELATIONS, EdgeThresholds, PaperGraph, build_graph
from .model import Adam, NonFiniteError, encode, forward, init_params, joint_loss
from .util import derive_seed

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    lam: float = 0.5
    lr: float = 1e-3
    weight_decay: float = 1e-4
    epochs: int = 50
    hidden_dims: tuple[int, int] = (128, 128)
    heads: int = 4
    compression_ratio: float = 1.0
    cluster: ClusterConfig = field(default_factory=ClusterConfig)
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lam must lie in [0, 1]")
        if self.epochs < 1:
            raise ValueError("epochs must be positive")
        if not 0.0 < self.compression_ratio <= 1.0:
            raise ValueError("compression_ratio must lie in (0, 1]")


@dataclass
class TrainResult:
    labels: np.ndarray
    embeddings: np.ndarray
    params: dict[str, np.ndarray]
    loss_trace: list[dict]


def n_cluster_slots(n_papers: int, compression_ratio: float) -> int:
    """Width of the cluster head: the paper count scaled down by the
    compression ratio, never below one slot."""
    return max(1, round(compression_ratio * n_papers))


def train_name(graph: PaperGraph, config: TrainConfig = TrainConfig(), tag: str = "") -> TrainResult:
    """Train one candidate set's graph and return its final labels.

    ``tag`` keeps parameter draws distinct between names and ensemble
    members sharing one root seed.
    """
    n = graph.n
    if n == 0:
        return TrainResult(
            labels=np.zeros(0, dtype=np.int64),
            embeddings=np.zeros((0, config.hidden_dims[1])),
            params={},
            loss_trace=[],
        )
    params = init_params(
        feature_dim=graph.features.shape[1],
        n_clusters=n_cluster_slots(n, config.compression_ratio),
        hidden_dims=config.hidden_dims,
        heads=config.heads,
        seed=derive_seed(config.seed, "init", tag),
    )
    opt = Adam(params, lr=config.lr, weight_decay=config.weight_decay)
    labels = np.full(n, -1, dtype=np.int64)
    trace: list[dict] = []
    embeddings = np.zeros((n, config.hidden_dims[1]))
    for epoch in range(config.epochs):
        state = forward(params, graph.features, graph.adjacency)
        embeddings = state.h.data.copy()
        labels = dbscan(embeddings, config.cluster)
        comembership = labels_to_adjacency(labels)
        total, rec, clu = joint_loss(state, graph.adjacency, comembership, config.lam)
        total.backward()
        opt.step()
        trace.append(
            {
                "epoch": epoch,
                "loss": float(total.data),
                "recon_loss": rec,
                "cluster_loss": clu,
                "n_clusters": int(labels.max()) + 1,
                "n_outliers": int((labels == -1).sum()),
            }
        )
    return TrainResult(
        labels=labels,
        embeddings=embeddings,
        params={name: p.data.copy() for name, p in params.items()},
        loss_trace=trace,
    )


def infer_labels(
    params, graph: PaperGraph, cluster_config: ClusterConfig = ClusterConfig()
) -> np.ndarray:
    """Cluster the embeddings a trained parameter set produces on a graph."""
    _, h = encode(params, graph.features, graph.adjacency)
    return dbscan(h.data, cluster_config)


def name_graph(
    cs,
    emb: VocabEmbeddings,
    thresholds: EdgeThresholds,
    seed: int,
    relations: tuple[str, ...] = RELATIONS,
) -> PaperGraph:
    """Build one candidate set's graph with a per-name edge-sampling
    seed derived from the root seed."""
    return build_graph(
        cs, emb, thresholds, seed=derive_seed(seed, "cov", cs.name), relations=relations
    )


def _train_entry(item) -> tuple[str, TrainResult]:
    cs, emb, thresholds, relations, config = item
    graph = name_graph(cs, emb, thresholds, config.seed, relations)
    return cs.name, train_name(graph, config, tag=cs.name)


def train_all(
    sets,
    emb: VocabEmbeddings,
    thresholds: EdgeThresholds = EdgeThresholds(),
    config: TrainConfig = TrainConfig(),
    relations: tuple[str, ...] = RELATIONS,
    jobs: int = 1,
) -> tuple[dict[str, TrainResult], dict[str, str]]:
    """Train an independent model per candidate set, isolating failures:
    a name whose loss diverges is reported in the failure map instead of
    aborting the rest. Results depend only on (name, seed), not on
    scheduling order."""
    results: dict[str, TrainResult] = {}
    failures: dict[str, str] = {}
    items = [(cs, emb, thresholds, relations, config) for cs in sorted(sets, key=lambda s: s.name)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [(item[0].name, pool.submit(_train_entry, item)) for item in items]
            for name, future in futures:
                try:
                    results[name] = future.result()[1]
                except Exception as exc:
                    log.error("training failed for %r: %s", name, exc)
                    failures[name] = str(exc)
    else:
        for item in items:
            name = item[0].name
            try:
                results[name] = _train_entry(item)[1]
            except Exception as exc:
                log.error("training failed for %r: %s", name, exc)
                failures[name] = str(exc)
    return results, failures
