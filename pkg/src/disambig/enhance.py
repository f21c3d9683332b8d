"""Result enhancement: ensemble voting and outlier post-matching.

A single training run inherits whatever bias its graph's thresholds
baked in, so several runs over differently thresholded graphs are
combined through a co-association vote: papers that land in the same
(non-outlier) cluster in at least half the runs are linked, and the
connected components of those links become the merged clustering.

Post-matching then reconsiders every remaining outlier against the
clusters that exist at the start of the pass, scoring attribute-set
similarity (coauthors, title, keywords, venue, org) and either adopting
the outlier into its best-scoring cluster or promoting it to a fresh
singleton cluster, so no paper is left unassigned.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .cluster import canonicalize_labels
from .corpus import CandidateSet
from .graphbuild import EdgeThresholds, build_graph, coauthor_keys, jaccard
from .trainer import TrainConfig, TrainResult, train_name
from .util import derive_seed

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EnsembleMember:
    """One vote: a relation subset, its thresholds, and optionally a
    member-specific training configuration (None inherits the shared one
    passed to :func:`run_ensemble`)."""

    relations: tuple[str, ...]
    thresholds: EdgeThresholds = field(default_factory=EdgeThresholds)
    train: TrainConfig | None = None


def default_members() -> tuple[EnsembleMember, ...]:
    """Six members spanning the relation channels: coauthor-only at two
    strictness levels, plus org at two levels, plus venue at two levels."""
    return (
        EnsembleMember(("coa",), EdgeThresholds(coa_min=0.0)),
        EnsembleMember(("coa",), EdgeThresholds(coa_min=1.0)),
        EnsembleMember(("coa", "coo"), EdgeThresholds(coo_min=0.5)),
        EnsembleMember(("coa", "coo"), EdgeThresholds(coo_min=0.6)),
        EnsembleMember(("coa", "coo", "cov"), EdgeThresholds(cov_min=1.0)),
        EnsembleMember(("coa", "coo", "cov"), EdgeThresholds(cov_min=2.0)),
    )


@dataclass(frozen=True)
class EnsembleSpec:
    members: tuple[EnsembleMember, ...] = field(default_factory=default_members)
    vote_threshold: float = 0.5

    def __post_init__(self) -> None:
        if not self.members:
            raise ValueError("ensemble needs at least one member")
        if not 0.0 < self.vote_threshold <= 1.0:
            raise ValueError("vote_threshold must lie in (0, 1]")


def ensemble_vote(runs: list[np.ndarray], vote_threshold: float = 0.5) -> np.ndarray:
    """Merge label vectors by co-association.

    ``vote_threshold`` also accepts an :class:`EnsembleSpec`, whose
    threshold is then used.

    M[i, j] is the fraction of runs placing i and j in the same
    non-outlier cluster (an outlier matches nothing, itself included).
    Pairs with M >= vote_threshold are linked and components are read
    off. A paper linked to nothing keeps -1 when most runs called it an
    outlier, otherwise it becomes a singleton cluster.
    """
    if isinstance(vote_threshold, EnsembleSpec):
        vote_threshold = vote_threshold.vote_threshold
    if not runs:
        raise ValueError("no label runs to merge")
    if len({len(r) for r in runs}) > 1:
        raise ValueError("label runs have mismatched lengths")
    stack = np.stack([np.asarray(r) for r in runs])
    n_runs, n = stack.shape
    same = np.zeros((n, n))
    for row in stack:
        valid = row != -1
        agree = (row[:, None] == row[None, :]) & valid[:, None] & valid[None, :]
        same += agree
    linked = (same / n_runs) >= vote_threshold
    np.fill_diagonal(linked, False)

    outlier_votes = (stack == -1).sum(axis=0)
    labels = np.full(n, -2, dtype=np.int64)
    cid = 0
    for i in range(n):
        if labels[i] != -2:
            continue
        component = [i]
        labels[i] = cid
        queue = [i]
        while queue:
            u = queue.pop()
            for v in np.flatnonzero(linked[u]):
                if labels[v] == -2:
                    labels[v] = cid
                    component.append(int(v))
                    queue.append(int(v))
        if len(component) == 1 and outlier_votes[i] * 2 > n_runs:
            labels[i] = -1
        else:
            cid += 1
    return canonicalize_labels(labels)


def run_ensemble(
    candidate_set: CandidateSet,
    features: np.ndarray,
    spec: EnsembleSpec = EnsembleSpec(),
    train_config: TrainConfig = TrainConfig(),
    tag: str = "",
) -> tuple[np.ndarray, list[TrainResult]]:
    """Train one model per ensemble member and vote the labels together."""
    results = []
    for idx, member in enumerate(spec.members):
        member_config = member.train if member.train is not None else train_config
        graph = build_graph(
            candidate_set,
            features,
            thresholds=member.thresholds,
            seed=derive_seed(member_config.seed, "cov", tag, idx),
            relations=member.relations,
        )
        results.append(train_name(graph, member_config, tag="%s/m%d" % (tag, idx)))
        log.debug(
            "member %d (%s): %d clusters",
            idx,
            "+".join(member.relations),
            int(results[-1].labels.max()) + 1,
        )
    merged = ensemble_vote([r.labels for r in results], spec.vote_threshold)
    return merged, results


@dataclass(frozen=True)
class PostMatchConfig:
    score_threshold: float = 1.5

    def __post_init__(self) -> None:
        if self.score_threshold < 0:
            raise ValueError("score_threshold must be non-negative")


def _attribute_sets(candidate_set: CandidateSet, index: int):
    paper = candidate_set.papers[index]
    return (
        coauthor_keys(candidate_set, index),
        frozenset(paper.title_tokens),
        paper.keyword_tokens,
        paper.venue_tokens,
        candidate_set.focal_author(paper).org_tokens,
    )


def post_match(
    labels: np.ndarray,
    candidate_set: CandidateSet,
    config: PostMatchConfig = PostMatchConfig(),
) -> np.ndarray:
    """Assign every outlier to a cluster or promote it to a singleton.

    Cluster membership is snapshotted before the pass, so an outlier is
    scored only against clusters the vote produced, never against other
    outliers or clusters created during the pass. The score against a
    cluster is the sum over five attribute sets (coauthors, title words,
    keywords, venue words, focal org words) of the best Jaccard
    similarity any member paper achieves; ties go to the lowest cluster
    id. Scores below the threshold create a new singleton cluster.
    Outliers are considered in paper-id order, one pass.
    """
    labels = np.asarray(labels, dtype=np.int64).copy()
    clusters: dict[int, list[int]] = {}
    for i, label in enumerate(labels.tolist()):
        if label != -1:
            clusters.setdefault(label, []).append(i)
    attrs = {i: _attribute_sets(candidate_set, i) for i in range(len(labels))}
    next_id = (int(labels.max()) + 1) if (labels != -1).any() else 0

    order = sorted(
        np.flatnonzero(labels == -1).tolist(),
        key=lambda i: candidate_set.papers[i].id,
    )
    for i in order:
        best_score = -1.0
        best_cluster = -1
        for cid in sorted(clusters):
            score = 0.0
            for a in range(5):
                best_attr = 0.0
                for j in clusters[cid]:
                    sim = jaccard(attrs[i][a], attrs[j][a])
                    if sim > best_attr:
                        best_attr = sim
                score += best_attr
            if score > best_score:
                best_score = score
                best_cluster = cid
        if best_cluster != -1 and best_score >= config.score_threshold:
            labels[i] = best_cluster
        else:
            labels[i] = next_id
            next_id += 1
    return labels
