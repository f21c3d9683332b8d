"""Pairwise clustering metrics.

Precision, recall, and F1 over unordered paper pairs: a pair counts as
predicted-positive when both papers share a predicted cluster, and as
true-positive when they also share an author. Counting is done per
label group with binomial coefficients rather than by enumerating the
O(n^2) pairs. A label of -1 marks an outlier and forms its own
singleton, contributing no pairs.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Mapping
from dataclasses import dataclass
from math import comb


@dataclass(frozen=True)
class PairwiseMetrics:
    precision: float
    recall: float
    f1: float
    true_pairs: int
    pred_pairs: int
    hit_pairs: int

    def as_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "true_pairs": self.true_pairs,
            "pred_pairs": self.pred_pairs,
            "hit_pairs": self.hit_pairs,
        }


def _expand_outliers(labels) -> list:
    # -1 never co-clusters with anything, including other -1s
    return [
        ("out", i) if label == -1 else ("lab", label)
        for i, label in enumerate(labels)
    ]


def _group_pairs(counts: Counter) -> int:
    return sum(comb(c, 2) for c in counts.values())


def _align(pred, truth) -> tuple[list, list]:
    """Two parallel label lists from either id-keyed maps (coverage
    checked) or pre-aligned sequences (length checked)."""
    if isinstance(pred, Mapping) != isinstance(truth, Mapping):
        raise TypeError("pred and truth must both be id-keyed maps or both sequences")
    if isinstance(pred, Mapping):
        missing = sorted(set(truth) - set(pred))
        extra = sorted(set(pred) - set(truth))
        if missing or extra:
            raise ValueError(
                "prediction does not cover the truth paper set"
                " (missing: %s, unexpected: %s)" % (missing, extra)
            )
        ids = sorted(truth)
        return [pred[i] for i in ids], [truth[i] for i in ids]
    pred, truth = list(pred), list(truth)
    if len(pred) != len(truth):
        raise ValueError(
            "label lengths differ: %d predicted vs %d true" % (len(pred), len(truth))
        )
    return pred, truth


def pairwise_prf(pred, truth) -> PairwiseMetrics:
    """Pairwise precision/recall/F1 of a predicted clustering against
    the true authorship. Both arguments are either maps from paper id to
    label (coverage is verified) or label sequences aligned to the same
    paper order. Labels may be any hashables; -1 means outlier.

    When one side has no pairs at all the corresponding ratio is 0
    rather than undefined, except that two pair-free labelings agree
    perfectly and score 1/1/1.
    """
    p, t = _align(pred, truth)
    p = _expand_outliers(p)
    t = _expand_outliers(t)
    true_pairs = _group_pairs(Counter(t))
    pred_pairs = _group_pairs(Counter(p))
    hits = _group_pairs(Counter(zip(t, p)))
    if true_pairs == 0 and pred_pairs == 0:
        return PairwiseMetrics(1.0, 1.0, 1.0, 0, 0, 0)
    precision = hits / pred_pairs if pred_pairs else 0.0
    recall = hits / true_pairs if true_pairs else 0.0
    denom = precision + recall
    f1 = 2.0 * precision * recall / denom if denom else 0.0
    return PairwiseMetrics(precision, recall, f1, true_pairs, pred_pairs, hits)


def macro_average(per_name: list[PairwiseMetrics]) -> PairwiseMetrics:
    """Unweighted mean of per-name precision, recall, and F1 (the F1 is
    the mean of F1s, not the harmonic mean of the averages); pair counts
    are summed."""
    if not per_name:
        raise ValueError("macro_average needs at least one name")
    n = len(per_name)
    return PairwiseMetrics(
        precision=sum(m.precision for m in per_name) / n,
        recall=sum(m.recall for m in per_name) / n,
        f1=sum(m.f1 for m in per_name) / n,
        true_pairs=sum(m.true_pairs for m in per_name),
        pred_pairs=sum(m.pred_pairs for m in per_name),
        hit_pairs=sum(m.hit_pairs for m in per_name),
    )


def truth_labels(candidate_set) -> list:
    """Author-id label per paper, aligned with ``candidate_set.papers``.
    Requires ground truth on the candidate set."""
    if candidate_set.truth is None:
        raise ValueError("candidate set %r has no ground truth" % candidate_set.name)
    return [candidate_set.truth[p.id] for p in candidate_set.papers]
