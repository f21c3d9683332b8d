"""Per-name paper graphs from co-author, co-org, and co-venue evidence.

One graph per candidate set: nodes are papers, and a pair of papers is
linked when it shares coauthor names, when the focal author's listed
orgs are similar enough, or when the venues overlap (the last sampled
down to a small keep probability so dense venue cliques do not drown the
sharper signals). Relation matrices are kept separately; the adjacency
handed to the encoder is their union plus self-loops.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import CandidateSet, Paper, name_match_key
from .embed import VocabEmbeddings, embed_papers
from .kernels import pair_uniform, token_overlap_pairs

RELATIONS = ("coa", "coo", "cov")


@dataclass(frozen=True)
class EdgeThresholds:
    """Strict lower bounds on pairwise evidence, one per relation.

    An edge needs overlap strictly greater than the bound. Co-venue
    edges additionally survive only a Bernoulli(cov_keep_prob) draw that
    is a pure function of (seed, i, j).
    """

    coa_min: float = 0.0
    coo_min: float = 0.6
    cov_min: float = 2.0
    cov_keep_prob: float = 0.1

    def __post_init__(self) -> None:
        if not 0.0 <= self.cov_keep_prob <= 1.0:
            raise ValueError("cov_keep_prob must lie in [0, 1]")


@dataclass(frozen=True)
class PaperGraph:
    paper_ids: tuple[str, ...]
    features: np.ndarray
    adjacency: np.ndarray
    relations: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.paper_ids)


def word_overlap(a, b) -> int:
    """Number of shared elements between two token collections."""
    return len(frozenset(a) & frozenset(b))


def jaccard(a, b) -> float:
    """Jaccard similarity of two token collections; two empty sets
    score 0, not 1, so absent evidence never links papers."""
    sa, sb = frozenset(a), frozenset(b)
    union = len(sa | sb)
    if union == 0:
        return 0.0
    return len(sa & sb) / union


def coauthor_keys(candidate_set: CandidateSet, index: int) -> frozenset[str]:
    """Name keys of the paper's coauthors, excluding every author whose
    key matches the focal name (name-order variants collapse to one key)."""
    return _coauthor_keys(candidate_set.papers[index], candidate_set.name_key)


def _coauthor_keys(paper: Paper, focal_key: str) -> frozenset[str]:
    return frozenset(
        a.match_key for a in paper.authors if a.match_key != focal_key and a.match_key
    )


def coauthor_overlap(p: Paper, q: Paper, focal: str) -> int:
    """Number of coauthor name keys two papers share, never counting the
    focal author (any name whose sorted-token key matches ``focal``'s)."""
    key = name_match_key(focal)
    return word_overlap(_coauthor_keys(p, key), _coauthor_keys(q, key))


def _token_rows_to_csr(rows: list[frozenset[str]]) -> tuple[np.ndarray, np.ndarray]:
    ids: dict[str, int] = {}
    indptr = np.zeros(len(rows) + 1, dtype=np.int64)
    flat: list[int] = []
    for i, row in enumerate(rows):
        encoded = []
        for tok in row:
            if tok not in ids:
                ids[tok] = len(ids)
            encoded.append(ids[tok])
        encoded.sort()
        flat.extend(encoded)
        indptr[i + 1] = len(flat)
    return indptr, np.asarray(flat, dtype=np.int32)


def _overlap_counts(rows: list[frozenset[str]]):
    indptr, tokens = _token_rows_to_csr(rows)
    ii, jj, cc = token_overlap_pairs(indptr, tokens)
    sizes = np.diff(indptr)
    return ii, jj, cc, sizes


def build_graph(
    candidate_set: CandidateSet,
    emb,
    thresholds: EdgeThresholds = EdgeThresholds(),
    seed: int = 0,
    relations: tuple[str, ...] = RELATIONS,
) -> PaperGraph:
    """Assemble the multi-relational graph for one candidate set.

    ``emb`` is either trained vocabulary embeddings (feature rows are
    computed per paper) or a precomputed feature matrix with one row per
    paper. ``relations`` selects which evidence channels contribute to
    the adjacency union; matrices for unselected channels are not
    computed. Relation matrices store the raw evidence value on each
    kept edge (overlap count, or Jaccard score for co-org); the encoder
    consumes only the binary adjacency.
    """
    n = len(candidate_set.papers)
    if isinstance(emb, VocabEmbeddings):
        features = embed_papers(candidate_set, emb)
    else:
        features = np.asarray(emb, dtype=np.float64)
    if features.shape[0] != n:
        raise ValueError(
            "feature rows (%d) do not match paper count (%d)" % (features.shape[0], n)
        )
    unknown = set(relations) - set(RELATIONS)
    if unknown:
        raise ValueError("unknown relations: %s" % sorted(unknown))

    rel_mats: dict[str, np.ndarray] = {}

    if "coa" in relations:
        rows = [coauthor_keys(candidate_set, i) for i in range(n)]
        ii, jj, cc, _ = _overlap_counts(rows)
        mat = np.zeros((n, n))
        keep = cc > thresholds.coa_min
        mat[ii[keep], jj[keep]] = cc[keep]
        rel_mats["coa"] = mat + mat.T

    if "coo" in relations:
        rows = [candidate_set.focal_author(p).org_tokens for p in candidate_set.papers]
        ii, jj, cc, sizes = _overlap_counts(rows)
        mat = np.zeros((n, n))
        union = sizes[ii] + sizes[jj] - cc
        score = cc / np.maximum(union, 1)
        keep = score > thresholds.coo_min
        mat[ii[keep], jj[keep]] = score[keep]
        rel_mats["coo"] = mat + mat.T

    if "cov" in relations:
        rows = [p.venue_tokens for p in candidate_set.papers]
        ii, jj, cc, _ = _overlap_counts(rows)
        mat = np.zeros((n, n))
        keep = cc > thresholds.cov_min
        if keep.any():
            draws = pair_uniform(seed, ii[keep], jj[keep])
            sampled = draws < thresholds.cov_keep_prob
            mat[ii[keep][sampled], jj[keep][sampled]] = cc[keep][sampled]
        rel_mats["cov"] = mat + mat.T

    adjacency = np.eye(n)
    for mat in rel_mats.values():
        adjacency = np.maximum(adjacency, (mat > 0).astype(np.float64))

    return PaperGraph(
        paper_ids=tuple(p.id for p in candidate_set.papers),
        features=features,
        adjacency=adjacency,
        relations=rel_mats,
    )


def edge_list(graph: PaperGraph) -> list[tuple[int, int, str, float]]:
    """Undirected edges as (i, j, relation, weight) with i < j, sorted,
    for inspection and serialization."""
    out = []
    for name, mat in sorted(graph.relations.items()):
        ii, jj = np.nonzero(np.triu(mat, 1))
        out.extend((int(i), int(j), name, float(mat[i, j])) for i, j in zip(ii, jj))
    out.sort()
    return out
