"""Word embeddings over paper text, trained with skip-gram negative sampling.

Each paper contributes one token stream (title, then keywords, author
orgs, venue, and optionally the abstract); streams from every candidate
set are pooled into a single training corpus. Training runs through the
kernel layer, so the compiled path is used when available. All
randomness derives from the config seed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .corpus import CandidateSet, Paper
from .kernels import sgns_epoch
from .util import atomic_write_text, derive_seed

log = logging.getLogger(__name__)

_ALPHA0 = 0.025


@dataclass(frozen=True)
class EmbedConfig:
    dim: int = 100
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    min_count: int = 2
    include_abstracts: bool = True
    top_components: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.dim < 1 or self.window < 1 or self.epochs < 1:
            raise ValueError("dim, window, and epochs must be positive")
        if self.negatives < 1:
            raise ValueError("negatives must be positive")
        if self.min_count < 1:
            raise ValueError("min_count must be positive")
        if self.top_components < 0:
            raise ValueError("top_components must be non-negative")


@dataclass(frozen=True)
class VocabEmbeddings:
    """Trained word vectors plus the per-epoch mean pair loss trace."""

    dim: int
    table: dict[str, np.ndarray]
    losses: tuple[float, ...] = ()

    def vector(self, word: str) -> np.ndarray | None:
        return self.table.get(word)


def token_stream(paper: Paper, include_abstracts: bool = True) -> list[str]:
    """The training sentence for one paper. Set-valued attributes are
    emitted in sorted order so the stream is reproducible."""
    out = list(paper.title_tokens)
    out.extend(sorted(paper.keyword_tokens))
    for author in paper.authors:
        out.extend(sorted(author.org_tokens))
    out.extend(sorted(paper.venue_tokens))
    if include_abstracts and paper.abstract_tokens is not None:
        out.extend(paper.abstract_tokens)
    return out


def _build_sentences(
    candidate_sets: list[CandidateSet], include_abstracts: bool
) -> list[list[str]]:
    sents = []
    for cs in candidate_sets:
        for paper in cs.papers:
            stream = token_stream(paper, include_abstracts)
            if stream:
                sents.append(stream)
    return sents


def train_embeddings(
    candidate_sets: list[CandidateSet], config: EmbedConfig = EmbedConfig()
) -> VocabEmbeddings:
    """Train skip-gram vectors over the pooled token streams.

    Words below ``min_count`` are dropped from the vocabulary and from
    the encoded streams. Raises ValueError when nothing survives the
    count threshold.
    """
    sentences = _build_sentences(candidate_sets, config.include_abstracts)
    counts: dict[str, int] = {}
    for sent in sentences:
        for word in sent:
            counts[word] = counts.get(word, 0) + 1
    vocab = sorted(
        (w for w, c in counts.items() if c >= config.min_count),
        key=lambda w: (-counts[w], w),
    )
    if not vocab:
        raise ValueError(
            "empty vocabulary: no token reaches min_count=%d" % config.min_count
        )
    index = {w: i for i, w in enumerate(vocab)}

    encoded: list[int] = []
    offsets = [0]
    for sent in sentences:
        ids = [index[w] for w in sent if w in index]
        if len(ids) > 1:
            encoded.extend(ids)
            offsets.append(len(encoded))
    sents_arr = np.asarray(encoded, dtype=np.int32)
    offsets_arr = np.asarray(offsets, dtype=np.int64)

    freq = np.array([counts[w] for w in vocab], dtype=np.float64) ** 0.75
    cum_table = np.cumsum(freq / freq.sum())
    cum_table[-1] = 1.0

    rng = np.random.default_rng(config.seed)
    w_in = (rng.random((len(vocab), config.dim)) - 0.5) / config.dim
    w_out = np.zeros((len(vocab), config.dim), dtype=np.float64)

    tokens_total = max(1, len(encoded) * config.epochs)
    tokens_done = 0
    state = derive_seed(config.seed, "sgns")
    losses = []
    for epoch in range(config.epochs):
        loss, pairs, tokens_done, state = sgns_epoch(
            sents_arr,
            offsets_arr,
            w_in,
            w_out,
            cum_table,
            config.window,
            config.negatives,
            _ALPHA0,
            _ALPHA0 * 1e-4,
            tokens_done,
            tokens_total,
            state,
        )
        mean_loss = loss / pairs if pairs else 0.0
        losses.append(mean_loss)
        log.debug("embed epoch %d: %d pairs, mean loss %.4f", epoch, pairs, mean_loss)

    # Small corpora leave every vector inside one narrow cone (the
    # negative-sampling frequency geometry), which flattens all downstream
    # cosines. Centering plus dropping the top principal direction(s)
    # restores isotropy.
    w_in -= w_in.mean(axis=0)
    if config.top_components:
        _, _, vt = np.linalg.svd(w_in, full_matrices=False)
        top = vt[: config.top_components]
        w_in -= (w_in @ top.T) @ top
    table = {w: w_in[i].copy() for i, w in enumerate(vocab)}
    return VocabEmbeddings(dim=config.dim, table=table, losses=tuple(losses))


def paper_embedding(paper: Paper, embeddings: VocabEmbeddings) -> np.ndarray:
    """Feature vector for one paper: the sum of vectors for its title,
    keyword, and author-org tokens (multiset, summed in sorted order).
    Tokens outside the vocabulary contribute nothing; an all-unknown
    paper maps to the zero vector."""
    tokens = list(paper.title_tokens)
    tokens.extend(sorted(paper.keyword_tokens))
    for author in paper.authors:
        tokens.extend(sorted(author.org_tokens))
    out = np.zeros(embeddings.dim, dtype=np.float64)
    for word in sorted(tokens):
        vec = embeddings.table.get(word)
        if vec is not None:
            out += vec
    return out


def unit_rows(x: np.ndarray) -> np.ndarray:
    """Scale each row to unit L2 norm; zero rows stay zero."""
    x = np.asarray(x, dtype=np.float64)
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    return np.divide(x, norms, out=np.zeros_like(x), where=norms > 0)


def embed_papers(
    candidate_set: CandidateSet, embeddings: VocabEmbeddings, unit: bool = True
) -> np.ndarray:
    """Stack paper embeddings for one candidate set, row i = papers[i].

    Rows are unit-normalized by default: token-count differences
    otherwise swing the sum norms enough to saturate the decoder's
    sigmoid, freezing training from the first step.
    """
    stacked = np.stack([paper_embedding(p, embeddings) for p in candidate_set.papers])
    return unit_rows(stacked) if unit else stacked


def save_embeddings(embeddings: VocabEmbeddings, path: str) -> None:
    """Write the vocabulary table as ``word<TAB>v1 v2 ...`` text."""
    lines = ["%d %d" % (len(embeddings.table), embeddings.dim)]
    for word in sorted(embeddings.table):
        vec = embeddings.table[word]
        lines.append(word + "\t" + " ".join("%.17g" % v for v in vec))
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_embeddings(path: str) -> VocabEmbeddings:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError("malformed embedding table header in %s" % path)
        count, dim = int(header[0]), int(header[1])
        table: dict[str, np.ndarray] = {}
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            word, _, rest = line.partition("\t")
            vec = np.array([float(v) for v in rest.split()], dtype=np.float64)
            if len(vec) != dim:
                raise ValueError("bad vector width for %r in %s" % (word, path))
            table[word] = vec
    if len(table) != count:
        raise ValueError(
            "embedding table %s declares %d words, found %d" % (path, count, len(table))
        )
    return VocabEmbeddings(dim=dim, table=table)
