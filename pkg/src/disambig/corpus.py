"""Data model and corpus handling for per-name disambiguation.

A corpus is a collection of candidate sets: one per ambiguous author name,
each holding every paper that lists an author whose name matches that name.
This module owns tokenization and name normalization, dataset (de)serialization
in the documented one-JSON-file-per-name format, the name-level train/valid/test
split, and a synthetic ground-truth generator used for desk-scale verification.

All types are immutable after construction and safe to share across parallel
per-name training jobs.
"""

from __future__ import annotations

import json
import logging
import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .stopwords import STOPWORDS

logger = logging.getLogger(__name__)

_NON_ALNUM = re.compile(r"[\W_]+", re.UNICODE)


class CorpusFormatError(ValueError):
    """A dataset file violates the documented format."""


def _fold(text: str) -> str:
    """Lowercase and fold diacritics to base letters (Müller -> muller)."""
    decomposed = unicodedata.normalize("NFKD", text)
    return "".join(ch for ch in decomposed if not unicodedata.combining(ch)).lower()


def tokenize(text: str, drop_stopwords: bool = False) -> list[str]:
    """Split free text into normalized lowercase tokens.

    Splits on any non-alphanumeric run; optionally removes the shipped
    English stopword list (used for title and venue fields).
    """
    tokens = [t for t in _NON_ALNUM.split(_fold(text)) if t]
    if drop_stopwords:
        tokens = [t for t in tokens if t not in STOPWORDS]
    return tokens


def normalize_name(raw: str) -> str:
    """Normalize a person name: lowercase, fold diacritics, strip all
    whitespace and punctuation, keep token order ("Li Jianrong" -> "lijianrong").

    Returns "" when nothing survives normalization; callers treat that as an
    unusable author entry and drop it from relation extraction.
    """
    if not raw:
        raise ValueError("normalize_name: empty input")
    parts = [_NON_ALNUM.sub("", piece) for piece in _fold(raw).split()]
    return "".join(p for p in parts if p)


def name_match_key(raw: str) -> str:
    """Order-insensitive matching key: normalized tokens sorted then joined,
    so "Li Jianrong" and "Jianrong Li" both map to "jianrongli"."""
    if not raw:
        return ""
    parts = [_NON_ALNUM.sub("", piece) for piece in _fold(raw).split()]
    return "".join(sorted(p for p in parts if p))


@dataclass(frozen=True)
class AuthorRef:
    """One author entry on a paper: raw name, normalized name, org tokens."""

    name_raw: str
    name_norm: str
    org_tokens: frozenset[str]

    @property
    def match_key(self) -> str:
        return name_match_key(self.name_raw)


@dataclass(frozen=True)
class Paper:
    id: str
    title_tokens: tuple[str, ...]
    authors: tuple[AuthorRef, ...]
    venue_tokens: frozenset[str] = frozenset()
    keyword_tokens: frozenset[str] = frozenset()
    year: int | None = None
    abstract_tokens: tuple[str, ...] | None = None


@dataclass(frozen=True)
class CandidateSet:
    """All candidate papers sharing one ambiguous author name.

    ``truth``, when present, maps every paper id to its real author id and is
    used only for evaluation and pseudo-label-free oracles, never in training.
    """

    name_raw: str
    papers: tuple[Paper, ...]
    truth: dict[str, str] | None = None
    name: str = field(init=False)
    name_key: str = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "name", normalize_name(self.name_raw))
        object.__setattr__(self, "name_key", name_match_key(self.name_raw))
        self._validate()

    def _validate(self) -> None:
        seen: set[str] = set()
        for p in self.papers:
            if not p.id:
                raise CorpusFormatError(f"{self.name}: paper with empty id")
            if p.id in seen:
                raise CorpusFormatError(f"{self.name}: duplicate paper id {p.id!r}")
            seen.add(p.id)
            if not any(a.match_key == self.name_key for a in p.authors):
                raise CorpusFormatError(
                    f"{self.name}: paper {p.id!r} lists no author matching the set name"
                )
        if self.truth is not None:
            missing = seen - set(self.truth)
            extra = set(self.truth) - seen
            if missing or extra:
                raise CorpusFormatError(
                    f"{self.name}: truth map must cover every paper id exactly once "
                    f"(missing={sorted(missing)}, unknown={sorted(extra)})"
                )

    def focal_author(self, paper: Paper) -> AuthorRef | None:
        """The author entry on ``paper`` matching this set's name."""
        for a in paper.authors:
            if a.match_key == self.name_key:
                return a
        return None


def _parse_paper(rec: dict, where: str) -> Paper | None:
    """Build a Paper from one dataset record; None when required fields are
    missing (the caller counts and logs skipped records)."""
    pid = rec.get("id")
    if not isinstance(pid, str) or not pid:
        raise CorpusFormatError(f"{where}: paper record without string id")
    title = rec.get("title")
    authors_raw = rec.get("authors")
    if not title or not authors_raw:
        return None
    authors = []
    for a in authors_raw:
        raw = a.get("name", "")
        if not raw:
            continue
        org = a.get("org", "") or ""
        authors.append(
            AuthorRef(
                name_raw=raw,
                name_norm=normalize_name(raw),
                org_tokens=frozenset(tokenize(org)),
            )
        )
    keywords: set[str] = set()
    for kw in rec.get("keywords") or []:
        keywords.update(tokenize(kw))
    abstract = rec.get("abstract")
    year = rec.get("year")
    return Paper(
        id=pid,
        title_tokens=tuple(tokenize(title, drop_stopwords=True)),
        authors=tuple(authors),
        venue_tokens=frozenset(tokenize(rec.get("venue", "") or "", drop_stopwords=True)),
        keyword_tokens=frozenset(keywords),
        year=int(year) if year is not None else None,
        abstract_tokens=tuple(tokenize(abstract)) if abstract else None,
    )


def load_corpus(path: str | Path) -> list[CandidateSet]:
    """Load a dataset directory (one JSON document per name).

    Papers are ordered by id within each set; sets are ordered by name.
    Malformed files are rejected outright with their location; individual
    papers missing a title or author list are skipped with a logged count.
    """
    root = Path(path)
    # manifest.json is a reserved name: run metadata, not corpus data.
    files = sorted(f for f in root.glob("*.json") if f.name != "manifest.json")
    if not files:
        raise CorpusFormatError(f"no dataset files (*.json) under {root}")
    sets = []
    for f in files:
        try:
            doc = json.loads(f.read_text(encoding="utf-8"))
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise CorpusFormatError(f"{f}: not valid JSON ({exc})") from exc
        if not isinstance(doc, dict) or "name" not in doc or "papers" not in doc:
            raise CorpusFormatError(f"{f}: top-level map with 'name' and 'papers' required")
        papers = []
        skipped = 0
        for rec in doc["papers"]:
            try:
                paper = _parse_paper(rec, where=str(f))
            except AttributeError as exc:
                raise CorpusFormatError(f"{f}: malformed paper record ({exc})") from exc
            if paper is None:
                skipped += 1
            else:
                papers.append(paper)
        if skipped:
            logger.warning("%s: skipped %d paper(s) missing title or authors", f, skipped)
        papers.sort(key=lambda p: p.id)
        truth = doc.get("truth")
        sets.append(
            CandidateSet(
                name_raw=doc["name"],
                papers=tuple(papers),
                truth=dict(truth) if truth is not None else None,
            )
        )
    sets.sort(key=lambda cs: cs.name)
    return sets


def save_corpus(sets: list[CandidateSet], path: str | Path) -> None:
    """Write candidate sets in the documented dataset format (one file per
    name). Loading the result reproduces the data model exactly."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    for cs in sets:
        doc: dict = {
            "name": cs.name_raw,
            "papers": [
                {
                    "id": p.id,
                    "title": " ".join(p.title_tokens),
                    "authors": [
                        {"name": a.name_raw, "org": " ".join(sorted(a.org_tokens))}
                        for a in p.authors
                    ],
                    "venue": " ".join(sorted(p.venue_tokens)),
                    "keywords": sorted(p.keyword_tokens),
                    **({"year": p.year} if p.year is not None else {}),
                    **(
                        {"abstract": " ".join(p.abstract_tokens)}
                        if p.abstract_tokens is not None
                        else {}
                    ),
                }
                for p in cs.papers
            ],
        }
        if cs.truth is not None:
            doc["truth"] = dict(sorted(cs.truth.items()))
        (root / f"{cs.name}.json").write_text(
            json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )


def split_by_name(
    sets: list[CandidateSet],
    ratios: tuple[int, int, int] = (2, 1, 1),
    seed: int = 0,
) -> tuple[list[CandidateSet], list[CandidateSet], list[CandidateSet]]:
    """Partition candidate sets (never papers) into train/valid/test groups
    sized proportionally to ``ratios``, remainders going to train."""
    if any(r <= 0 for r in ratios):
        raise ValueError(f"split ratios must be positive, got {ratios}")
    ordered = sorted(sets, key=lambda cs: cs.name)
    n = len(ordered)
    if n < 3:
        if n:
            logger.warning("only %d name(s); assigning all to train", n)
        return list(ordered), [], []
    total = sum(ratios)
    n_valid = n * ratios[1] // total
    n_test = n * ratios[2] // total
    n_train = n - n_valid - n_test
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    shuffled = [ordered[i] for i in perm]
    by_name = lambda cs: cs.name  # noqa: E731
    return (
        sorted(shuffled[:n_train], key=by_name),
        sorted(shuffled[n_train : n_train + n_valid], key=by_name),
        sorted(shuffled[n_train + n_valid :], key=by_name),
    )


# ---------------------------------------------------------------------------
# Synthetic ground-truth corpus
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SynthSpec:
    """Configuration for the synthetic corpus generator.

    Each synthetic author gets a distinctive coauthor pool, org token set,
    venue list, and topic vocabulary. The pool is split into
    ``coauthor_circles`` disjoint collaborator circles and each paper is
    written with one circle, so circles > 1 fragment the author's
    coauthor evidence into groups that share no names. Noise rates
    corrupt attributes: ``org_noise`` replaces org tokens with shared
    filler words, ``venue_noise`` swaps the venue for a random one,
    ``coauthor_noise`` swaps coauthors for strangers drawn from a pool
    common to all authors, and ``title_noise`` corrupts topical tokens
    in titles and keywords.
    """

    names: int = 1
    authors_per_name: int = 5
    papers_per_author: int = 20
    coauthor_pool: int = 4
    coauthor_circles: int = 1
    org_noise: float = 0.0
    venue_noise: float = 0.0
    coauthor_noise: float = 0.0
    title_noise: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        for f_ in ("names", "authors_per_name", "papers_per_author", "coauthor_pool"):
            if getattr(self, f_) < 1:
                raise ValueError(f"SynthSpec.{f_} must be >= 1")
        if not 1 <= self.coauthor_circles <= self.coauthor_pool:
            raise ValueError("coauthor_circles must lie in [1, coauthor_pool]")
        for f_ in ("org_noise", "venue_noise", "coauthor_noise", "title_noise"):
            v = getattr(self, f_)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"SynthSpec.{f_} must be in [0, 1], got {v}")


ZERO_NOISE_PRESET = SynthSpec()
NOISY_PRESET = SynthSpec(
    names=3,
    coauthor_circles=2,
    org_noise=0.3,
    venue_noise=0.2,
    coauthor_noise=0.40,
    title_noise=0.35,
    seed=0,
)
SYNTH_PRESETS = {"default": ZERO_NOISE_PRESET, "zero": ZERO_NOISE_PRESET, "noisy": NOISY_PRESET}

_GIVEN = ("alex", "sam", "li", "maria", "arun", "yuki", "omar", "eva", "chen", "nils")
_FAMILY = ("morgan", "silva", "wang", "kaur", "haas", "osei", "ito", "novak", "reyes", "lund")


def _pick(rng: np.random.Generator, pool: list[str]) -> str:
    return pool[int(rng.integers(len(pool)))]


def synth_corpus(spec: SynthSpec) -> list[CandidateSet]:
    """Generate candidate sets with known ground truth, deterministic per seed."""
    rng = np.random.default_rng(spec.seed)
    sets = []
    n_authors_total = spec.names * spec.authors_per_name

    # Per-author pools are disjoint slices; noise draws come from shared
    # tails so corrupted papers link to scattered strangers, never to a
    # whole foreign author's block at once.
    global_collabs = [
        f"{_GIVEN[j % len(_GIVEN)]} collab{j}"
        for j in range(spec.coauthor_pool * n_authors_total + 12)
    ]
    stranger_collabs = global_collabs[spec.coauthor_pool * n_authors_total :]
    global_orgs = [f"orgword{j}" for j in range(8 * n_authors_total + 20)]
    n_venues_total = 2 * n_authors_total + 6
    global_venues = [
        frozenset(f"venue{v}tok{j}" for j in range(5)) for v in range(n_venues_total)
    ]
    global_topics = [f"topicword{j}" for j in range(15 * n_authors_total + 30)]

    author_counter = 0
    for i in range(spec.names):
        given = _GIVEN[i % len(_GIVEN)]
        family = _FAMILY[(i // len(_GIVEN)) % len(_FAMILY)]
        name_raw = f"{given} {family}{i}"
        papers = []
        truth = {}
        for a in range(spec.authors_per_name):
            aid = author_counter
            author_counter += 1
            collabs = global_collabs[spec.coauthor_pool * aid : spec.coauthor_pool * (aid + 1)]
            circles = [
                collabs[c :: spec.coauthor_circles] for c in range(spec.coauthor_circles)
            ]
            org_set = global_orgs[6 * aid : 6 * (aid + 1)]
            venues = global_venues[2 * aid : 2 * (aid + 1)]
            topics = global_topics[15 * aid : 15 * (aid + 1)]
            for k in range(spec.papers_per_author):
                pid = f"p{i:02d}-{a:02d}-{k:03d}"
                # Round-robin over circles; each circle's first member is its
                # anchor, present on every one of the circle's papers.
                circle = circles[k % spec.coauthor_circles]
                coauthors = {circle[0]}
                for _ in range(2):
                    if rng.random() < spec.coauthor_noise:
                        coauthors.add(_pick(rng, stranger_collabs))
                    elif len(circle) > 1:
                        coauthors.add(_pick(rng, circle[1:]))
                coauthors.discard(name_raw)
                org_tokens = frozenset(
                    _pick(rng, global_orgs) if rng.random() < spec.org_noise else tok
                    for tok in org_set
                )
                if rng.random() < spec.venue_noise:
                    venue = global_venues[int(rng.integers(n_venues_total))]
                else:
                    venue = venues[int(rng.integers(len(venues)))]
                title_words = [
                    _pick(rng, global_topics) if rng.random() < spec.title_noise else w
                    for w in (topics[j] for j in rng.choice(15, size=6, replace=False))
                ]
                keywords = frozenset(
                    _pick(rng, global_topics) if rng.random() < spec.title_noise else w
                    for w in (topics[j] for j in rng.choice(15, size=3, replace=False))
                )
                # Flip the focal name's token order on half the papers so that
                # order-insensitive matching is exercised end to end.
                focal_raw = name_raw if rng.random() < 0.5 else " ".join(name_raw.split()[::-1])
                authors = [
                    AuthorRef(focal_raw, normalize_name(focal_raw), org_tokens)
                ] + [
                    AuthorRef(c, normalize_name(c), frozenset()) for c in sorted(coauthors)
                ]
                abstract = None
                if rng.random() < 0.5:
                    abstract = tuple(topics[j] for j in rng.integers(0, 15, size=10))
                papers.append(
                    Paper(
                        id=pid,
                        title_tokens=tuple(title_words),
                        authors=tuple(authors),
                        venue_tokens=venue,
                        keyword_tokens=keywords,
                        year=2000 + int(rng.integers(0, 20)),
                        abstract_tokens=abstract,
                    )
                )
                truth[pid] = f"author{aid}"
        papers.sort(key=lambda p: p.id)
        sets.append(CandidateSet(name_raw=name_raw, papers=tuple(papers), truth=truth))
    sets.sort(key=lambda cs: cs.name)
    return sets
