"""Data model, name normalization, (de)serialization, splits, synthesis."""

import dataclasses
import json

import numpy as np
import pytest

from disambig.corpus import (
    NOISY_PRESET,
    AuthorRef,
    CandidateSet,
    CorpusFormatError,
    Paper,
    SynthSpec,
    load_corpus,
    name_match_key,
    normalize_name,
    save_corpus,
    split_by_name,
    synth_corpus,
    tokenize,
)
from disambig.graphbuild import coauthor_keys, jaccard


def test_normalize_name_fixtures():
    assert normalize_name("Li Jianrong") == "lijianrong"
    assert normalize_name("J.-P. Müller") == "jpmuller"
    assert normalize_name("  Alex   Morgan ") == "alexmorgan"
    assert normalize_name("O'Brien, Seán") == "obriensean"


def test_normalize_name_idempotent_and_empty():
    for raw in ("Li Jianrong", "J.-P. Müller", "X Æ A-12"):
        once = normalize_name(raw)
        assert normalize_name(once) == once
    with pytest.raises(ValueError):
        normalize_name("")
    assert normalize_name("--- ---") == ""


def test_name_match_key_order_insensitive():
    assert name_match_key("Li Jianrong") == name_match_key("Jianrong Li")
    assert name_match_key("Li Jianrong") == "jianrongli"
    assert name_match_key("") == ""


def test_tokenize():
    assert tokenize("Deep-Learning for  Networks!") == [
        "deep",
        "learning",
        "for",
        "networks",
    ]
    assert tokenize("Deep-Learning for Networks", drop_stopwords=True) == [
        "deep",
        "learning",
        "networks",
    ]
    assert tokenize("Graphes dirigés") == ["graphes", "diriges"]


def _paper(pid, focal="Alex Morgan", coauthors=(), title=("topic", "words")):
    authors = [AuthorRef(focal, normalize_name(focal), frozenset({"org1"}))]
    authors += [AuthorRef(c, normalize_name(c), frozenset()) for c in coauthors]
    return Paper(id=pid, title_tokens=tuple(title), authors=tuple(authors))


def test_candidate_set_validation():
    with pytest.raises(CorpusFormatError, match="duplicate paper id"):
        CandidateSet("Alex Morgan", (_paper("p1"), _paper("p1")))
    with pytest.raises(CorpusFormatError, match="no author matching"):
        CandidateSet("Alex Morgan", (_paper("p1", focal="Someone Else"),))
    with pytest.raises(CorpusFormatError, match="truth map"):
        CandidateSet("Alex Morgan", (_paper("p1"),), truth={"p2": "a"})
    # name-order variant still matches the set name
    cs = CandidateSet("Alex Morgan", (_paper("p1", focal="Morgan Alex"),))
    assert cs.focal_author(cs.papers[0]).name_raw == "Morgan Alex"


def test_synth_deterministic_and_truth_total():
    spec = SynthSpec(authors_per_name=3, papers_per_author=5, seed=9)
    a = synth_corpus(spec)
    b = synth_corpus(spec)
    assert a == b
    (cs,) = a
    assert len(cs.papers) == 15
    assert set(cs.truth) == {p.id for p in cs.papers}
    assert len(set(cs.truth.values())) == 3
    c = synth_corpus(dataclasses.replace(spec, seed=10))
    assert c != a


def test_synth_zero_noise_coauthor_separation():
    # single collaborator circle, no noise: every same-author pair shares
    # the circle anchor, and distinct authors share no collaborators
    (cs,) = synth_corpus(SynthSpec(authors_per_name=4, papers_per_author=6, seed=2))
    keys = [coauthor_keys(cs, i) for i in range(len(cs.papers))]
    authors = [cs.truth[p.id] for p in cs.papers]
    within = []
    cross = []
    for i in range(len(keys)):
        for j in range(i + 1, len(keys)):
            sim = jaccard(keys[i], keys[j])
            (within if authors[i] == authors[j] else cross).append(sim)
    assert min(within) > max(cross)
    assert max(cross) == 0.0


def test_save_load_round_trip(tmp_path, small_noisy_corpus):
    save_corpus(small_noisy_corpus, tmp_path / "data")
    loaded = load_corpus(tmp_path / "data")
    assert loaded == small_noisy_corpus


def test_load_corpus_errors(tmp_path):
    with pytest.raises(CorpusFormatError, match="no dataset files"):
        load_corpus(tmp_path)
    bad = tmp_path / "x.json"
    bad.write_text("{]")
    with pytest.raises(CorpusFormatError, match="not valid JSON"):
        load_corpus(tmp_path)
    bad.write_text(json.dumps({"papers": []}))
    with pytest.raises(CorpusFormatError, match="'name' and 'papers'"):
        load_corpus(tmp_path)


def test_load_corpus_skips_incomplete_papers(tmp_path):
    doc = {
        "name": "Alex Morgan",
        "papers": [
            {"id": "p1", "title": "good paper", "authors": [{"name": "Alex Morgan"}]},
            {"id": "p2", "title": "", "authors": [{"name": "Alex Morgan"}]},
            {"id": "p3", "title": "no authors", "authors": []},
        ],
    }
    (tmp_path / "a.json").write_text(json.dumps(doc))
    (sets,) = [load_corpus(tmp_path)[0]]
    assert [p.id for p in sets.papers] == ["p1"]


def test_load_corpus_ignores_manifest(tmp_path, tiny_corpus):
    save_corpus(tiny_corpus, tmp_path)
    (tmp_path / "manifest.json").write_text("{}")
    assert load_corpus(tmp_path) == tiny_corpus


def _name_sets(n):
    return [
        CandidateSet(f"Alex Morgan{i}", (_paper(f"p{i}", focal=f"Alex Morgan{i}"),))
        for i in range(n)
    ]


def test_split_by_name_sizes():
    sets = _name_sets(480)
    train, valid, test = split_by_name(sets, (2, 1, 1), seed=0)
    assert (len(train), len(valid), len(test)) == (240, 120, 120)
    sets = _name_sets(4)
    train, valid, test = split_by_name(sets, (2, 1, 1), seed=0)
    assert (len(train), len(valid), len(test)) == (2, 1, 1)


def test_split_by_name_partitions_and_is_deterministic():
    sets = _name_sets(21)
    a = split_by_name(sets, (2, 1, 1), seed=3)
    b = split_by_name(sets, (2, 1, 1), seed=3)
    assert [[cs.name for cs in part] for part in a] == [
        [cs.name for cs in part] for part in b
    ]
    names = sorted(cs.name for part in a for cs in part)
    assert names == sorted(cs.name for cs in sets)
    seen = [cs.name for part in a for cs in part]
    assert len(seen) == len(set(seen))
    # remainders go to train: 21 -> 11/5/5
    assert [len(p) for p in a] == [11, 5, 5]


def test_split_small_input_all_train():
    sets = _name_sets(2)
    train, valid, test = split_by_name(sets)
    assert len(train) == 2 and not valid and not test
    with pytest.raises(ValueError):
        split_by_name(sets, (1, 0, 1))


def test_synth_spec_validation():
    with pytest.raises(ValueError):
        SynthSpec(names=0)
    with pytest.raises(ValueError):
        SynthSpec(org_noise=1.5)
    with pytest.raises(ValueError):
        SynthSpec(coauthor_circles=5, coauthor_pool=4)


def test_noisy_preset_shape():
    corpus = synth_corpus(NOISY_PRESET)
    assert len(corpus) == 3
    assert all(len(cs.papers) == 100 for cs in corpus)
    assert all(len(set(cs.truth.values())) == 5 for cs in corpus)


def test_focal_name_order_flipped_in_synth():
    (cs,) = synth_corpus(SynthSpec(seed=1))
    raws = {
        next(a.name_raw for a in p.authors if a.match_key == cs.name_key)
        for p in cs.papers
    }
    assert len(raws) == 2  # both token orders occur
