import dataclasses
import re

import pytest

from disambig.corpus import SynthSpec, synth_corpus

_criterion_details: dict[int, str] = {}


def record_criterion(number: int, detail: str) -> None:
    """Stash a measurement so the terminal summary can show it."""
    _criterion_details[number] = detail
    print("criterion %d: %s" % (number, detail))


def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance criterion, with measurements."""
    words = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP", "error": "FAIL"}
    rows = {}
    for outcome, word in words.items():
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            m = re.search(r"test_acceptance\.py::test_criterion_(\d+)", nodeid)
            if m:
                rows[int(m.group(1))] = word
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(rows):
        detail = _criterion_details.get(num, "")
        line = "criterion %d: %s" % (num, rows[num])
        if detail:
            line += " (%s)" % detail
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def tiny_corpus():
    """One name, 2 authors x 4 papers, no noise: 8 papers total."""
    return synth_corpus(SynthSpec(authors_per_name=2, papers_per_author=4, seed=5))


@pytest.fixture(scope="session")
def small_noisy_corpus():
    spec = SynthSpec(
        names=2,
        authors_per_name=3,
        papers_per_author=6,
        coauthor_circles=2,
        org_noise=0.3,
        venue_noise=0.2,
        coauthor_noise=0.3,
        title_noise=0.3,
        seed=11,
    )
    return synth_corpus(spec)


def make_spec(**kw) -> SynthSpec:
    return dataclasses.replace(SynthSpec(), **kw)
