from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from grabqc.corpus import ClinicalNote, DiagnosisQuery, Sentence
from grabqc.ctxgraph import CONTEXT_ENTITY, QUERY_ENTITY, ContextualGraph, GraphNode
from grabqc.kb import KnowledgeBase, make_concept

ROOT = Path(__file__).resolve().parents[1]
FIXTURE_DIR = ROOT / "fixtures" / "disambiguation"
FIXTURE_CFG = FIXTURE_DIR / "pipeline.cfg"


def sciatica_kb() -> KnowledgeBase:
    concepts = [
        make_concept("C01", "sciatica", semantic_type="disease"),
        make_concept("C02", "pain", semantic_type="symptom"),
        make_concept("C03", "lower back", ["low back"], semantic_type="body part"),
        make_concept("C04", "right", semantic_type="qualifier"),
        make_concept("C05", "leg", semantic_type="body part"),
        make_concept("C06", "hypertension", semantic_type="disease"),
    ]
    edges = [("C01", "C02", "has_symptom"), ("C01", "C03", "site"), ("C04", "C03", "laterality")]
    return KnowledgeBase.build(concepts, edges)


def sentence(text: str, index: int = 0, section: str = "HPI", note_id: str = "N1") -> Sentence:
    return Sentence(note_id, section, index, text)


def query(text: str, note_id: str = "N1", ordinal: int = 0) -> DiagnosisQuery:
    return DiagnosisQuery(f"{note_id}:q{ordinal}", note_id, text, ordinal)


def random_graph(rng: np.random.Generator, n: int, p: float = 0.4, vocab=("pain", "knee", "right", "left", "back", "lower", "strain", "of")) -> ContextualGraph:
    upper = np.triu(rng.random((n, n)) < p, 1)
    adj = (upper | upper.T).astype(np.int64)
    nodes = []
    for i in range(n):
        k = int(rng.integers(1, 4))
        words = tuple(rng.choice(vocab, size=k, replace=True).tolist())
        origin = QUERY_ENTITY if i == 0 else CONTEXT_ENTITY
        nodes.append(GraphNode(i, words, origin, f"C{i}", None if i == 0 else ("HPI", i)))
    return ContextualGraph(f"g{n}", tuple(nodes), adj, None, " ".join(nodes[0].words), "N0")


@pytest.fixture
def kb():
    return sciatica_kb()


@pytest.fixture
def note():
    return ClinicalNote(
        "N1",
        {"HPI": "Patient reports pain in the right lower back. Leg strength is normal.",
         "DIAGNOSIS": "1. Sciatica 2. Hypertension"},
        frozenset({"M54.31"}),
    )


# one PASS/FAIL line per acceptance criterion at the end of the run

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            num, title = mark.args
            _CRITERIA.setdefault(num, {"title": title, "outcomes": [], "notes": []})


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    entry = _CRITERIA[mark.args[0]]
    if report.when == "call" or (report.when == "setup" and not report.passed):
        entry["outcomes"].append(report.outcome)
        entry["notes"].extend(getattr(item, "criterion_notes", []))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        entry = _CRITERIA[num]
        outcomes = entry["outcomes"]
        if not outcomes:
            status = "NOT RUN"
        elif all(o == "passed" for o in outcomes):
            status = "PASS"
        else:
            status = "FAIL"
        note = f"  ({'; '.join(entry['notes'])})" if entry["notes"] else ""
        terminalreporter.write_line(f"criterion {num:2d} {status:4s} {entry['title']}{note}")
