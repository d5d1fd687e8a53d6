import json
import logging

import pytest
from hypothesis import given, strategies as st

from grabqc.corpus import (
    ClinicalNote,
    CorpusError,
    ExtractionRules,
    dump_corpus,
    extract_queries,
    load_corpus,
    split_sentences,
    split_text,
)
from grabqc.text import normalize_surface, token_spans, tokenize


def test_tokenize_lowercases_and_drops_punctuation():
    assert tokenize("Pain in R. knee, (acute)") == ["pain", "in", "r", "knee", "acute"]
    assert tokenize("T10_2") == ["t10", "2"]


@given(st.text(max_size=60))
def test_token_spans_index_the_text(text):
    for start, end, tok in token_spans(text):
        assert text[start:end].lower() == tok
    assert [t for _, _, t in token_spans(text)] == tokenize(text)


def test_normalize_surface():
    assert normalize_surface("  Lower-Back ") == "lower back"


def test_split_two_sentences():
    assert split_text("Pain in knee. No swelling.") == ["Pain in knee.", "No swelling."]


def test_split_empty_section():
    note = ClinicalNote("N", {"HPI": ""})
    assert split_sentences(note) == []


def test_abbreviation_guard():
    assert split_text("Dr. Smith noted pain.") == ["Dr. Smith noted pain."]


def test_sentences_are_indexed_per_section():
    note = ClinicalNote("N", {"HPI": "A one. B two.", "EXAM": "C three."})
    sents = split_sentences(note)
    assert [(s.section, s.index) for s in sents] == [("HPI", 0), ("HPI", 1), ("EXAM", 0)]
    assert all(s.note_id == "N" for s in sents)


@given(st.lists(st.sampled_from(["Pain here", "No swelling", "Knee is fine", "Dr. Lee saw it"]), min_size=1, max_size=6))
def test_split_covers_all_tokens(parts):
    text = " ".join(p + "." for p in parts)
    pieces = split_text(text)
    assert [t for p in pieces for t in tokenize(p)] == tokenize(text)
    assert len(pieces) <= len(parts)


def test_numbered_diagnosis_items():
    note = ClinicalNote("N", {"DIAGNOSIS": "1. Sciatica 2. Acute knee pain"})
    qs = extract_queries(note)
    assert [q.text for q in qs] == ["Sciatica", "Acute knee pain"]
    assert [q.query_id for q in qs] == ["N:q0", "N:q1"]


def test_unnumbered_single_line():
    note = ClinicalNote("N", {"Diagnosis": "Strain of lumbar region"})
    assert [q.text for q in extract_queries(note)] == ["Strain of lumbar region"]


def test_bulleted_and_multiline_items():
    note = ClinicalNote("N", {"IMPRESSION": "- Lip laceration\n- Hypertension."})
    assert [q.text for q in extract_queries(note)] == ["Lip laceration", "Hypertension"]
    note = ClinicalNote("N", {"DIAGNOSIS": "Sciatica\nAsthma"})
    assert [q.text for q in extract_queries(note)] == ["Sciatica", "Asthma"]


def test_no_diagnosis_section_warns(caplog):
    note = ClinicalNote("N", {"HPI": "Pain."})
    with caplog.at_level(logging.WARNING):
        assert extract_queries(note) == []
    assert "N" in caplog.text


def test_custom_rules():
    note = ClinicalNote("N", {"ASSESSMENT": "a) Sciatica b) Asthma"})
    rules = ExtractionRules(("assessment",), r"\b[a-z]\)\s+")
    assert [q.text for q in extract_queries(note, rules)] == ["Sciatica", "Asthma"]


def test_load_round_trip(tmp_path):
    notes = [ClinicalNote("A", {"HPI": "x."}, frozenset({"I10"})), ClinicalNote("B", {"DIAGNOSIS": "1. y"})]
    path = tmp_path / "c.jsonl"
    dump_corpus(notes, path)
    assert load_corpus(path) == notes


def test_load_missing_sections_names_line(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text(json.dumps({"note_id": "A", "sections": {"HPI": "x"}}) + "\n" + json.dumps({"note_id": "B"}) + "\n")
    with pytest.raises(CorpusError, match="line 2"):
        load_corpus(path)


def test_load_empty_file(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text("")
    assert load_corpus(path) == []


def test_load_duplicate_note(tmp_path):
    rec = json.dumps({"note_id": "A", "sections": {"HPI": "x"}})
    path = tmp_path / "c.jsonl"
    path.write_text(rec + "\n" + rec + "\n")
    with pytest.raises(CorpusError, match="duplicate"):
        load_corpus(path)


def test_load_bad_json(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text("{nope\n")
    with pytest.raises(CorpusError, match="line 1"):
        load_corpus(path)
