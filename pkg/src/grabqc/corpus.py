"""Clinical note loading, sentence segmentation and diagnosis-query extraction."""
from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

logger = logging.getLogger(__name__)

ABBREVIATIONS = frozenset({"dr.", "mr.", "ms.", "vs.", "e.g.", "i.e."})

_BOUNDARY_RE = re.compile(r"[.!?](?=\s+[A-Z0-9])")
_WS_RE = re.compile(r"\s+")

DEFAULT_DIAGNOSIS_SECTIONS = (
    "DIAGNOSIS",
    "DIAGNOSES",
    "DISCHARGE DIAGNOSIS",
    "DISCHARGE DIAGNOSES",
    "IMPRESSION",
)
# numbered markers anywhere after whitespace ("1. Sciatica 2. Knee pain"), bullets at line start
DEFAULT_ITEM_PATTERN = r"(?:^|(?<=\s))\d+[.)]\s+|^[ \t]*[-•*][ \t]+"


class CorpusError(ValueError):
    pass


def normalize_section_name(name: str) -> str:
    return _WS_RE.sub(" ", name.strip()).upper()


@dataclass(frozen=True)
class ClinicalNote:
    note_id: str
    sections: dict[str, str]
    gold_codes: frozenset[str] = frozenset()

    def to_json(self) -> dict:
        return {
            "note_id": self.note_id,
            "sections": dict(self.sections),
            "gold_codes": sorted(self.gold_codes),
        }


@dataclass(frozen=True)
class Sentence:
    note_id: str
    section: str
    index: int
    text: str


@dataclass(frozen=True)
class DiagnosisQuery:
    query_id: str
    note_id: str
    text: str
    ordinal: int


@dataclass(frozen=True)
class ExtractionRules:
    sections: tuple[str, ...] = DEFAULT_DIAGNOSIS_SECTIONS
    item_pattern: str = DEFAULT_ITEM_PATTERN

    def __post_init__(self):
        object.__setattr__(self, "sections", tuple(normalize_section_name(s) for s in self.sections))


def _parse_note(obj, lineno: int) -> ClinicalNote:
    if not isinstance(obj, dict):
        raise CorpusError(f"line {lineno}: expected a JSON object")
    note_id = obj.get("note_id")
    if not isinstance(note_id, str) or not note_id.strip():
        raise CorpusError(f"line {lineno}: missing or empty 'note_id'")
    raw_sections = obj.get("sections")
    if not isinstance(raw_sections, dict) or not raw_sections:
        raise CorpusError(f"line {lineno}: 'sections' must be a non-empty object")
    sections: dict[str, str] = {}
    for name, text in raw_sections.items():
        key = normalize_section_name(str(name))
        if not key:
            raise CorpusError(f"line {lineno}: empty section name")
        if not isinstance(text, str):
            raise CorpusError(f"line {lineno}: section {name!r} is not a string")
        if key in sections:
            raise CorpusError(f"line {lineno}: duplicate section {key!r}")
        sections[key] = text
    codes = obj.get("gold_codes", [])
    if not isinstance(codes, list) or not all(isinstance(c, str) for c in codes):
        raise CorpusError(f"line {lineno}: 'gold_codes' must be a list of strings")
    return ClinicalNote(note_id, sections, frozenset(codes))


def load_corpus(path: str | Path) -> list[ClinicalNote]:
    """Read a JSONL corpus; any malformed line aborts the whole load."""
    notes: list[ClinicalNote] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            note = _parse_note(obj, lineno)
            if note.note_id in seen:
                raise CorpusError(f"line {lineno}: duplicate note_id {note.note_id!r}")
            seen.add(note.note_id)
            notes.append(note)
    return notes


def dump_corpus(notes: Iterable[ClinicalNote], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for note in notes:
            fh.write(json.dumps(note.to_json(), sort_keys=True) + "\n")


def split_text(text: str) -> list[str]:
    pieces = []
    start = 0
    for m in _BOUNDARY_RE.finditer(text):
        end = m.end()
        words = text[start:end].split()
        if words and words[-1].lstrip("([{\"'").lower() in ABBREVIATIONS:
            continue
        piece = text[start:end].strip()
        if piece:
            pieces.append(piece)
        start = end
    tail = text[start:].strip()
    if tail:
        pieces.append(tail)
    return pieces


def split_sentences(note: ClinicalNote) -> list[Sentence]:
    return [
        Sentence(note.note_id, section, i, piece)
        for section, text in note.sections.items()
        for i, piece in enumerate(split_text(text))
    ]


def _split_items(text: str, pattern: re.Pattern) -> list[str]:
    if pattern.search(text):
        parts = pattern.split(text)
    else:
        parts = text.splitlines()
    items = []
    for part in parts:
        item = _WS_RE.sub(" ", part).strip().rstrip(".;,").strip()
        if item:
            items.append(item)
    return items


def extract_queries(note: ClinicalNote, rules: ExtractionRules | None = None) -> list[DiagnosisQuery]:
    """One query per diagnosis-list item, in document order."""
    rules = rules or ExtractionRules()
    pattern = re.compile(rules.item_pattern, re.MULTILINE)
    queries: list[DiagnosisQuery] = []
    found = False
    for name, text in note.sections.items():
        if normalize_section_name(name) not in rules.sections:
            continue
        found = True
        for item in _split_items(text, pattern):
            ordinal = len(queries)
            queries.append(DiagnosisQuery(f"{note.note_id}:q{ordinal}", note.note_id, item, ordinal))
    if not found:
        logger.warning("note %s has no diagnosis section (looked for %s)", note.note_id, ", ".join(rules.sections))
    return queries
