"""Synthetic fixture corpora.

The disambiguation corpus mimics emergency-room notes: every diagnosis in
the list omits laterality, which only the narrative supplies ("pain in the
left knee").  Code descriptions differ only in that laterality word, so the
bare diagnosis ties across right/left/unspecified codes, while distractor
sentences about other body sites add KB-reachable but irrelevant entities.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from .corpus import ClinicalNote, dump_corpus
from .ir import IcdCode, dump_icd_tsv
from .kb import Concept, KnowledgeBase, dump_kb, make_concept

PARTS = ("knee", "hip", "shoulder", "ankle", "wrist", "elbow")
LATERALITIES = ("unspecified", "right", "left")

# name -> (description template, query templates, narrative verb phrases)
CONDITIONS = {
    "pain": (
        "Pain in {lat} {part}",
        ("Acute {part} pain", "{Part} pain", "Pain of {part}"),
        ("reports pain in the {side} {part}", "complains of pain over the {side} {part}",
         "has had pain in the {side} {part} since the fall"),
    ),
    "sprain": (
        "Sprain of {lat} {part}",
        ("Sprain of {part}", "{Part} sprain"),
        ("sprained the {side} {part} while playing football", "twisted and sprained the {side} {part}",
         "has a sprain of the {side} {part}"),
    ),
    "contusion": (
        "Contusion of {lat} {part}",
        ("Contusion of {part}", "{Part} contusion"),
        ("has a contusion over the {side} {part}", "struck the {side} {part} causing a contusion",
         "shows bruising of the {side} {part}"),
    ),
    "fracture": (
        "Fracture of {lat} {part}",
        ("Closed fracture of {part}", "{Part} fracture"),
        ("has a fracture of the {side} {part} on imaging", "fractured the {side} {part} in a fall",
         "has a displaced fracture involving the {side} {part}"),
    ),
}

SYNONYMS = {
    "pain": ["ache", "aching"],
    "sprain": ["sprained"],
    "contusion": ["bruising", "bruise"],
    "fracture": ["fractured", "broken"],
    "left": ["left sided"],
    "right": ["right sided"],
}

DISTRACTORS = (
    "Mild swelling of the {side} {part} was also noted.",
    "Old surgery on the {side} {part} is documented.",
    "The {side} {part} has full range of motion.",
    "Exam of the {side} {part} is unremarkable.",
)
UNLATERALIZED = (
    "Patient {phrase}.",
    "The patient {phrase} today.",
)
FILLER = (
    "Vital signs are stable.",
    "No fever or chills.",
    "Takes aspirin daily.",
    "Denies chest pain.",
    "Ambulating with assistance.",
)

EXTRA_CODES = (
    ("I10", "Essential primary hypertension", "Hypertension"),
    ("E11.9", "Type 2 diabetes mellitus without complications", "Type 2 diabetes"),
    ("J45.909", "Unspecified asthma uncomplicated", "Asthma"),
)


def code_for(cond: str, part: str, lat: str) -> str:
    ci = list(CONDITIONS).index(cond)
    pi = PARTS.index(part)
    li = LATERALITIES.index(lat)
    return f"T{ci + 1}{pi + 1:02d}.{li}"


def disambiguation_codes() -> list[IcdCode]:
    codes = []
    for cond, (template, _, _) in CONDITIONS.items():
        for part in PARTS:
            for lat in LATERALITIES:
                codes.append(IcdCode(code_for(cond, part, lat), template.format(lat=lat, part=part)))
    codes += [IcdCode(c, d) for c, d, _ in EXTRA_CODES]
    return sorted(codes, key=lambda c: c.code)


def disambiguation_kb() -> KnowledgeBase:
    concepts: list[Concept] = []
    edges = []
    for part in PARTS:
        concepts.append(make_concept(f"BP:{part}", part, [], "body part"))
    for cond in CONDITIONS:
        concepts.append(make_concept(f"CN:{cond}", cond, SYNONYMS.get(cond, []), "condition"))
        for part in PARTS:
            edges.append((f"CN:{cond}", f"BP:{part}", "finding_site"))
    for lat in ("left", "right"):
        concepts.append(make_concept(f"LT:{lat}", lat, SYNONYMS.get(lat, []), "laterality"))
        for part in PARTS:
            edges.append((f"LT:{lat}", f"BP:{part}", "laterality"))
    concepts.append(make_concept("CN:swelling", "swelling", ["swollen"], "symptom"))
    for part in PARTS:
        edges.append(("CN:swelling", f"BP:{part}", "finding_site"))
    # isolated concepts: linked in notes but never reachable from a diagnosis
    concepts.append(make_concept("CN:hypertension", "hypertension", ["high blood pressure"], "condition"))
    concepts.append(make_concept("CN:diabetes", "type 2 diabetes", ["diabetes"], "condition"))
    concepts.append(make_concept("CN:asthma", "asthma", [], "condition"))
    concepts.append(make_concept("DR:aspirin", "aspirin", [], "drug"))
    concepts.append(make_concept("CN:fever", "fever", [], "symptom"))
    return KnowledgeBase.build(concepts, edges)


@dataclass
class _Dx:
    cond: str
    part: str
    lat: str


def _cap(s: str) -> str:
    return s[:1].upper() + s[1:]


def make_disambiguation_notes(n_notes: int = 150, seed: int = 13) -> list[ClinicalNote]:
    rng = random.Random(seed)
    notes = []
    for i in range(n_notes):
        n_dx = rng.choice((1, 1, 2, 2, 2))
        parts = rng.sample(PARTS, n_dx + 1)
        lats = rng.sample(("right", "left"), 2)
        dxs = []
        for j in range(n_dx):
            lat = "unspecified" if rng.random() < 0.1 else lats[j]
            dxs.append(_Dx(rng.choice(list(CONDITIONS)), parts[j], lat))
        narrative = []
        for dx in dxs:
            _, _, phrases = CONDITIONS[dx.cond]
            if dx.lat == "unspecified":
                phrase = rng.choice(phrases).replace("the {side} ", "the ").format(part=dx.part)
                narrative.append(rng.choice(UNLATERALIZED).format(phrase=phrase))
            else:
                phrase = rng.choice(phrases).format(side=dx.lat, part=dx.part)
                narrative.append(_cap(rng.choice(("patient ", "she ", "he ")) + phrase) + ".")
        if rng.random() < 0.7:
            used = {dx.lat for dx in dxs}
            side = rng.choice([s for s in ("right", "left") if s not in used] or ["right", "left"])
            narrative.insert(rng.randrange(len(narrative) + 1),
                             rng.choice(DISTRACTORS).format(side=side, part=parts[-1]))
        narrative.append(rng.choice(FILLER))
        extra = None
        if rng.random() < 0.15:
            extra = rng.choice(EXTRA_CODES)
        items = []
        for dx in dxs:
            _, queries, _ = CONDITIONS[dx.cond]
            items.append(rng.choice(queries).format(part=dx.part, Part=_cap(dx.part)))
        gold = [code_for(dx.cond, dx.part, dx.lat) for dx in dxs]
        if extra:
            items.append(extra[2])
            gold.append(extra[0])
        sections = {
            "CHIEF COMPLAINT": rng.choice(("Fall at home.", "Injury.", "Pain after a fall.", "Evaluation after accident.")),
            "HISTORY OF PRESENT ILLNESS": " ".join(narrative),
            "DIAGNOSIS": "\n".join(f"{k + 1}. {item}" for k, item in enumerate(items)),
        }
        notes.append(ClinicalNote(f"N{i:04d}", sections, frozenset(gold)))
    return notes


def write_disambiguation_fixture(out_dir: str | Path, n_notes: int = 150, seed: int = 13) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    notes = make_disambiguation_notes(n_notes, seed)
    codes = disambiguation_codes()
    dump_corpus(notes, out / "corpus.jsonl")
    dump_kb(disambiguation_kb(), out / "kb.jsonl")
    dump_icd_tsv(codes, out / "icd.tsv")
    summary = {"notes": len(notes), "codes": len(codes), "seed": seed}
    (out / "fixture.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return summary
