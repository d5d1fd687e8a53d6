"""Note -> queries -> contextual graphs -> labels, shared by the CLI and the harnesses."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import ClinicalNote, DiagnosisQuery, ExtractionRules, extract_queries, split_sentences
from .ctxgraph import ContextualGraph, augment_with_external, build_graph, compute_external_keywords
from .ir import IcdIndex
from .kb import DEFAULT_MAX_HOPS, KnowledgeBase
from .nel import link_query, link_sentences
from .supervision import LabeledGraphSet, align_queries_to_codes, label_graph
from .text import tokenize

logger = logging.getLogger(__name__)


@dataclass
class QueryGraph:
    query: DiagnosisQuery
    graph: ContextualGraph


def corpus_vocabulary(notes: Iterable[ClinicalNote]) -> set[str]:
    return {tok for note in notes for text in note.sections.values() for tok in tokenize(text)}


def external_keywords(notes: Sequence[ClinicalNote], index: IcdIndex, top_k: int) -> list[str]:
    return compute_external_keywords([c.description for c in index.codes], corpus_vocabulary(notes), top_k)


def note_graphs(
    note: ClinicalNote,
    kb: KnowledgeBase,
    rules: ExtractionRules | None = None,
    max_hops: int = DEFAULT_MAX_HOPS,
) -> list[QueryGraph]:
    note_entities = link_sentences(split_sentences(note), kb)
    out = []
    for q in extract_queries(note, rules):
        g = build_graph(q, link_query(q, kb), note_entities, kb, max_hops)
        if g.degenerate:
            logger.info("degenerate graph for %s (%r): no linked query entity", q.query_id, q.text)
        out.append(QueryGraph(q, g))
    return out


def corpus_graphs(
    notes: Sequence[ClinicalNote],
    kb: KnowledgeBase,
    rules: ExtractionRules | None = None,
    max_hops: int = DEFAULT_MAX_HOPS,
) -> list[QueryGraph]:
    return [qg for note in sorted(notes, key=lambda n: n.note_id) for qg in note_graphs(note, kb, rules, max_hops)]


def label_corpus(
    notes: Sequence[ClinicalNote],
    items: Sequence[QueryGraph],
    index: IcdIndex,
    t: float,
    keywords: Sequence[str] = (),
    include_plain: bool = True,
) -> LabeledGraphSet:
    """Align every query to a gold code and label its graph.

    With external keywords the augmented graph is labelled too, and with
    ``include_plain`` the un-augmented one is kept alongside it so a model
    trained on the set serves both query variants.  Degenerate graphs and
    unaligned queries are left out.
    """
    by_note: dict[str, list[QueryGraph]] = {}
    for qg in items:
        by_note.setdefault(qg.query.note_id, []).append(qg)
    alignment: dict[str, str] = {}
    graphs = []
    for note in sorted(notes, key=lambda n: n.note_id):
        group = by_note.get(note.note_id, [])
        aligned = align_queries_to_codes([qg.query for qg in group], note.gold_codes, index)
        for qg in group:
            code = aligned.get(qg.query.query_id)
            if code is None or qg.graph.degenerate:
                continue
            alignment[qg.query.query_id] = code
            desc = index.description(code)
            if include_plain or not keywords:
                graphs.append(label_graph(qg.graph, desc, t))
            if keywords:
                graphs.append(label_graph(augment_with_external(qg.graph, keywords), desc, t))
    return LabeledGraphSet(graphs, t, alignment)
