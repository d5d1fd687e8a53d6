"""Distant-supervision node labels from ICD code descriptions."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .corpus import DiagnosisQuery
from .ctxgraph import ContextualGraph
from .ir import IcdIndex
from .text import tokenize

DEFAULT_LABEL_THRESHOLD = 0.15


@dataclass
class LabeledGraphSet:
    graphs: list[ContextualGraph]
    threshold_used: float
    alignment: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for g in self.graphs:
            if g.labels is None:
                raise ValueError(f"graph {g.query_id} is unlabelled")


def jaccard(a: Iterable[str], b: Iterable[str]) -> float:
    a, b = set(a), set(b)
    union = a | b
    if not union:
        return 0.0
    return len(a & b) / len(union)


def align_queries_to_codes(
    queries: Sequence[DiagnosisQuery],
    gold_codes: Iterable[str],
    icd_index: IcdIndex,
) -> dict[str, str]:
    """Map each query to the gold code whose description it overlaps most.

    Ties go to the smallest code; queries with zero overlap against every
    gold description stay unaligned.
    """
    codes = sorted(c for c in set(gold_codes) if c in icd_index)
    desc_tokens = {c: set(tokenize(icd_index.description(c))) for c in codes}
    out: dict[str, str] = {}
    for q in queries:
        qt = set(tokenize(q.text))
        best, best_score = None, 0.0
        for c in codes:
            s = jaccard(qt, desc_tokens[c])
            if s > best_score:
                best, best_score = c, s
        if best is not None:
            out[q.query_id] = best
    return out


def label_graph(graph: ContextualGraph, code_description: str, t: float = DEFAULT_LABEL_THRESHOLD) -> ContextualGraph:
    if not 0.0 <= t <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    desc = set(tokenize(code_description))
    labels = np.array([1 if jaccard(nd.words, desc) > t else 0 for nd in graph.nodes], dtype=np.int64)
    return replace(graph, labels=labels)
