"""Per-query contextual graphs built from linked entities and KB paths."""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import DiagnosisQuery
from .kb import DEFAULT_MAX_HOPS, KnowledgeBase
from .nel import LinkedEntity
from .text import tokenize

QUERY_ENTITY = "query-entity"
CONTEXT_ENTITY = "context-entity"
EXTERNAL_KEYWORD = "external-keyword"
ORIGINS = (QUERY_ENTITY, CONTEXT_ENTITY, EXTERNAL_KEYWORD)

DEFAULT_TOP_K_EXTERNAL = 4


@dataclass(frozen=True)
class GraphNode:
    node_id: int
    words: tuple[str, ...]
    origin: str
    source_concept: str | None = None
    source_sentence: tuple[str, int] | None = None
    # surface text as written; keeps the original casing for the contextual query
    text: str = ""

    def __post_init__(self):
        if not self.words:
            raise ValueError("graph node needs at least one word")
        if self.origin not in ORIGINS:
            raise ValueError(f"unknown node origin {self.origin!r}")
        if (self.origin == EXTERNAL_KEYWORD) != (self.source_concept is None):
            raise ValueError("source_concept must be absent exactly for external-keyword nodes")
        if not self.text:
            object.__setattr__(self, "text", " ".join(self.words))


@dataclass
class ContextualGraph:
    query_id: str
    nodes: tuple[GraphNode, ...]
    adjacency: np.ndarray
    labels: np.ndarray | None = None
    query_text: str = ""
    note_id: str = ""

    def __post_init__(self):
        self.nodes = tuple(self.nodes)
        self.adjacency = np.asarray(self.adjacency, dtype=np.int64).reshape(len(self.nodes), len(self.nodes))
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
        check_graph(self)

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def degenerate(self) -> bool:
        return self.n == 0

    @property
    def edges(self) -> list[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.adjacency, 1))
        return list(zip(i.tolist(), j.tolist()))

    def query_entity_ids(self) -> list[int]:
        return [nd.node_id for nd in self.nodes if nd.origin == QUERY_ENTITY]

    def to_json(self) -> dict:
        out = {
            "query_id": self.query_id,
            "note_id": self.note_id,
            "query": self.query_text,
            "nodes": [
                {"id": nd.node_id, "words": list(nd.words), "origin": nd.origin,
                 "text": nd.text, "concept": nd.source_concept,
                 "sentence": list(nd.source_sentence) if nd.source_sentence else None}
                for nd in self.nodes
            ],
            "edges": [list(e) for e in self.edges],
        }
        if self.labels is not None:
            out["labels"] = self.labels.tolist()
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "ContextualGraph":
        nodes = []
        for raw in obj["nodes"]:
            sent = raw.get("sentence")
            nodes.append(GraphNode(
                raw["id"], tuple(raw["words"]), raw["origin"], raw.get("concept"),
                (sent[0], sent[1]) if sent else None, raw.get("text", ""),
            ))
        n = len(nodes)
        adj = np.zeros((n, n), dtype=np.int64)
        for i, j in obj.get("edges", []):
            adj[i, j] = adj[j, i] = 1
        labels = obj.get("labels")
        return cls(obj["query_id"], tuple(nodes), adj, None if labels is None else np.array(labels),
                   obj.get("query", ""), obj.get("note_id", ""))


def check_graph(g: ContextualGraph) -> None:
    a = g.adjacency
    if a.shape != (g.n, g.n):
        raise ValueError(f"adjacency shape {a.shape} does not match {g.n} nodes")
    if g.n:
        if not np.array_equal(a, a.T):
            raise ValueError("adjacency is not symmetric")
        if np.any(np.diag(a) != 0):
            raise ValueError("adjacency has self loops")
        if np.any((a != 0) & (a != 1)):
            raise ValueError("adjacency entries must be 0/1")
    for i, nd in enumerate(g.nodes):
        if nd.node_id != i:
            raise ValueError("node ids must be 0..N-1 in order")
    if g.labels is not None and len(g.labels) != g.n:
        raise ValueError("labels length differs from node count")


def build_graph(
    query: DiagnosisQuery,
    p_i: Sequence[LinkedEntity],
    note_entities: Sequence[LinkedEntity],
    kb: KnowledgeBase,
    max_hops: int = DEFAULT_MAX_HOPS,
) -> ContextualGraph:
    """Query-entity nodes, KB-path matched note entities, and co-sentence edges."""
    nodes: list[GraphNode] = []
    node_of: dict[str, int] = {}

    def add(le: LinkedEntity, origin: str, with_sentence: bool) -> None:
        words = tuple(tokenize(le.mention.surface))
        s = le.mention.sentence
        nodes.append(GraphNode(len(nodes), words, origin, le.concept_id,
                               (s.section, s.index) if with_sentence else None, le.mention.surface))
        node_of[le.concept_id] = len(nodes) - 1

    for le in p_i:
        if le.concept_id not in node_of:
            add(le, QUERY_ENTITY, False)
    query_concepts = list(node_of)
    if not query_concepts:
        return ContextualGraph(query.query_id, (), np.zeros((0, 0)), None, query.text, query.note_id)

    path_cache: dict[tuple[str, str], bool] = {}
    matched_pairs: set[tuple[str, str]] = set()
    for le in note_entities:
        cid = le.concept_id
        hit = False
        for p in query_concepts:
            if (p, cid) not in path_cache:
                path_cache[(p, cid)] = kb.simple_path_exists(p, cid, max_hops)[0]
            if path_cache[(p, cid)]:
                matched_pairs.add((p, cid))
                hit = True
        if hit and cid not in node_of:
            add(le, CONTEXT_ENTITY, True)

    n = len(nodes)
    adj = np.zeros((n, n), dtype=np.int64)

    def connect(i: int, j: int) -> None:
        if i != j:
            adj[i, j] = adj[j, i] = 1

    for p, cid in matched_pairs:
        connect(node_of[p], node_of[cid])

    by_sentence: dict[tuple, set[int]] = {}
    for le in note_entities:
        s = le.mention.sentence
        if le.concept_id in node_of and any((p, le.concept_id) in matched_pairs for p in query_concepts):
            by_sentence.setdefault((s.note_id, s.section, s.index), set()).add(node_of[le.concept_id])
    for members in by_sentence.values():
        ordered = sorted(members)
        for a_i, a in enumerate(ordered):
            for b in ordered[a_i + 1:]:
                connect(a, b)

    return ContextualGraph(query.query_id, tuple(nodes), adj, None, query.text, query.note_id)


def compute_external_keywords(
    icd_descriptions: Iterable[str],
    corpus_vocabulary: set[str],
    top_k: int = DEFAULT_TOP_K_EXTERNAL,
) -> list[str]:
    """Description tokens never seen in the corpus, most frequent first."""
    if top_k <= 0:
        return []
    counts = Counter(tok for d in icd_descriptions for tok in tokenize(d) if tok not in corpus_vocabulary)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [tok for tok, _ in ranked[:top_k]]


def augment_with_external(graph: ContextualGraph, keywords: Sequence[str]) -> ContextualGraph:
    """Attach one node per keyword, linked to every query-entity node."""
    if graph.labels is not None:
        raise ValueError("augment graphs before labelling them")
    q_ids = graph.query_entity_ids()
    present = {nd.words[0] for nd in graph.nodes if nd.origin == EXTERNAL_KEYWORD}
    new = []
    for kw in keywords:
        if kw in present:
            continue
        present.add(kw)
        new.append(kw)
    if not new or not q_ids:
        return graph
    n0 = graph.n
    nodes = list(graph.nodes) + [GraphNode(n0 + i, (kw,), EXTERNAL_KEYWORD) for i, kw in enumerate(new)]
    adj = np.zeros((len(nodes), len(nodes)), dtype=np.int64)
    adj[:n0, :n0] = graph.adjacency
    for i in range(n0, len(nodes)):
        for q in q_ids:
            adj[i, q] = adj[q, i] = 1
    return replace(graph, nodes=tuple(nodes), adjacency=adj)


def dump_graphs(graphs: Iterable[ContextualGraph], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for g in graphs:
            fh.write(json.dumps(g.to_json(), sort_keys=True) + "\n")


def load_graphs(path: str | Path) -> list[ContextualGraph]:
    with open(path, encoding="utf-8") as fh:
        return [ContextualGraph.from_json(json.loads(line)) for line in fh if line.strip()]
