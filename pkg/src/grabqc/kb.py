"""In-memory medical knowledge base with bounded simple-path queries."""
from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .text import normalize_surface

DEFAULT_MAX_HOPS = 3


class KBError(ValueError):
    pass


@dataclass(frozen=True)
class Concept:
    concept_id: str
    canonical_name: str
    synonyms: tuple[str, ...] = ()
    semantic_type: str = ""

    def surfaces(self) -> list[str]:
        return [normalize_surface(self.canonical_name), *self.synonyms]


def make_concept(concept_id: str, name: str, synonyms: Iterable[str] = (), semantic_type: str = "") -> Concept:
    """Build a Concept with synonyms normalized, deduplicated and stripped of the canonical name."""
    if not concept_id:
        raise KBError("empty concept id")
    if not normalize_surface(name):
        raise KBError(f"concept {concept_id!r} has an empty canonical name")
    canonical = normalize_surface(name)
    syns: list[str] = []
    for s in synonyms:
        norm = normalize_surface(s)
        if norm and norm != canonical and norm not in syns:
            syns.append(norm)
    return Concept(concept_id, name.strip(), tuple(syns), semantic_type)


@dataclass
class KnowledgeBase:
    concepts: dict[str, Concept]
    edges: set[tuple[str, str, str]] = field(default_factory=set)
    surface_index: dict[str, list[str]] = field(default_factory=dict)
    _neighbors: dict[str, list[str]] = field(default_factory=dict, repr=False)

    @classmethod
    def build(cls, concepts: Iterable[Concept], edges: Iterable[tuple[str, str, str]] = ()) -> "KnowledgeBase":
        by_id: dict[str, Concept] = {}
        for c in concepts:
            if c.concept_id in by_id:
                raise KBError(f"duplicate concept id {c.concept_id!r}")
            by_id[c.concept_id] = c
        edge_set: set[tuple[str, str, str]] = set()
        adj: dict[str, set[str]] = defaultdict(set)
        for src, dst, rel in edges:
            for end in (src, dst):
                if end not in by_id:
                    raise KBError(f"edge ({src}, {dst}, {rel}) references unknown concept {end!r}")
            if src == dst:
                raise KBError(f"self-loop edge on {src!r}")
            a, b = sorted((src, dst))
            edge_set.add((a, b, rel))
            adj[a].add(b)
            adj[b].add(a)
        index: dict[str, list[str]] = defaultdict(list)
        for c in by_id.values():
            for s in c.surfaces():
                if c.concept_id not in index[s]:
                    index[s].append(c.concept_id)
        kb = cls(by_id, edge_set, {})
        kb.surface_index = {s: kb._order_candidates(s, ids) for s, ids in index.items()}
        kb._neighbors = {cid: sorted(adj.get(cid, ())) for cid in by_id}
        return kb

    def _order_candidates(self, surface: str, ids: Iterable[str]) -> list[str]:
        def key(cid):
            exact = normalize_surface(self.concepts[cid].canonical_name) == surface
            return (not exact, cid)

        return sorted(ids, key=key)

    @property
    def max_surface_tokens(self) -> int:
        return max((len(s.split()) for s in self.surface_index), default=0)

    def neighbors(self, concept_id: str) -> list[str]:
        return self._neighbors[concept_id]

    def lookup_surface(self, surface: str) -> list[str]:
        """Candidate concept ids, canonical-name matches first then by id."""
        return list(self.surface_index.get(normalize_surface(surface), ()))

    def simple_path_exists(self, src: str, dst: str, max_hops: int = DEFAULT_MAX_HOPS) -> tuple[bool, list[str] | None]:
        """Depth-limited DFS over simple paths; neighbours visited in id order."""
        for cid in (src, dst):
            if cid not in self.concepts:
                raise KBError(f"unknown concept id {cid!r}")
        if max_hops < 1:
            raise ValueError("max_hops must be >= 1")
        if src == dst:
            return True, [src]

        path = [src]
        on_path = {src}

        def dfs(node: str) -> bool:
            if len(path) - 1 >= max_hops:
                return False
            for nxt in self._neighbors[node]:
                if nxt in on_path:
                    continue
                path.append(nxt)
                if nxt == dst:
                    return True
                on_path.add(nxt)
                if dfs(nxt):
                    return True
                on_path.discard(nxt)
                path.pop()
            return False

        if dfs(src):
            return True, list(path)
        return False, None

    def to_records(self) -> list[dict]:
        out = [
            {"kind": "concept", "id": c.concept_id, "name": c.canonical_name,
             "synonyms": list(c.synonyms), "type": c.semantic_type}
            for c in sorted(self.concepts.values(), key=lambda c: c.concept_id)
        ]
        out += [{"kind": "edge", "src": a, "dst": b, "rel": r} for a, b, r in sorted(self.edges)]
        return out


def load_kb(path: str | Path, relations: Iterable[str] | None = None) -> KnowledgeBase:
    """Load KB JSONL. ``relations`` optionally restricts which edge labels are kept."""
    allowed = set(relations) if relations is not None else None
    concepts: list[Concept] = []
    edges: list[tuple[str, str, str]] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise KBError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            kind = rec.get("kind")
            if kind == "concept":
                cid = rec.get("id")
                if cid in seen:
                    raise KBError(f"line {lineno}: duplicate concept id {cid!r}")
                seen.add(cid)
                try:
                    concepts.append(make_concept(cid, rec.get("name", ""), rec.get("synonyms", []), rec.get("type", "")))
                except KBError as exc:
                    raise KBError(f"line {lineno}: {exc}") from exc
            elif kind == "edge":
                src, dst, rel = rec.get("src"), rec.get("dst"), rec.get("rel", "")
                if src not in seen or dst not in seen:
                    raise KBError(f"line {lineno}: dangling edge ({src}, {dst}, {rel})")
                if allowed is None or rel in allowed:
                    edges.append((src, dst, rel))
            else:
                raise KBError(f"line {lineno}: unknown record kind {kind!r}")
    try:
        return KnowledgeBase.build(concepts, edges)
    except KBError as exc:
        raise KBError(f"{path}: {exc}") from exc


def dump_kb(kb: KnowledgeBase, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in kb.to_records():
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
