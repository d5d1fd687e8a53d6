"""Dictionary-based mention recognition and entity linking against a KnowledgeBase."""
from __future__ import annotations

from dataclasses import dataclass

from .corpus import DiagnosisQuery, Sentence
from .kb import KnowledgeBase
from .text import token_spans


@dataclass(frozen=True)
class EntityMention:
    note_id: str
    sentence: Sentence
    char_span: tuple[int, int]
    surface: str

    @property
    def normalized(self) -> str:
        return " ".join(tok for _, _, tok in token_spans(self.surface))


@dataclass(frozen=True)
class LinkedEntity:
    mention: EntityMention
    concept_id: str
    semantic_type: str


def recognize(sentence: Sentence, kb: KnowledgeBase) -> list[EntityMention]:
    """Greedy longest match of KB surface forms over the sentence tokens."""
    tokens = token_spans(sentence.text)
    longest = kb.max_surface_tokens
    mentions = []
    i = 0
    while i < len(tokens):
        hit = 0
        for n in range(min(longest, len(tokens) - i), 0, -1):
            key = " ".join(tok for _, _, tok in tokens[i:i + n])
            if key in kb.surface_index:
                hit = n
                break
        if hit:
            start, end = tokens[i][0], tokens[i + hit - 1][1]
            mentions.append(EntityMention(sentence.note_id, sentence, (start, end), sentence.text[start:end]))
            i += hit
        else:
            i += 1
    return mentions


def link(mention: EntityMention, kb: KnowledgeBase) -> LinkedEntity | None:
    candidates = kb.lookup_surface(mention.surface)
    if not candidates:
        return None
    cid = candidates[0]
    return LinkedEntity(mention, cid, kb.concepts[cid].semantic_type)


def link_sentence(sentence: Sentence, kb: KnowledgeBase) -> list[LinkedEntity]:
    out = []
    for m in recognize(sentence, kb):
        linked = link(m, kb)
        if linked is not None:
            out.append(linked)
    return out


def link_sentences(sentences, kb: KnowledgeBase) -> list[LinkedEntity]:
    return [le for s in sentences for le in link_sentence(s, kb)]


def link_query(query: DiagnosisQuery, kb: KnowledgeBase) -> list[LinkedEntity]:
    """Entities of a diagnosis query, the query text treated as one sentence."""
    sentence = Sentence(query.note_id, "QUERY", query.ordinal, query.text)
    return link_sentence(sentence, kb)
