"""Shared tokenizer.

Every component that compares words (entity matching, node words, Jaccard
labelling, the retrieval index) goes through these two functions so the
vocabularies line up.
"""
from __future__ import annotations

import re

_TOKEN_RE = re.compile(r"[^\W_]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on whitespace and punctuation."""
    return _TOKEN_RE.findall(text.lower())


def token_spans(text: str) -> list[tuple[int, int, str]]:
    """Tokens with their character offsets into ``text`` (token is lowercased)."""
    return [(m.start(), m.end(), m.group().lower()) for m in _TOKEN_RE.finditer(text)]


def normalize_surface(text: str) -> str:
    return " ".join(tokenize(text))
