"""BM25 retrieval over ICD code descriptions, plus Recall@k and macro P/R/F1."""
from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .text import tokenize

K1 = 1.2
B = 0.75


class IcdIndexError(ValueError):
    pass


@dataclass(frozen=True)
class IcdCode:
    code: str
    description: str
    version: str = "ICD10"

    def __post_init__(self):
        if not self.code.strip():
            raise IcdIndexError("empty ICD code")
        if not self.description.strip():
            raise IcdIndexError(f"code {self.code} has an empty description")


@dataclass
class IcdIndex:
    postings: dict[str, list[tuple[int, int]]]
    doc_lengths: list[int]
    avg_doc_length: float
    doc_count: int
    codes: list[IcdCode]
    _by_code: dict[str, int] = field(default_factory=dict, repr=False)

    def description(self, code: str) -> str:
        return self.codes[self._by_code[code]].description

    def __contains__(self, code: str) -> bool:
        return code in self._by_code

    def idf(self, token: str) -> float:
        df = len(self.postings.get(token, ()))
        return math.log(1.0 + (self.doc_count - df + 0.5) / (df + 0.5))


@dataclass(frozen=True)
class RetrievalResult:
    ranked: tuple[tuple[str, float], ...]

    @property
    def codes(self) -> list[str]:
        return [c for c, _ in self.ranked]


def build_index(codes: Iterable[IcdCode]) -> IcdIndex:
    codes = list(codes)
    if not codes:
        raise IcdIndexError("cannot index an empty code list")
    by_code: dict[str, int] = {}
    postings: dict[str, list[tuple[int, int]]] = defaultdict(list)
    lengths = []
    for i, c in enumerate(codes):
        if c.code in by_code:
            raise IcdIndexError(f"duplicate code {c.code}")
        by_code[c.code] = i
        toks = tokenize(c.description)
        lengths.append(len(toks))
        for tok, tf in sorted(Counter(toks).items()):
            postings[tok].append((i, tf))
    return IcdIndex(dict(postings), lengths, sum(lengths) / len(lengths), len(codes), codes, by_code)


def search(index: IcdIndex, query: str, k: int = 10) -> RetrievalResult:
    """Top-k BM25; documents sharing no term with the query are dropped."""
    terms = tokenize(query)
    scores: dict[int, float] = defaultdict(float)
    for t in terms:
        plist = index.postings.get(t)
        if not plist:
            continue
        idf = index.idf(t)
        for doc, tf in plist:
            norm = K1 * (1.0 - B + B * index.doc_lengths[doc] / index.avg_doc_length)
            scores[doc] += idf * tf * (K1 + 1.0) / (tf + norm)
    ranked = sorted(((index.codes[d].code, s) for d, s in scores.items()), key=lambda cs: (-cs[1], cs[0]))
    return RetrievalResult(tuple(ranked[:k]))


def recall_at_k(results: Mapping[str, RetrievalResult], gold: Mapping[str, str], k: int) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    if not gold:
        return 0.0
    hits = sum(1 for qid, code in gold.items() if code in results.get(qid, RetrievalResult(())).codes[:k])
    return hits / len(gold)


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def macro_prf(predicted: Mapping[str, set], gold: Mapping[str, set]) -> tuple[float, float, float]:
    """Per-label P/R/F1 over all queries, unweighted mean over labels; 0/0 counts as 0."""
    qids = set(predicted) | set(gold)
    labels = set().union(*predicted.values(), *gold.values()) if qids else set()
    if not labels:
        return 0.0, 0.0, 0.0
    tp: Counter = Counter()
    fp: Counter = Counter()
    fn: Counter = Counter()
    for q in qids:
        p, g = set(predicted.get(q, ())), set(gold.get(q, ()))
        for lab in p & g:
            tp[lab] += 1
        for lab in p - g:
            fp[lab] += 1
        for lab in g - p:
            fn[lab] += 1
    ps, rs, fs = [], [], []
    for lab in sorted(labels, key=str):
        prec = _ratio(tp[lab], tp[lab] + fp[lab])
        rec = _ratio(tp[lab], tp[lab] + fn[lab])
        ps.append(prec)
        rs.append(rec)
        fs.append(_ratio(2 * prec * rec, prec + rec))
    n = len(labels)
    return sum(ps) / n, sum(rs) / n, sum(fs) / n


def load_icd_tsv(path: str | Path, version: str = "ICD10") -> list[IcdCode]:
    codes = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t", 1)
            if len(parts) != 2:
                raise IcdIndexError(f"{path}: line {lineno}: expected 'code<TAB>description'")
            try:
                codes.append(IcdCode(parts[0].strip(), parts[1].strip(), version))
            except IcdIndexError as exc:
                raise IcdIndexError(f"{path}: line {lineno}: {exc}") from exc
    return codes


def dump_icd_tsv(codes: Iterable[IcdCode], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for c in codes:
            fh.write(f"{c.code}\t{c.description}\n")
