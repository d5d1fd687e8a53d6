import math

import pytest
from hypothesis import given, strategies as st

from grabqc.ir import (
    IcdCode,
    IcdIndexError,
    RetrievalResult,
    build_index,
    dump_icd_tsv,
    load_icd_tsv,
    macro_prf,
    recall_at_k,
    search,
)


def test_index_counts():
    idx = build_index([IcdCode("X1", "pain in knee")])
    assert idx.doc_count == 1 and idx.avg_doc_length == 3


def test_index_rejects_empty_and_duplicates():
    with pytest.raises(IcdIndexError):
        build_index([])
    with pytest.raises(IcdIndexError):
        build_index([IcdCode("A", "x"), IcdCode("A", "y")])


def test_shared_token_posting():
    idx = build_index([IcdCode("A", "knee pain"), IcdCode("B", "hip pain")])
    assert idx.postings["pain"] == [(0, 1), (1, 1)]


def test_single_doc_hand_computed():
    idx = build_index([IcdCode("M25.561", "pain in right knee")])
    (code, score), = search(idx, "knee pain").ranked
    # N=1, df=1: idf = ln(1 + 0.5/1.5); len == avglen so each term contributes idf * 2.2 / 2.2
    assert code == "M25.561"
    assert score == pytest.approx(2 * math.log(4 / 3), abs=1e-12)


def test_no_match_and_empty_query():
    idx = build_index([IcdCode("A", "knee pain")])
    assert search(idx, "asthma").ranked == ()
    assert search(idx, "...").ranked == ()


def test_ties_by_code():
    idx = build_index([IcdCode("B", "knee pain"), IcdCode("A", "knee pain")])
    assert search(idx, "knee").codes == ["A", "B"]


def test_top_k_truncates():
    idx = build_index([IcdCode(f"C{i}", "pain") for i in range(5)])
    assert len(search(idx, "pain", 3).ranked) == 3


def test_recall_examples():
    res = {"q1": RetrievalResult((("A", 1.0),)), "q2": RetrievalResult((("B", 1.0),))}
    assert recall_at_k(res, {"q1": "A", "q2": "B"}, 1) == 1.0
    assert recall_at_k(res, {"q1": "Z", "q2": "Z"}, 5) == 0.0
    ranked = lambda gold_rank: RetrievalResult(tuple((("G" if r == gold_rank else f"X{r}"), 1.0) for r in range(1, 11)))
    assert recall_at_k({"a": ranked(3), "b": ranked(10)}, {"a": "G", "b": "G"}, 8) == 0.5
    with pytest.raises(ValueError):
        recall_at_k(res, {"q1": "A"}, 0)


def test_macro_prf_examples():
    gold = {"q1": {"A"}, "q2": {"B"}}
    assert macro_prf(gold, gold) == (1.0, 1.0, 1.0)
    assert macro_prf({"q1": {"C"}, "q2": {"C"}}, gold) == (0.0, 0.0, 0.0)
    assert macro_prf({"q1": {"A"}, "q2": set()}, gold) == (0.5, 0.5, 0.5)


def test_icd_tsv_round_trip(tmp_path):
    codes = [IcdCode("A1", "knee pain", "ICD10"), IcdCode("B2", "hip pain", "ICD10")]
    path = tmp_path / "icd.tsv"
    dump_icd_tsv(codes, path)
    assert load_icd_tsv(path) == codes


@given(st.lists(st.integers(1, 12), min_size=1, max_size=8))
def test_recall_monotone_in_k(ranks):
    res = {f"q{i}": RetrievalResult(tuple((("G" if j == r else f"X{j}"), 1.0) for j in range(1, 13))) for i, r in enumerate(ranks)}
    gold = {f"q{i}": "G" for i in range(len(ranks))}
    values = [recall_at_k(res, gold, k) for k in range(1, 14)]
    assert values == sorted(values)
    assert values[-1] == 1.0
