"""Experiment harnesses: node detection, query-variant comparison and layer sweeps."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .ctxgraph import ContextualGraph, augment_with_external
from .ir import IcdIndex, RetrievalResult, macro_prf, recall_at_k, search
from .model import EmbeddingTable, ModelParams, TrainConfig, binary_macro_prf, contextual_query
from .model import predict_proba, predict_relevant, train
from .pipeline import QueryGraph

SPLITS = ("train", "dev", "test")
DEFAULT_RATIOS = (0.7, 0.15, 0.15)
BASE_VARIANTS = ("normal", "contextual-graph", "grabqc")
ALL_VARIANTS = BASE_VARIANTS + tuple(f"{v}+external" for v in BASE_VARIANTS)
DEFAULT_KS = (1, 8, 15)


def split_of(note_id: str, seed: int, ratios: Sequence[float] = DEFAULT_RATIOS) -> str:
    """Deterministic split assignment from (note_id, seed) alone."""
    if len(ratios) != 3 or any(r < 0 for r in ratios) or not sum(ratios) > 0:
        raise ValueError("need three non-negative split ratios")
    digest = hashlib.sha256(f"{seed}:{note_id}".encode("utf-8")).digest()
    u = int.from_bytes(digest[:8], "big") / 2.0**64
    total = float(sum(ratios))
    edge = 0.0
    for name, r in zip(SPLITS, ratios):
        edge += r / total
        if u < edge:
            return name
    return SPLITS[-1]


def split_notes(note_ids: Iterable[str], seed: int, ratios: Sequence[float] = DEFAULT_RATIOS) -> dict[str, set[str]]:
    out: dict[str, set[str]] = {s: set() for s in SPLITS}
    for nid in note_ids:
        out[split_of(nid, seed, ratios)].add(nid)
    return out


@dataclass
class ExperimentReport:
    setup: str
    config: dict
    metrics: dict = field(default_factory=dict)
    recall_table: list[dict] = field(default_factory=list)
    seed: int = 0
    timestamp: str | None = None

    def to_json(self) -> dict:
        out = asdict(self)
        if self.timestamp is None:
            out.pop("timestamp")
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2) + "\n"

    def to_text(self) -> str:
        lines = [f"setup: {self.setup}", f"seed: {self.seed}"]
        if self.timestamp:
            lines.append(f"timestamp: {self.timestamp}")
        if self.recall_table:
            cols = list(self.recall_table[0])
            width = {c: max(len(c), *(len(_fmt(r[c])) for r in self.recall_table)) for c in cols}
            lines.append("")
            lines.append("  ".join(c.ljust(width[c]) for c in cols))
            for row in self.recall_table:
                lines.append("  ".join(_fmt(row[c]).ljust(width[c]) for c in cols))
        for name, value in sorted(self.metrics.items()):
            lines.append(f"{name}: {_fmt(value)}")
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.4f}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k}: {_fmt(x)}" for k, x in v.items()) + "}"
    return str(v)


def run_node_detection_eval(
    graphs: Sequence[ContextualGraph],
    params: ModelParams,
    emb: EmbeddingTable,
    tau: float | None = None,
) -> tuple[float, float, float]:
    tau = params.tau if tau is None else tau
    ys, preds = [], []
    for g in graphs:
        if g.n == 0:
            continue
        ys.append(g.labels)
        preds.append(predict_relevant(predict_proba(g, emb, params), tau))
    if not ys:
        return 0.0, 0.0, 0.0
    return binary_macro_prf(np.concatenate(ys), np.concatenate(preds))


def variant_query(
    variant: str,
    item: QueryGraph,
    keywords: Sequence[str],
    params: ModelParams | None,
    emb: EmbeddingTable | None,
    tau: float | None = None,
) -> str:
    base, _, ext = variant.partition("+")
    if base not in BASE_VARIANTS or ext not in ("", "external"):
        raise ValueError(f"unknown query variant {variant!r}")
    q = item.query
    graph = augment_with_external(item.graph, keywords) if ext else item.graph
    if base == "normal":
        return " ".join([q.text, *keywords]) if ext else q.text
    if base == "contextual-graph":
        return contextual_query(q.text, graph, [1] * graph.n)
    if params is None or emb is None:
        raise ValueError("grabqc variants need a trained model")
    tau = params.tau if tau is None else tau
    decisions = predict_relevant(predict_proba(graph, emb, params), tau)
    return contextual_query(q.text, graph, decisions)


def run_query_comparison(
    items: Sequence[QueryGraph],
    gold: Mapping[str, str],
    index: IcdIndex,
    keywords: Sequence[str] = (),
    params: ModelParams | None = None,
    emb: EmbeddingTable | None = None,
    variants: Sequence[str] = ALL_VARIANTS,
    ks: Sequence[int] = DEFAULT_KS,
    cutoff: int = 1,
) -> list[dict]:
    """Recall@k (and macro P/R/F1 at ``cutoff``) for each query variant on one index.

    Only queries with a gold code and a non-degenerate graph take part, so every
    variant is scored on the same query set.
    """
    usable = [it for it in items if it.query.query_id in gold and not it.graph.degenerate]
    gold_ids = {it.query.query_id: gold[it.query.query_id] for it in usable}
    depth = max(max(ks), cutoff)
    rows = []
    for variant in variants:
        results: dict[str, RetrievalResult] = {}
        for it in usable:
            text = variant_query(variant, it, keywords, params, emb)
            results[it.query.query_id] = search(index, text, depth)
        row: dict = {"variant": variant, "queries": len(usable)}
        for k in ks:
            row[f"recall@{k}"] = recall_at_k(results, gold_ids, k)
        predicted = {qid: set(r.codes[:cutoff]) for qid, r in results.items()}
        p, r, f = macro_prf(predicted, {qid: {c} for qid, c in gold_ids.items()})
        row.update({"macro_p": p, "macro_r": r, "macro_f1": f})
        rows.append(row)
    return rows


def run_layer_sweep(
    train_graphs: Sequence[ContextualGraph],
    dev_graphs: Sequence[ContextualGraph],
    test_graphs: Sequence[ContextualGraph],
    emb: EmbeddingTable,
    cfg: TrainConfig,
    layer_counts: Sequence[int],
) -> dict[int, float]:
    """Test macro-F1 of one model per layer count, all trained with the same seed."""
    out = {}
    for k in layer_counts:
        result = train(train_graphs, emb, replace(cfg, layers=int(k)), dev_graphs)
        out[int(k)] = run_node_detection_eval(test_graphs, result.params, emb, cfg.tau)[2]
    return out
