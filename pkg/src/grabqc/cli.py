"""Command-line entry point: ingest, build-graphs, label, train, predict, evaluate.

Every stage writes plain files under the output directory together with a
``<stage>.meta.json`` recording the config hash it was built from; later
stages refuse to run on artifacts built from a different configuration.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from .config import ConfigError, PipelineConfig, file_sha256, load_config
from .corpus import DiagnosisQuery, dump_corpus, load_corpus
from .ctxgraph import augment_with_external, dump_graphs, load_graphs
from .evaluation import ExperimentReport, run_layer_sweep, run_node_detection_eval, run_query_comparison
from .evaluation import split_notes, variant_query
from .ir import build_index, dump_icd_tsv, load_icd_tsv, search
from .kb import dump_kb, load_kb
from .model import EmbeddingTable, load_checkpoint, load_embeddings, save_checkpoint, train
from .pipeline import QueryGraph, corpus_graphs, external_keywords, label_corpus

logger = logging.getLogger("grabqc")

STAGES = ("ingest", "build-graphs", "label", "train", "predict", "evaluate")


class StageError(RuntimeError):
    pass


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _write_jsonl(path: Path, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def _read_jsonl(path: Path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def _write_meta(out: Path, stage: str, cfg: PipelineConfig, files: list[str], **extra) -> None:
    meta = {
        "stage": stage,
        "config_hash": cfg.config_hash(),
        "files": {name: file_sha256(out / name) for name in files},
        **extra,
    }
    _write_json(out / f"{stage}.meta.json", meta)


def _require(out: Path, stage: str, cfg: PipelineConfig) -> dict:
    path = out / f"{stage}.meta.json"
    if not path.is_file():
        raise StageError(f"missing artifacts of stage '{stage}' in {out}; run it first")
    meta = json.loads(path.read_text(encoding="utf-8"))
    if meta.get("config_hash") != cfg.config_hash():
        raise StageError(f"stage '{stage}' artifacts were built from a different config; rerun it")
    for name, digest in meta.get("files", {}).items():
        if not (out / name).is_file() or file_sha256(out / name) != digest:
            raise StageError(f"artifact {name} changed since stage '{stage}' wrote it; rerun it")
    return meta


def _embeddings(cfg: PipelineConfig) -> EmbeddingTable:
    if cfg.embeddings:
        return load_embeddings(cfg.embeddings, seed=cfg.seed)
    logger.info("no embedding file configured; using seeded random vectors (dim %d)", cfg.embedding_dim)
    return EmbeddingTable(cfg.embedding_dim, seed=cfg.seed)


def _load_ingested(out: Path, cfg: PipelineConfig):
    _require(out, "ingest", cfg)
    notes = load_corpus(out / "corpus.jsonl")
    kb = load_kb(out / "kb.jsonl")
    index = build_index(load_icd_tsv(out / "icd.tsv", cfg.icd_version))
    return notes, kb, index


def _load_items(out: Path, cfg: PipelineConfig) -> tuple[list[QueryGraph], list[str]]:
    meta = _require(out, "build-graphs", cfg)
    queries = [DiagnosisQuery(**row) for row in _read_jsonl(out / "queries.jsonl")]
    graphs = {g.query_id: g for g in load_graphs(out / "graphs.jsonl")}
    return [QueryGraph(q, graphs[q.query_id]) for q in queries], meta["external_keywords"]


def _splits(notes, cfg: PipelineConfig) -> dict[str, set[str]]:
    return split_notes([n.note_id for n in notes], cfg.seed, cfg.split_ratios)


def cmd_ingest(cfg: PipelineConfig, out: Path) -> None:
    cfg.validate_paths()
    notes = load_corpus(cfg.corpus)
    kb = load_kb(cfg.kb, cfg.relations or None)
    codes = load_icd_tsv(cfg.icd, cfg.icd_version)
    index = build_index(codes)
    out.mkdir(parents=True, exist_ok=True)
    dump_corpus(notes, out / "corpus.jsonl")
    dump_kb(kb, out / "kb.jsonl")
    dump_icd_tsv(index.codes, out / "icd.tsv")
    _write_meta(out, "ingest", cfg, ["corpus.jsonl", "kb.jsonl", "icd.tsv"],
                counts={"notes": len(notes), "concepts": len(kb.concepts), "edges": len(kb.edges),
                        "codes": index.doc_count})
    logger.info("ingested %d notes, %d concepts, %d codes", len(notes), len(kb.concepts), index.doc_count)


def cmd_build_graphs(cfg: PipelineConfig, out: Path) -> None:
    notes, kb, index = _load_ingested(out, cfg)
    items = corpus_graphs(notes, kb, cfg.rules(), cfg.max_hops)
    keywords = external_keywords(notes, index, cfg.top_k_external)
    _write_jsonl(out / "queries.jsonl", [
        {"query_id": it.query.query_id, "note_id": it.query.note_id, "text": it.query.text, "ordinal": it.query.ordinal}
        for it in items
    ])
    dump_graphs([it.graph for it in items], out / "graphs.jsonl")
    degenerate = [it.query.query_id for it in items if it.graph.degenerate]
    for qid in degenerate:
        logger.warning("degenerate graph (no linked query entity): %s", qid)
    _write_meta(out, "build-graphs", cfg, ["queries.jsonl", "graphs.jsonl"],
                external_keywords=keywords, degenerate=degenerate, queries=len(items))


def cmd_label(cfg: PipelineConfig, out: Path) -> None:
    notes, _, index = _load_ingested(out, cfg)
    items, keywords = _load_items(out, cfg)
    labeled = label_corpus(notes, items, index, cfg.label_threshold, keywords, cfg.train_plain_graphs)
    dump_graphs(labeled.graphs, out / "labeled.jsonl")
    _write_json(out / "alignment.json", labeled.alignment)
    positives = sum(int(g.labels.sum()) for g in labeled.graphs)
    nodes = sum(g.n for g in labeled.graphs)
    _write_meta(out, "label", cfg, ["labeled.jsonl", "alignment.json"],
                threshold=cfg.label_threshold, graphs=len(labeled.graphs), nodes=nodes, positive_nodes=positives)


def _labeled_by_split(out: Path, cfg: PipelineConfig, notes):
    _require(out, "label", cfg)
    graphs = load_graphs(out / "labeled.jsonl")
    splits = _splits(notes, cfg)
    return {name: [g for g in graphs if g.note_id in ids] for name, ids in splits.items()}


def cmd_train(cfg: PipelineConfig, out: Path) -> None:
    notes, _, _ = _load_ingested(out, cfg)
    by_split = _labeled_by_split(out, cfg, notes)
    emb = _embeddings(cfg)
    result = train(by_split["train"], emb, cfg.train_config(), by_split["dev"])
    save_checkpoint(result.params, out / "model.json", {"config_hash": cfg.config_hash(), **cfg.echo()})
    _write_meta(out, "train", cfg, ["model.json"], losses=result.losses, dev_f1=result.dev_f1,
                best_epoch=result.best_epoch, pos_weight=result.pos_weight,
                split_graphs={k: len(v) for k, v in by_split.items()})
    logger.info("trained %d epochs, best dev F1 %.4f at epoch %d", len(result.losses),
                max(result.dev_f1, default=0.0), result.best_epoch)


def _load_model(out: Path, cfg: PipelineConfig):
    if not (out / "model.json").is_file():
        raise StageError(f"no checkpoint at {out / 'model.json'}; run 'train' first")
    _require(out, "train", cfg)
    params, echo = load_checkpoint(out / "model.json")
    if echo.get("config_hash") != cfg.config_hash():
        raise StageError("checkpoint was trained under a different config")
    return params


def cmd_predict(cfg: PipelineConfig, out: Path) -> None:
    params = _load_model(out, cfg)
    _, _, index = _load_ingested(out, cfg)
    items, keywords = _load_items(out, cfg)
    emb = _embeddings(cfg)
    variant = "grabqc+external" if cfg.use_external else "grabqc"
    rows = []
    for it in items:
        if it.graph.degenerate:
            q_c = it.query.text
        else:
            q_c = variant_query(variant, it, keywords if cfg.use_external else (), params, emb)
        res = search(index, q_c, cfg.retrieve_k)
        rows.append({
            "query_id": it.query.query_id, "note_id": it.query.note_id, "q": it.query.text, "q_c": q_c,
            "codes": [[c, s] for c, s in res.ranked], "degenerate": it.graph.degenerate,
        })
    _write_jsonl(out / "predictions.jsonl", rows)
    _write_meta(out, "predict", cfg, ["predictions.jsonl"], variant=variant)


def cmd_evaluate(cfg: PipelineConfig, out: Path) -> None:
    params = _load_model(out, cfg)
    notes, _, index = _load_ingested(out, cfg)
    items, keywords = _load_items(out, cfg)
    by_split = _labeled_by_split(out, cfg, notes)
    alignment = json.loads((out / "alignment.json").read_text(encoding="utf-8"))
    emb = _embeddings(cfg)
    test_ids = _splits(notes, cfg)["test"]
    test_items = [it for it in items if it.query.note_id in test_ids]

    p, r, f = run_node_detection_eval(by_split["test"], params, emb, cfg.tau)
    rows = run_query_comparison(test_items, alignment, index, keywords, params, emb,
                                ks=cfg.recall_ks, cutoff=cfg.prediction_cutoff)
    metrics = {
        "node_macro_p": p, "node_macro_r": r, "node_macro_f1": f,
        "test_graphs": len(by_split["test"]), "prediction_cutoff": cfg.prediction_cutoff,
        "external_keywords": list(keywords),
    }
    if cfg.layer_sweep:
        sweep = run_layer_sweep(by_split["train"], by_split["dev"], by_split["test"], emb,
                                cfg.train_config(), cfg.layer_sweep)
        metrics["layer_sweep_macro_f1"] = {str(k): v for k, v in sweep.items()}
    stamp = os.environ.get("SOURCE_DATE_EPOCH")
    timestamp = datetime.fromtimestamp(int(stamp), timezone.utc).isoformat() if stamp else None
    report = ExperimentReport("query-comparison", {"config_hash": cfg.config_hash(), **cfg.echo()},
                              metrics, rows, cfg.seed, timestamp)
    (out / "report.json").write_text(report.dumps(), encoding="utf-8")
    (out / "report.txt").write_text(report.to_text(), encoding="utf-8")
    _write_meta(out, "evaluate", cfg, ["report.json", "report.txt"])
    print(report.to_text(), end="")


COMMANDS = {
    "ingest": cmd_ingest,
    "build-graphs": cmd_build_graphs,
    "label": cmd_label,
    "train": cmd_train,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
}


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", type=Path, default=default, help="pipeline config file (key = value)")
    parser.add_argument("--seed", type=int, default=default, help="override the config seed")
    parser.add_argument("--out", type=Path, default=default, help="output directory for artifacts")
    parser.add_argument("--log-level", default=argparse.SUPPRESS if suppress else "WARNING")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="grabqc", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in STAGES:
        sp = sub.add_parser(name, help=COMMANDS[name].__name__.replace("cmd_", "").replace("_", " "))
        _global_flags(sp, suppress=True)
    sub.add_parser("all", help="run every stage in order").set_defaults(all=True)
    _global_flags(sub.choices["all"], suppress=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config, seed=args.seed, out=str(args.out) if args.out else None)
        out = Path(cfg.out)
        stages = STAGES if args.command == "all" else (args.command,)
        for stage in stages:
            COMMANDS[stage](cfg, out)
    except Exception as exc:  # noqa: BLE001 - every failure becomes a JSON error record
        logger.debug("stage failed", exc_info=True)
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
