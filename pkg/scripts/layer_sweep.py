"""Node-detection macro-F1 on the test split for several GNN depths."""
import argparse
import json
from pathlib import Path

from grabqc.config import load_config
from grabqc.corpus import load_corpus
from grabqc.evaluation import run_layer_sweep, split_notes
from grabqc.ir import build_index, load_icd_tsv
from grabqc.kb import load_kb
from grabqc.model import EmbeddingTable, load_embeddings
from grabqc.pipeline import corpus_graphs, external_keywords, label_corpus

ROOT = Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", type=Path, default=ROOT / "fixtures" / "disambiguation" / "pipeline.cfg")
    ap.add_argument("--layers", default="1,2,3,4")
    args = ap.parse_args()
    cfg = load_config(args.config)
    notes = load_corpus(cfg.corpus)
    index = build_index(load_icd_tsv(cfg.icd, cfg.icd_version))
    items = corpus_graphs(notes, load_kb(cfg.kb, cfg.relations or None), cfg.rules(), cfg.max_hops)
    kws = external_keywords(notes, index, cfg.top_k_external) if cfg.use_external else []
    labeled = label_corpus(notes, items, index, cfg.label_threshold, kws, cfg.train_plain_graphs)
    splits = split_notes([n.note_id for n in notes], cfg.seed, cfg.split_ratios)
    note_of = {it.query.query_id: it.query.note_id for it in items}
    part = {name: [g for g in labeled.graphs if note_of[g.query_id] in ids] for name, ids in splits.items()}
    emb = load_embeddings(cfg.embeddings, cfg.seed) if cfg.embeddings else EmbeddingTable(cfg.embedding_dim, seed=cfg.seed)
    layers = [int(x) for x in args.layers.split(",")]
    sweep = run_layer_sweep(part["train"], part["dev"], part["test"], emb, cfg.train_config(), layers)
    print(json.dumps({str(k): round(v, 4) for k, v in sweep.items()}, indent=2))
