"""Adam training loop with best-dev checkpoint selection."""
from __future__ import annotations

import logging
import warnings
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from ..ctxgraph import ContextualGraph
from ..text import tokenize
from .embeddings import EmbeddingTable
from .network import (
    ModelParams,
    _gnn,
    init_params,
    loss_and_grads,
    node_features,
    predict_proba,
    predict_relevant,
    score_nodes,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    epochs: int = 100
    l2: float = 1e-4
    # None -> #neg / #pos on the training graphs
    pos_weight: float | None = None
    seed: int = 0
    tau: float = 0.5
    layers: int = 3
    hidden: int = 64
    query_width: int = 64
    init: str = "glorot-uniform"

    def __post_init__(self):
        if self.lr <= 0 or self.epochs < 0 or self.l2 < 0:
            raise ValueError("lr must be positive, epochs and l2 non-negative")
        if self.pos_weight is not None and self.pos_weight <= 0:
            raise ValueError("pos_weight must be positive")
        if not 0.0 < self.tau < 1.0:
            raise ValueError("tau must lie in (0, 1)")
        if self.layers < 1 or self.hidden < 1 or self.query_width < 1:
            raise ValueError("layer count and widths must be positive")
        if self.init != "glorot-uniform":
            raise ValueError(f"unsupported init scheme {self.init!r}")

    def to_json(self) -> dict:
        return asdict(self)


class Adam:
    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for k, g in grads.items():
            if k not in self.m:
                self.m[k] = np.zeros_like(params[k])
                self.v[k] = np.zeros_like(params[k])
            m, v = self.m[k], self.v[k]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            params[k] -= (self.lr / bc1) * m / (np.sqrt(v / bc2) + self.eps)


@dataclass
class TrainResult:
    params: ModelParams
    losses: list[float] = field(default_factory=list)
    dev_f1: list[float] = field(default_factory=list)
    best_epoch: int = 0
    pos_weight: float = 1.0


def binary_macro_prf(y_true, y_pred) -> tuple[float, float, float]:
    """Macro P/R/F1 over the classes {0, 1} present in either vector."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    classes = sorted(set(y_true.tolist()) | set(y_pred.tolist()))
    if not classes:
        return 0.0, 0.0, 0.0
    ps, rs, fs = [], [], []
    for c in classes:
        tp = int(np.sum((y_pred == c) & (y_true == c)))
        fp = int(np.sum((y_pred == c) & (y_true != c)))
        fn = int(np.sum((y_pred != c) & (y_true == c)))
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn) if tp + fn else 0.0
        ps.append(p)
        rs.append(r)
        fs.append(2 * p * r / (p + r) if p + r else 0.0)
    k = len(classes)
    return sum(ps) / k, sum(rs) / k, sum(fs) / k


def node_f1(graphs: Sequence[ContextualGraph], emb: EmbeddingTable, params: ModelParams, tau: float | None = None) -> float:
    tau = params.tau if tau is None else tau
    ys, preds = [], []
    for g in graphs:
        if g.n == 0:
            continue
        ys.append(g.labels)
        preds.append(predict_relevant(predict_proba(g, emb, params), tau))
    if not ys:
        return 0.0
    return binary_macro_prf(np.concatenate(ys), np.concatenate(preds))[2]


def _prepared_f1(data, params: ModelParams) -> float:
    if not data:
        return 0.0
    preds = []
    for X0, A, qmean, _ in data:
        h = _gnn(X0, A, params)[0][-1]
        preds.append(predict_relevant(score_nodes(h, qmean @ params.Wq + params.bq, params), params.tau))
    return binary_macro_prf(np.concatenate([d[3] for d in data]), np.concatenate(preds))[2]


def _prepare(graphs: Sequence[ContextualGraph], emb: EmbeddingTable):
    out = []
    for g in graphs:
        if g.n == 0:
            continue
        if g.labels is None:
            raise ValueError(f"graph {g.query_id} is unlabelled")
        toks = tokenize(g.query_text) or [w for nd in g.nodes for w in nd.words]
        out.append((node_features(g, emb), g.adjacency.astype(np.float64), emb.mean(toks), g.labels.astype(np.float64)))
    return out


def train(
    graphs: Sequence[ContextualGraph],
    emb: EmbeddingTable,
    cfg: TrainConfig = TrainConfig(),
    dev: Sequence[ContextualGraph] | None = None,
) -> TrainResult:
    """One Adam step per graph per epoch; keeps the parameters with the best dev macro-F1."""
    graphs = [g for g in graphs if g.n]
    dev = [g for g in dev if g.n] if dev else []
    rng = np.random.default_rng(cfg.seed)
    params = init_params(emb.dim, cfg.hidden, cfg.layers, cfg.query_width, cfg.tau, rng)
    data = _prepare(graphs, emb)
    select_on = _prepare(dev, emb) if dev else data

    labels = np.concatenate([d[3] for d in data]) if data else np.zeros(0)
    n_pos, n_neg = int(labels.sum()), int(len(labels) - labels.sum())
    if n_pos == 0 or n_neg == 0:
        warnings.warn("training labels contain a single class", RuntimeWarning, stacklevel=2)
    if cfg.pos_weight is not None:
        pos_weight = cfg.pos_weight
    else:
        pos_weight = n_neg / n_pos if n_pos and n_neg else 1.0

    result = TrainResult(params.copy(), pos_weight=pos_weight)
    best = _prepared_f1(select_on, params)
    opt = Adam(cfg.lr)
    for epoch in range(1, cfg.epochs + 1):
        total = 0.0
        for i in rng.permutation(len(data)):
            X0, A, qmean, y = data[i]
            loss, grads = loss_and_grads(params, X0, A, qmean, y, pos_weight, cfg.l2)
            opt.step(params.tensors, grads)
            total += loss
        result.losses.append(total / max(len(data), 1))
        score = _prepared_f1(select_on, params)
        result.dev_f1.append(score)
        if score > best:
            best = score
            result.params = params.copy()
            result.best_epoch = epoch
        logger.debug("epoch %d loss %.6f select-f1 %.4f", epoch, result.losses[-1], score)
    return result
