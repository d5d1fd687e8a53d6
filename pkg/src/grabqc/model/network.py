"""Relevant-node detection network: GNN layers, query encoder and node classifier.

Row convention throughout: node features are rows, so one layer computes
``X W1 + A X W2``.  ReLU sits between layers; the last layer is linear.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..ctxgraph import ContextualGraph
from ..text import tokenize
from .embeddings import EmbeddingTable


@dataclass
class ModelParams:
    tensors: dict[str, np.ndarray]
    layers: int
    tau: float = 0.5

    @property
    def W1(self) -> list[np.ndarray]:
        return [self.tensors[f"W1.{l}"] for l in range(self.layers)]

    @property
    def W2(self) -> list[np.ndarray]:
        return [self.tensors[f"W2.{l}"] for l in range(self.layers)]

    @property
    def Wq(self) -> np.ndarray:
        return self.tensors["Wq"]

    @property
    def bq(self) -> np.ndarray:
        return self.tensors["bq"]

    @property
    def Wc(self) -> np.ndarray:
        return self.tensors["Wc"]

    @property
    def bc(self) -> float:
        return float(self.tensors["bc"])

    @property
    def node_width(self) -> int:
        return self.W1[-1].shape[1]

    @property
    def query_width(self) -> int:
        return self.Wq.shape[1]

    def weight_names(self) -> list[str]:
        """Names of the L2-regularised tensors (biases excluded)."""
        return [n for n in self.tensors if not n.startswith("b")]

    def copy(self) -> "ModelParams":
        return ModelParams({k: v.copy() for k, v in self.tensors.items()}, self.layers, self.tau)

    def validate(self) -> None:
        for l in range(self.layers):
            if self.W1[l].shape != self.W2[l].shape:
                raise ValueError(f"layer {l}: W1 and W2 shapes differ")
            if l and self.W1[l].shape[0] != self.W1[l - 1].shape[1]:
                raise ValueError(f"layer {l}: input width does not chain")
        if self.Wq.shape[0] != self.W1[0].shape[0]:
            raise ValueError("query encoder input width must equal the embedding dimension")
        if self.bq.shape != (self.query_width,):
            raise ValueError("bq width mismatch")
        if self.Wc.shape != (self.node_width + self.query_width,):
            raise ValueError("classifier width must be node width + query width")
        if not 0.0 < self.tau < 1.0:
            raise ValueError("tau must lie in (0, 1)")


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape) -> np.ndarray:
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=shape)


def init_params(
    dim: int,
    hidden: int | Sequence[int] = 64,
    layers: int = 3,
    query_width: int = 64,
    tau: float = 0.5,
    rng: np.random.Generator | int = 0,
) -> ModelParams:
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    widths = [hidden] * layers if isinstance(hidden, int) else list(hidden)
    if len(widths) != layers:
        raise ValueError("need one hidden width per layer")
    dims = [dim, *widths]
    tensors: dict[str, np.ndarray] = {}
    for l in range(layers):
        for name in ("W1", "W2"):
            tensors[f"{name}.{l}"] = glorot(rng, dims[l], dims[l + 1], (dims[l], dims[l + 1]))
    tensors["Wq"] = glorot(rng, dim, query_width, (dim, query_width))
    tensors["bq"] = np.zeros(query_width)
    width = dims[-1] + query_width
    tensors["Wc"] = glorot(rng, width, 1, (width,))
    tensors["bc"] = np.zeros(())
    params = ModelParams(tensors, layers, tau)
    params.validate()
    return params


def node_features(graph: ContextualGraph, emb: EmbeddingTable) -> np.ndarray:
    if graph.n == 0:
        raise ValueError(f"graph {graph.query_id} has no nodes")
    return np.stack([emb.mean(nd.words) for nd in graph.nodes])


def gnn_forward(X0: np.ndarray, A: np.ndarray, params: ModelParams) -> np.ndarray:
    return _gnn(X0, A, params)[0][-1]


def _gnn(X0, A, params):
    A = np.asarray(A, dtype=np.float64)
    if X0.ndim != 2 or A.shape != (X0.shape[0], X0.shape[0]):
        raise ValueError(f"shape mismatch: X0 {X0.shape}, A {A.shape}")
    if X0.shape[1] != params.W1[0].shape[0]:
        raise ValueError(f"feature width {X0.shape[1]} != layer input {params.W1[0].shape[0]}")
    hs, zs, ahs = [X0], [], []
    h = X0
    for l in range(params.layers):
        ah = A @ h
        z = h @ params.W1[l] + ah @ params.W2[l]
        zs.append(z)
        ahs.append(ah)
        h = np.maximum(z, 0.0) if l < params.layers - 1 else z
        hs.append(h)
    return hs, zs, ahs


def encode_query(query_tokens: Sequence[str], emb: EmbeddingTable, params: ModelParams) -> np.ndarray:
    return emb.mean(query_tokens) @ params.Wq + params.bq


def _logits(node_repr: np.ndarray, x_q: np.ndarray, params: ModelParams) -> np.ndarray:
    hn = node_repr.shape[1]
    if hn + x_q.shape[0] != params.Wc.shape[0]:
        raise ValueError("classifier width mismatch")
    return node_repr @ params.Wc[:hn] + x_q @ params.Wc[hn:] + params.bc


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def score_nodes(node_repr: np.ndarray, x_q: np.ndarray, params: ModelParams) -> np.ndarray:
    return sigmoid(_logits(node_repr, x_q, params))


def predict_relevant(probabilities, tau: float) -> np.ndarray:
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must lie in (0, 1)")
    return (np.asarray(probabilities) >= tau).astype(np.int64)


def predict_proba(graph: ContextualGraph, emb: EmbeddingTable, params: ModelParams) -> np.ndarray:
    X0 = node_features(graph, emb)
    h = gnn_forward(X0, graph.adjacency, params)
    return score_nodes(h, encode_query(tokenize(graph.query_text), emb, params), params)


def loss_and_grads(
    params: ModelParams,
    X0: np.ndarray,
    A: np.ndarray,
    query_mean: np.ndarray,
    y: np.ndarray,
    pos_weight: float = 1.0,
    l2: float = 0.0,
) -> tuple[float, dict[str, np.ndarray]]:
    """Weighted BCE (mean over nodes) plus L2 on weights, with exact gradients."""
    A = np.asarray(A, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = X0.shape[0]
    hs, zs, ahs = _gnn(X0, A, params)
    h = hs[-1]
    hn = h.shape[1]
    xq = query_mean @ params.Wq + params.bq
    z = _logits(h, xq, params)

    # -log p = softplus(-z), -log(1-p) = softplus(z)
    loss = np.mean(pos_weight * y * np.logaddexp(0.0, -z) + (1.0 - y) * np.logaddexp(0.0, z))
    loss += l2 * sum(np.sum(params.tensors[k] ** 2) for k in params.weight_names())

    p = sigmoid(z)
    dz = (-pos_weight * y * (1.0 - p) + (1.0 - y) * p) / n
    grads: dict[str, np.ndarray] = {}
    wc_node, wc_q = params.Wc[:hn], params.Wc[hn:]
    grads["Wc"] = np.concatenate([h.T @ dz, xq * dz.sum()])
    grads["bc"] = np.asarray(dz.sum())
    dxq = wc_q * dz.sum()
    grads["Wq"] = np.outer(query_mean, dxq)
    grads["bq"] = dxq

    dh = np.outer(dz, wc_node)
    for l in reversed(range(params.layers)):
        dzl = dh if l == params.layers - 1 else dh * (zs[l] > 0)
        grads[f"W1.{l}"] = hs[l].T @ dzl
        grads[f"W2.{l}"] = ahs[l].T @ dzl
        if l:
            dh = dzl @ params.W1[l].T + A.T @ (dzl @ params.W2[l].T)

    for k in params.weight_names():
        grads[k] = grads[k] + 2.0 * l2 * params.tensors[k]
    return float(loss), {k: grads[k] for k in params.tensors}


def contextual_query(query_text: str, graph: ContextualGraph, decisions: Sequence[int]) -> str:
    """Union of the query phrase with the phrases of nodes predicted relevant.

    Phrases are compared on their lowercase token sequences: a node already
    contained in the running query adds nothing, and a node that contains an
    existing phrase takes that phrase's place.  Remaining nodes are appended
    in node order.
    """
    if len(decisions) != graph.n:
        raise ValueError("one decision per node required")
    parts: list[tuple[tuple[str, ...], str]] = [(tuple(tokenize(query_text)), query_text.strip())]
    for nd, keep in zip(graph.nodes, decisions):
        if not keep:
            continue
        toks = tuple(tokenize(nd.text)) or nd.words
        if any(_contains(existing, toks) for existing, _ in parts):
            continue
        absorbed = [i for i, (existing, _) in enumerate(parts) if existing and _contains(toks, existing)]
        if absorbed:
            first = absorbed[0]
            parts[first] = (toks, nd.text)
            parts = [pt for i, pt in enumerate(parts) if i not in absorbed[1:]]
        else:
            parts.append((toks, nd.text))
    return " ".join(text for _, text in parts if text)


def _contains(seq: Sequence[str], sub: Sequence[str]) -> bool:
    m = len(sub)
    if m == 0:
        return True
    return any(tuple(seq[i:i + m]) == tuple(sub) for i in range(len(seq) - m + 1))
