from .checkpoint import load_checkpoint, save_checkpoint
from .embeddings import EmbeddingTable, load_embeddings
from .network import (
    ModelParams,
    contextual_query,
    encode_query,
    gnn_forward,
    init_params,
    loss_and_grads,
    node_features,
    predict_proba,
    predict_relevant,
    score_nodes,
)
from .train import Adam, TrainConfig, TrainResult, binary_macro_prf, node_f1, train

__all__ = [
    "Adam",
    "EmbeddingTable",
    "ModelParams",
    "TrainConfig",
    "TrainResult",
    "binary_macro_prf",
    "contextual_query",
    "encode_query",
    "gnn_forward",
    "init_params",
    "load_checkpoint",
    "load_embeddings",
    "loss_and_grads",
    "node_f1",
    "node_features",
    "predict_proba",
    "predict_relevant",
    "save_checkpoint",
    "score_nodes",
    "train",
]
