"""Word embedding table with reproducible vectors for unknown tokens."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


@dataclass
class EmbeddingTable:
    dim: int
    vectors: dict[str, np.ndarray] = field(default_factory=dict)
    seed: int = 0
    _oov: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("embedding dimension must be positive")
        for word, vec in self.vectors.items():
            if vec.shape != (self.dim,):
                raise ValueError(f"vector for {word!r} has shape {vec.shape}, expected ({self.dim},)")

    def oov_vector(self, token: str) -> np.ndarray:
        vec = self._oov.get(token)
        if vec is None:
            digest = hashlib.sha256(f"{self.seed}\x00{token}".encode("utf-8")).digest()
            rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
            vec = rng.standard_normal(self.dim)
            vec /= np.linalg.norm(vec)
            self._oov[token] = vec
        return vec

    def vector(self, token: str) -> np.ndarray:
        vec = self.vectors.get(token)
        return vec if vec is not None else self.oov_vector(token)

    def mean(self, tokens: Sequence[str]) -> np.ndarray:
        if not tokens:
            raise ValueError("cannot average an empty token list")
        return np.mean([self.vector(t) for t in tokens], axis=0)

    def __contains__(self, token: str) -> bool:
        return token in self.vectors


def load_embeddings(path: str | Path, seed: int = 0) -> EmbeddingTable:
    """Read ``word v1 ... vd`` lines; every line must carry the same dimension."""
    vectors: dict[str, np.ndarray] = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip().split(" ")
            if len(parts) < 2:
                continue
            vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise ValueError(f"{path}: line {lineno}: expected {dim} values, got {len(vec)}")
            vectors[parts[0]] = vec
    if dim is None:
        raise ValueError(f"{path}: no vectors found")
    return EmbeddingTable(dim, vectors, seed)
