"""JSON checkpoints: tensors stored row-major with their shapes."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .network import ModelParams

FORMAT_TAG = "grabqc-checkpoint/1"


def params_to_json(params: ModelParams, config: dict | None = None) -> dict:
    return {
        "format": FORMAT_TAG,
        "layers": params.layers,
        "tau": params.tau,
        "dims": {
            "embedding": int(params.W1[0].shape[0]),
            "hidden": [int(w.shape[1]) for w in params.W1],
            "query": params.query_width,
        },
        "tensors": {
            name: {"shape": list(t.shape), "data": t.reshape(-1).tolist()}
            for name, t in sorted(params.tensors.items())
        },
        "config": config or {},
    }


def params_from_json(obj: dict) -> ModelParams:
    if obj.get("format") != FORMAT_TAG:
        raise ValueError(f"unsupported checkpoint format {obj.get('format')!r}")
    tensors = {
        name: np.array(t["data"], dtype=np.float64).reshape(t["shape"])
        for name, t in obj["tensors"].items()
    }
    params = ModelParams(tensors, int(obj["layers"]), float(obj["tau"]))
    params.validate()
    return params


def save_checkpoint(params: ModelParams, path: str | Path, config: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(params_to_json(params, config), fh, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path: str | Path) -> tuple[ModelParams, dict]:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    return params_from_json(obj), obj.get("config", {})
