"""Pipeline configuration: one ``key = value`` text file holding every tunable."""
from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .corpus import DEFAULT_DIAGNOSIS_SECTIONS, DEFAULT_ITEM_PATTERN, ExtractionRules
from .ctxgraph import DEFAULT_TOP_K_EXTERNAL
from .kb import DEFAULT_MAX_HOPS
from .model import TrainConfig
from .supervision import DEFAULT_LABEL_THRESHOLD

PATH_FIELDS = ("corpus", "kb", "icd", "embeddings")


class ConfigError(ValueError):
    pass


def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(x) for x in s.split(",") if x.strip())


def _ints(s: str) -> tuple[int, ...]:
    return tuple(int(x) for x in s.split(",") if x.strip())


def _strs(s: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in s.split(",") if x.strip())


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _opt_float(s: str) -> float | None:
    return None if s.strip().lower() in ("", "auto", "none") else float(s)


@dataclass(frozen=True)
class PipelineConfig:
    corpus: str = ""
    kb: str = ""
    icd: str = ""
    embeddings: str = ""
    out: str = "out"
    icd_version: str = "ICD10"
    diagnosis_sections: tuple[str, ...] = DEFAULT_DIAGNOSIS_SECTIONS
    item_pattern: str = DEFAULT_ITEM_PATTERN
    # empty -> keep every relation
    relations: tuple[str, ...] = ()
    max_hops: int = DEFAULT_MAX_HOPS
    top_k_external: int = DEFAULT_TOP_K_EXTERNAL
    label_threshold: float = DEFAULT_LABEL_THRESHOLD
    tau: float = 0.5
    embedding_dim: int = 50
    layers: int = 3
    hidden: int = 64
    query_width: int = 64
    lr: float = 1e-3
    epochs: int = 100
    l2: float = 1e-4
    pos_weight: float | None = None
    seed: int = 0
    split_ratios: tuple[float, ...] = (0.7, 0.15, 0.15)
    recall_ks: tuple[int, ...] = (1, 8, 15)
    retrieve_k: int = 15
    prediction_cutoff: int = 1
    use_external: bool = True
    # train on un-augmented graphs as well as keyword-augmented ones
    train_plain_graphs: bool = True
    layer_sweep: tuple[int, ...] = ()

    def __post_init__(self):
        if self.max_hops < 1:
            raise ConfigError("max_hops must be >= 1")
        if self.top_k_external < 0:
            raise ConfigError("top_k_external must be >= 0")
        if not 0.0 <= self.label_threshold <= 1.0:
            raise ConfigError("label_threshold must lie in [0, 1]")
        if len(self.split_ratios) != 3 or any(r < 0 for r in self.split_ratios):
            raise ConfigError("split_ratios needs three non-negative numbers")
        if not self.recall_ks or min(self.recall_ks) < 1:
            raise ConfigError("recall_ks must be positive integers")
        if self.retrieve_k < 1 or self.prediction_cutoff < 1:
            raise ConfigError("retrieve_k and prediction_cutoff must be >= 1")
        if self.embedding_dim < 1:
            raise ConfigError("embedding_dim must be positive")
        try:
            self.train_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def rules(self) -> ExtractionRules:
        return ExtractionRules(self.diagnosis_sections, self.item_pattern)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            lr=self.lr, epochs=self.epochs, l2=self.l2, pos_weight=self.pos_weight, seed=self.seed,
            tau=self.tau, layers=self.layers, hidden=self.hidden, query_width=self.query_width,
        )

    def validate_paths(self) -> None:
        for name in ("corpus", "kb", "icd"):
            value = getattr(self, name)
            if not value:
                raise ConfigError(f"config key {name!r} is required")
            if not Path(value).is_file():
                raise ConfigError(f"{name}: no such file {value}")
        if self.embeddings and not Path(self.embeddings).is_file():
            raise ConfigError(f"embeddings: no such file {self.embeddings}")

    def echo(self) -> dict:
        """All settings as plain JSON values, input files replaced by their content hashes."""
        out = {}
        for f in fields(self):
            if f.name == "out":
                continue
            value = getattr(self, f.name)
            if f.name in PATH_FIELDS:
                value = file_sha256(value) if value and Path(value).is_file() else value
            out[f.name] = list(value) if isinstance(value, tuple) else value
        return out

    def config_hash(self) -> str:
        blob = json.dumps(self.echo(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


_PARSERS = {
    "diagnosis_sections": _strs,
    "relations": _strs,
    "split_ratios": _floats,
    "recall_ks": _ints,
    "layer_sweep": _ints,
    "use_external": _bool,
    "pos_weight": _opt_float,
}


def _parser_for(f: dataclasses.Field):
    if f.name in _PARSERS:
        return _PARSERS[f.name]
    default = f.default
    if isinstance(default, bool):
        return _bool
    if isinstance(default, int):
        return int
    if isinstance(default, float):
        return float
    return str


def load_config(path: str | Path | None = None, **overrides) -> PipelineConfig:
    """Read a config file (if given) and apply keyword overrides.

    Relative paths in the file are resolved against the file's directory.
    """
    values: dict = {}
    known = {f.name: f for f in fields(PipelineConfig)}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        cp = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#", ";"))
        cp.optionxform = str
        cp.read_string("[pipeline]\n" + path.read_text(encoding="utf-8"), source=str(path))
        for key, raw in cp["pipeline"].items():
            key = key.strip().replace("-", "_")
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            try:
                values[key] = _parser_for(known[key])(raw.strip())
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {exc}") from exc
        for key in (*PATH_FIELDS, "out"):
            if values.get(key) and not Path(values[key]).is_absolute():
                values[key] = str((path.parent / values[key]).resolve())
    values.update({k: v for k, v in overrides.items() if v is not None})
    return PipelineConfig(**values)


def dump_config(cfg: PipelineConfig) -> str:
    lines = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        elif value is None:
            value = "auto"
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"


def file_sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
