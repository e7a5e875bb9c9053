"""JSON model artifacts: schema, scaler stats, parameters and training echo.

Floats are written with Python's shortest round-trip ``repr``, so a load
reproduces every float64 bit for bit.
"""

from __future__ import annotations

import datetime as _dt
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import model as nn
from .data.cohort import ScalerStats
from .data.schema import FeatureSchema
from .errors import LoadError, SchemaError, VersionError
from .numerics import RandomSource
from .training import LOGISTIC, LogisticModel, TrainConfig

FORMAT_VERSION = "featattn-model/1"
TIMESTAMP_FIELD = "created"


@dataclass
class ModelArtifact:
    schema: FeatureSchema
    stats: ScalerStats
    model: object  # ModelParams or LogisticModel
    train_config: TrainConfig | None = None
    seed: int | None = None
    created: str | None = None
    version: str = FORMAT_VERSION

    @property
    def kind(self) -> str:
        if isinstance(self.model, LogisticModel):
            return LOGISTIC
        return self.model.config.pooling


def _arrays(d: dict) -> dict:
    return {k: np.asarray(v).tolist() for k, v in d.items()}


def to_dict(art: ModelArtifact) -> dict:
    m = art.model
    body = {"kind": art.kind, "weights": _arrays(m.weights)}
    if isinstance(m, nn.ModelParams):
        body["config"] = m.config.to_dict()
        body["buffers"] = _arrays(m.buffers)
    return {
        "format_version": art.version,
        TIMESTAMP_FIELD: art.created,
        "seed": art.seed,
        "schema": art.schema.to_dict(),
        "scaler": art.stats.to_dict(),
        "train_config": None if art.train_config is None else art.train_config.to_dict(),
        "model": body,
    }


def save_artifact(art: ModelArtifact, path) -> None:
    if art.created is None:
        art.created = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    text = json.dumps(to_dict(art), indent=1, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def _expect_shapes(weights: dict, reference: dict, what: str):
    if list(weights) != list(reference):
        raise LoadError(f"{what} keys differ from the configured architecture")
    out = {}
    for key, ref in reference.items():
        arr = np.asarray(weights[key], dtype=np.float64)
        if arr.shape != ref.shape:
            raise LoadError(f"{what} {key}: stored shape {arr.shape}, expected {ref.shape}")
        if not np.all(np.isfinite(arr)):
            raise LoadError(f"{what} {key}: non-finite values")
        out[key] = arr
    return out


def from_dict(doc: dict) -> ModelArtifact:
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise LoadError("not a model artifact (no format_version)")
    if doc["format_version"] != FORMAT_VERSION:
        raise VersionError(f"unsupported artifact version {doc['format_version']!r}; expected {FORMAT_VERSION!r}")
    try:
        schema = FeatureSchema.from_dict(doc["schema"])
        stats = ScalerStats.from_dict(doc["scaler"])
        body = doc["model"]
        kind = body["kind"]
        tc = doc.get("train_config")
        train_config = TrainConfig.from_dict(tc) if tc else None
        if kind == LOGISTIC:
            ref = LogisticModel.init(schema, RandomSource(0))
            weights = _expect_shapes(body["weights"], ref.weights, "weights")
            model = LogisticModel(schema, weights, doc.get("seed"))
        else:
            cfg = dict(body["config"])
            cfg["hidden"] = tuple(cfg["hidden"])
            config = nn.ModelConfig(**cfg)
            ref = nn.init_params(schema, config, RandomSource(0))
            weights = _expect_shapes(body["weights"], ref.weights, "weights")
            buffers = _expect_shapes(body["buffers"], ref.buffers, "buffers")
            model = nn.ModelParams(schema, config, weights, buffers, seed=doc.get("seed"))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, (LoadError, SchemaError)):
            raise
        raise LoadError(f"malformed artifact: {exc!r}") from exc
    if stats.names != [schema.features[j].name for j in schema.indices("numerical")]:
        raise LoadError("scaler statistics do not match the schema's numerical features")
    return ModelArtifact(schema, stats, model, train_config, doc.get("seed"), doc.get(TIMESTAMP_FIELD), doc["format_version"])


def load_artifact(path) -> ModelArtifact:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise LoadError(f"{path}: unreadable or truncated artifact ({exc.msg})") from exc
    return from_dict(doc)
