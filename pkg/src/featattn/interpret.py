"""Per-patient attention, global feature importance and embedding geometry exports."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from . import model as nn
from .data.cohort import Cohort, ScalerStats, standardize
from .data.schema import NUMERICAL, FeatureSchema
from .errors import DomainError, SchemaError

SIMPLEX_TOL = 1e-9


def _scaled_values(params: nn.ModelParams, stats: ScalerStats | None, cohort: Cohort) -> np.ndarray:
    if cohort.schema != params.schema:
        raise SchemaError("cohort schema differs from the model schema")
    if cohort.scaled:
        return cohort.values
    if stats is None:
        raise DomainError("raw cohort needs ScalerStats")
    return standardize(cohort, stats)[0].values


def explain_sample(params: nn.ModelParams, stats: ScalerStats | None, sample) -> tuple[np.ndarray, float]:
    """Attention weights and predicted probability for one sample.

    ``sample`` is either a one-row Cohort (raw or scaled) or a vector of
    already standardized values in schema order.
    """
    if isinstance(sample, Cohort):
        if len(sample) != 1:
            raise DomainError("explain_sample takes exactly one sample")
        values = _scaled_values(params, stats, sample)
    else:
        values = np.asarray(sample, dtype=np.float64).reshape(1, -1)
        if values.shape[1] != len(params.schema):
            raise SchemaError(f"sample has {values.shape[1]} values, schema has {len(params.schema)}")
    p, alpha, _ = nn.forward(values, params, nn.INFER)
    return alpha[0], float(p[0])


@dataclass
class AttentionReport:
    feature_names: list[str]
    sample_ids: np.ndarray
    alpha: np.ndarray
    probability: np.ndarray
    predicted: np.ndarray
    label: np.ndarray | None = None

    def __len__(self):
        return len(self.sample_ids)

    def simplex_violation(self) -> float:
        """Largest deviation of any row from the probability simplex."""
        if len(self) == 0:
            return 0.0
        return float(max(np.abs(self.alpha.sum(axis=1) - 1.0).max(), max(0.0, -self.alpha.min())))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sample_id", *self.feature_names, "probability", "predicted", "label"])
        for i in range(len(self)):
            lab = "" if self.label is None else str(int(self.label[i]))
            w.writerow(
                [int(self.sample_ids[i]), *(repr(float(a)) for a in self.alpha[i]),
                 repr(float(self.probability[i])), int(self.predicted[i]), lab]
            )
        return buf.getvalue()


def build_attention_report(params: nn.ModelParams, stats: ScalerStats | None, cohort: Cohort) -> AttentionReport:
    if len(cohort) == 0:
        raise DomainError("attention report needs at least one sample")
    values = _scaled_values(params, stats, cohort)
    p, alpha, _ = nn.forward(values, params, nn.INFER)
    return AttentionReport(
        params.schema.names,
        cohort.ids.copy(),
        alpha,
        p,
        (p >= 0.5).astype(np.int64),
        cohort.labels.copy(),
    )


@dataclass
class ImportanceRanking:
    features: list[str]
    weights: np.ndarray
    ranks: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rank", "feature", "mean_attention"])
        for r, f, m in zip(self.ranks, self.features, self.weights):
            w.writerow([int(r), f, repr(float(m))])
        return buf.getvalue()

    def top(self, k: int) -> list[str]:
        return self.features[:k]


def global_importance(report: AttentionReport, aggregate: str = "mean") -> ImportanceRanking:
    """Rank features by mean attention; ties keep schema order.

    ``aggregate="median"`` uses per-feature medians renormalised to sum to 1.
    """
    if len(report) == 0:
        raise DomainError("importance needs a non-empty report")
    if aggregate == "mean":
        agg = report.alpha.mean(axis=0)
    elif aggregate == "median":
        agg = np.median(report.alpha, axis=0)
        agg = agg / agg.sum()
    else:
        raise DomainError(f"unknown aggregate {aggregate!r}")
    order = np.argsort(-agg, kind="stable")
    return ImportanceRanking(
        [report.feature_names[i] for i in order],
        agg[order],
        np.arange(1, len(order) + 1),
    )


@dataclass
class FeatureEmbedding:
    labels: list[str]
    vectors: np.ndarray
    norms: np.ndarray
    distances: np.ndarray

    def to_dict(self) -> dict:
        return {
            "vectors": {lab: v.tolist() for lab, v in zip(self.labels, self.vectors)},
            "norms": {lab: float(n) for lab, n in zip(self.labels, self.norms)},
            "distances": {
                "labels": list(self.labels),
                "matrix": self.distances.tolist(),
            },
        }


def pairwise_distances(vectors: np.ndarray) -> np.ndarray:
    m = len(vectors)
    out = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            out[i, j] = out[j, i] = np.sqrt(np.sum((vectors[i] - vectors[j]) ** 2))
    return out


def export_embeddings(params: nn.ModelParams, schema: FeatureSchema | None = None) -> dict[str, FeatureEmbedding]:
    """Raw vectors, distances from the origin and pairwise distances per lookup table."""
    schema = schema or params.schema
    if schema != params.schema:
        raise SchemaError("schema differs from the model schema")
    out = {}
    for f in schema.features:
        if f.kind == NUMERICAL:
            continue
        vecs = params.weights[f"embed.{f.name}"].copy()
        out[f.name] = FeatureEmbedding(
            list(f.labels()),
            vecs,
            np.sqrt((vecs**2).sum(axis=1)),
            pairwise_distances(vecs),
        )
    return out


def embeddings_json(export: dict[str, FeatureEmbedding]) -> str:
    return json.dumps({name: emb.to_dict() for name, emb in export.items()}, indent=2) + "\n"
