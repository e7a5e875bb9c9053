"""Synthetic cohorts with a known, planted label mechanism.

Labels are drawn as ``Bernoulli(sigmoid(score))`` where

    score = intercept + sum_f weight_f * c_f - w_int * c_a * c_b + noise * eps

and ``c_f`` is a centred code in roughly [-1, 1] (z-score for numerical
features, ``2v - 1`` for binary ones, evenly spaced from -1 to 1 over the
categories). For two binary features ``-c_a * c_b`` is +1 exactly when one
of the pair is set, so the interaction is an XOR.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import ParameterError, SchemaError
from ..numerics import RandomSource, sigmoid
from .cohort import Cohort
from .schema import BINARY, CATEGORICAL, NUMERICAL, FeatureSchema

# (mean, sd) of the raw draws; unknown numerical features use (0, 1)
NUMERIC_BASE = {
    "Age": (68.0, 10.0),
    "SurgicalTime": (35.0, 12.0),
    "TotalDaysInHospital": (2.5, 1.2),
    "TotalCigarettesSmoked": (25.0, 12.0),
    "TumourDiameter": (22.0, 9.0),
}

MIN_SAMPLES = 50


@dataclass
class PlantedSignal:
    effects: dict[str, float] = field(default_factory=dict)
    interaction: tuple[str, str] | None = None
    interaction_weight: float = 0.0
    intercept: float = 0.0
    noise: float = 0.0

    @property
    def features(self) -> list[str]:
        names = list(self.effects)
        if self.interaction is not None:
            names += [n for n in self.interaction if n not in names]
        return names

    def to_dict(self) -> dict:
        return {
            "planted_features": self.features,
            "effects": dict(self.effects),
            "interaction": list(self.interaction) if self.interaction else None,
            "interaction_weight": self.interaction_weight,
            "intercept": self.intercept,
            "noise": self.noise,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PlantedSignal":
        inter = d.get("interaction")
        return cls(
            effects={k: float(v) for k, v in d.get("effects", {}).items()},
            interaction=tuple(inter) if inter else None,
            interaction_weight=float(d.get("interaction_weight", 0.0)),
            intercept=float(d.get("intercept", 0.0)),
            noise=float(d.get("noise", 0.0)),
        )


def xor_signal() -> PlantedSignal:
    """Default benchmark signal: one numerical main effect plus a binary XOR pair."""
    return PlantedSignal(
        effects={"SurgicalTime": 1.5},
        interaction=("PTA", "ReResection"),
        interaction_weight=5.0,
    )


def _centred(f, v):
    if f.kind == NUMERICAL:
        mean, sd = NUMERIC_BASE.get(f.name, (0.0, 1.0))
        return (v - mean) / sd
    if f.kind == BINARY:
        return 2.0 * v - 1.0
    return 2.0 * v / (f.cardinality - 1) - 1.0


def generate_synthetic_cohort(
    schema: FeatureSchema,
    n: int,
    planted: PlantedSignal,
    rng: RandomSource,
    missing_rate: float = 0.0,
) -> Cohort:
    """Draw ``n`` samples; ``missing_rate`` blanks cells uniformly at random."""
    if n < MIN_SAMPLES:
        raise ParameterError(f"need n >= {MIN_SAMPLES}, got {n}")
    if not 0.0 <= missing_rate < 1.0:
        raise ParameterError("missing_rate must lie in [0, 1)")
    for name in planted.features:
        schema.index(name)  # raises SchemaError for unknown names
    if planted.interaction is not None and len(set(planted.interaction)) != 2:
        raise SchemaError("interaction needs two distinct features")

    values = np.empty((n, len(schema)))
    for j, f in enumerate(schema.features):
        if f.kind == NUMERICAL:
            mean, sd = NUMERIC_BASE.get(f.name, (0.0, 1.0))
            values[:, j] = np.round(rng.gaussian(mean, sd, size=n), 2)
        elif f.kind == CATEGORICAL:
            values[:, j] = rng.integers(0, f.cardinality, size=n)
        else:
            values[:, j] = rng.integers(0, 2, size=n)

    score = np.full(n, planted.intercept)
    for name, weight in planted.effects.items():
        j = schema.index(name)
        score += weight * _centred(schema.features[j], values[:, j])
    if planted.interaction is not None:
        a, b = (schema.index(x) for x in planted.interaction)
        ca = _centred(schema.features[a], values[:, a])
        cb = _centred(schema.features[b], values[:, b])
        score -= planted.interaction_weight * ca * cb
    if planted.noise > 0:
        score += rng.gaussian(0.0, planted.noise, size=n)
    labels = (rng.uniform(0.0, 1.0, size=n) < sigmoid(score)).astype(np.int64)

    if missing_rate > 0:
        mask = rng.uniform(0.0, 1.0, size=values.shape) < missing_rate
        values[mask] = np.nan
    return Cohort(schema, values, labels, provenance="synthetic")


def write_ground_truth(path, planted: PlantedSignal, seed: int, n: int) -> None:
    doc = {"seed": seed, "n": n, **planted.to_dict()}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
