"""Feature schema: ordered, typed declaration of the model inputs."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from ..errors import SchemaError

NUMERICAL = "numerical"
CATEGORICAL = "categorical"
BINARY = "binary"
KINDS = (NUMERICAL, CATEGORICAL, BINARY)


@dataclass(frozen=True)
class FeatureDescriptor:
    name: str
    kind: str
    categories: tuple[str, ...] = ()
    unit: str | None = None

    def __post_init__(self):
        if not self.name or not self.name.isidentifier():
            raise SchemaError(f"feature name {self.name!r} is not an identifier")
        if self.kind not in KINDS:
            raise SchemaError(f"feature {self.name!r}: unknown kind {self.kind!r}")
        object.__setattr__(self, "categories", tuple(self.categories))
        if self.kind == CATEGORICAL:
            if len(self.categories) < 2:
                raise SchemaError(f"categorical feature {self.name!r} needs >= 2 categories")
            if len(set(self.categories)) != len(self.categories):
                raise SchemaError(f"categorical feature {self.name!r} has duplicate categories")
        elif self.categories:
            raise SchemaError(f"{self.kind} feature {self.name!r} cannot declare categories")

    @property
    def cardinality(self) -> int:
        """Number of embedding rows: category count, 2 for binary, 0 for numerical."""
        if self.kind == CATEGORICAL:
            return len(self.categories)
        if self.kind == BINARY:
            return 2
        return 0

    def labels(self) -> tuple[str, ...]:
        if self.kind == BINARY:
            return ("0", "1")
        return self.categories

    def to_dict(self) -> dict:
        d = {"name": self.name, "kind": self.kind}
        if self.categories:
            d["categories"] = list(self.categories)
        if self.unit is not None:
            d["unit"] = self.unit
        return d


@dataclass(frozen=True)
class FeatureSchema:
    features: tuple[FeatureDescriptor, ...]
    label_name: str = "Recurrence"

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        names = [f.name for f in self.features]
        if not names:
            raise SchemaError("schema declares no features")
        if len(set(names)) != len(names):
            raise SchemaError("feature names must be unique")
        if self.label_name in names:
            raise SchemaError(f"label {self.label_name!r} collides with a feature name")

    def __len__(self):
        return len(self.features)

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.features]

    def index(self, name: str) -> int:
        for i, f in enumerate(self.features):
            if f.name == name:
                return i
        raise SchemaError(f"feature {name!r} is not in the schema")

    def __getitem__(self, name: str) -> FeatureDescriptor:
        return self.features[self.index(name)]

    def indices(self, kind: str) -> list[int]:
        return [i for i, f in enumerate(self.features) if f.kind == kind]

    def counts(self) -> dict[str, int]:
        return {k: len(self.indices(k)) for k in KINDS}

    def to_dict(self) -> dict:
        return {"label": self.label_name, "features": [f.to_dict() for f in self.features]}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSchema":
        try:
            feats = [
                FeatureDescriptor(
                    name=f["name"],
                    kind=f["kind"],
                    categories=tuple(f.get("categories", ())),
                    unit=f.get("unit"),
                )
                for f in d["features"]
            ]
            return cls(feats, d.get("label", "Recurrence"))
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed schema document: {exc}") from exc

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "FeatureSchema":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise SchemaError(f"schema file {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(doc)


_GRADE = ("G1", "G2", "G3")
_BAND = ("Low", "Medium", "High")

# 5 numerical + 6 categorical + 12 binary. Only some names are published for
# the original cohort; the trailing binary flags are placeholders.
_DEFAULT_FEATURES = (
    FeatureDescriptor("Age", NUMERICAL, unit="years"),
    FeatureDescriptor("SmokingStatus", CATEGORICAL, ("Never", "Previous", "Current")),
    FeatureDescriptor("Gender", BINARY, unit="1 = male"),
    FeatureDescriptor("SurgicalTime", NUMERICAL, unit="minutes"),
    FeatureDescriptor("TotalDaysInHospital", NUMERICAL, unit="days"),
    FeatureDescriptor("TotalCigarettesSmoked", NUMERICAL, unit="pack-years"),
    FeatureDescriptor("TumourDiameter", NUMERICAL, unit="mm"),
    FeatureDescriptor(
        "IntravesicalTreatment",
        CATEGORICAL,
        ("None", "BCG Induction Only", "BCG Induction and Maintenance"),
    ),
    FeatureDescriptor("TumourGrade", CATEGORICAL, _GRADE),
    FeatureDescriptor("TumourStage", CATEGORICAL, ("Ta", "T1", "Tis")),
    FeatureDescriptor("TumourNumberCategory", CATEGORICAL, ("Single", "2-7", "8+")),
    FeatureDescriptor("EQ5DBand", CATEGORICAL, _BAND),
    FeatureDescriptor("PTA", BINARY),
    FeatureDescriptor("Hypertension", BINARY),
    FeatureDescriptor("Diabetes", BINARY),
    FeatureDescriptor("PriorRecurrence", BINARY),
    FeatureDescriptor("ConcomitantCIS", BINARY),
    FeatureDescriptor("PDDGuidedResection", BINARY),
    FeatureDescriptor("ReResection", BINARY),
    FeatureDescriptor("PostOpMitomycin", BINARY),
    FeatureDescriptor("Anticoagulants", BINARY),
    FeatureDescriptor("CardiovascularDisease", BINARY),
    FeatureDescriptor("RenalImpairment", BINARY),
)


def default_schema() -> FeatureSchema:
    return FeatureSchema(_DEFAULT_FEATURES, "Recurrence")
