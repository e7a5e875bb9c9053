"""Cohort container, CSV ingest, cleaning, scaling and splitting.

A cohort stores all features in one float64 matrix whose columns follow the
schema order. Numerical columns hold measurements, categorical columns hold
category indices, and binary columns hold 0/1. ``NaN`` marks a missing cell.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ..errors import DegenerateCohortError, DomainError, FormatError, ParameterError, ParseError, SchemaError
from ..numerics import RandomSource
from .schema import BINARY, CATEGORICAL, NUMERICAL, FeatureSchema


@dataclass
class Cohort:
    schema: FeatureSchema
    values: np.ndarray
    labels: np.ndarray
    provenance: str = "raw"
    scaled: bool = False
    ids: np.ndarray | None = None
    # (N, 2) input-row indices of (base, neighbour) for SMOTE rows, -1 otherwise
    parents: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.values.ndim != 2 or self.values.shape[1] != len(self.schema):
            raise SchemaError(
                f"values shape {self.values.shape} does not match {len(self.schema)} schema features"
            )
        if self.labels.shape != (self.values.shape[0],):
            raise SchemaError("one label per sample required")
        if not np.all((self.labels == 0) | (self.labels == 1)):
            raise SchemaError("labels must be 0 or 1")
        if self.ids is None:
            self.ids = np.arange(len(self.labels), dtype=np.int64)
        self.ids = np.asarray(self.ids, dtype=np.int64)
        self._check_codes()

    def _check_codes(self):
        for j, f in enumerate(self.schema.features):
            if f.kind == NUMERICAL:
                continue
            col = self.values[:, j]
            col = col[~np.isnan(col)]
            if np.any(col != np.round(col)) or np.any(col < 0) or np.any(col >= f.cardinality):
                raise SchemaError(f"feature {f.name!r} has codes outside [0, {f.cardinality})")

    def __len__(self):
        return len(self.labels)

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.values)

    @property
    def synthetic(self) -> np.ndarray:
        if self.parents is None:
            return np.zeros(len(self), dtype=bool)
        return self.parents[:, 0] >= 0

    def class_counts(self) -> tuple[int, int]:
        n1 = int(self.labels.sum())
        return len(self) - n1, n1

    def subset(self, idx, provenance: str | None = None) -> "Cohort":
        idx = np.asarray(idx, dtype=np.int64)
        return replace(
            self,
            values=self.values[idx].copy(),
            labels=self.labels[idx].copy(),
            ids=self.ids[idx].copy(),
            parents=None if self.parents is None else self.parents[idx].copy(),
            provenance=provenance or self.provenance,
        )

    def codes(self, j: int) -> np.ndarray:
        return self.values[:, j].astype(np.int64)

    def to_csv(self, path, stats: "ScalerStats | None" = None) -> None:
        """Write in the ingest format; scaled cohorts need ``stats`` to undo scaling."""
        values = self.values
        if self.scaled:
            if stats is None:
                raise DomainError("scaled cohort needs ScalerStats to be written back to raw units")
            values = destandardize_values(values, self.schema, stats)
        write_csv(path, self.schema, values, self.labels)


@dataclass
class ScalerStats:
    """Per-numerical-feature population mean and standard deviation."""

    names: list[str]
    mean: np.ndarray
    std: np.ndarray

    def to_dict(self) -> dict:
        return {"names": list(self.names), "mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ScalerStats":
        return cls(list(d["names"]), np.asarray(d["mean"], float), np.asarray(d["std"], float))


def _format_number(x: float) -> str:
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def write_csv(path, schema: FeatureSchema, values: np.ndarray, labels: np.ndarray) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(schema.names + [schema.label_name])
        for row, y in zip(values, labels):
            cells = []
            for f, v in zip(schema.features, row):
                if np.isnan(v):
                    cells.append("")
                elif f.kind == CATEGORICAL:
                    cells.append(f.categories[int(v)])
                elif f.kind == BINARY:
                    cells.append(str(int(v)))
                else:
                    cells.append(_format_number(v))
            cells.append(str(int(y)))
            w.writerow(cells)


def load_csv(path, schema: FeatureSchema) -> Cohort:
    """Parse a cohort CSV. Columns are matched to the schema by header name."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise FormatError(f"{path}: missing header row")
        header = [h.strip() for h in header]
        expected = set(schema.names) | {schema.label_name}
        if set(header) != expected or len(header) != len(expected):
            missing = sorted(expected - set(header))
            extra = sorted(set(header) - expected)
            raise FormatError(f"{path}: header mismatch (missing {missing}, unexpected {extra})")
        pos = {name: header.index(name) for name in expected}
        rows, labels = [], []
        for r, cells in enumerate(reader, start=1):
            if not cells or all(not c.strip() for c in cells):
                continue
            if len(cells) != len(header):
                raise ParseError(f"expected {len(header)} cells, found {len(cells)}", row=r)
            rows.append(_parse_row(cells, pos, schema, r))
            lab = cells[pos[schema.label_name]].strip()
            if lab not in ("0", "1"):
                raise ParseError(f"label must be 0 or 1, got {lab!r}", row=r, column=schema.label_name)
            labels.append(int(lab))
    values = np.array(rows, dtype=np.float64).reshape(len(rows), len(schema))
    return Cohort(schema, values, np.array(labels, dtype=np.int64), provenance="raw")


def _parse_row(cells, pos, schema: FeatureSchema, r: int) -> list[float]:
    out = []
    for f in schema.features:
        text = cells[pos[f.name]].strip()
        if text == "":
            out.append(math.nan)
        elif f.kind == NUMERICAL:
            try:
                v = float(text)
            except ValueError:
                raise ParseError(f"non-numeric value {text!r}", row=r, column=f.name) from None
            if not math.isfinite(v):
                raise ParseError(f"non-finite value {text!r}", row=r, column=f.name)
            out.append(v)
        elif f.kind == BINARY:
            if text not in ("0", "1"):
                raise ParseError(f"binary value must be 0 or 1, got {text!r}", row=r, column=f.name)
            out.append(float(text))
        else:
            try:
                out.append(float(f.categories.index(text)))
            except ValueError:
                raise ParseError(f"unknown category label {text!r}", row=r, column=f.name) from None
    return out


def listwise_delete(cohort: Cohort) -> Cohort:
    keep = ~cohort.missing.any(axis=1)
    if not keep.any():
        raise DegenerateCohortError("every sample has a missing value; nothing left after deletion")
    return cohort.subset(np.flatnonzero(keep), provenance="cleaned")


def standardize(cohort: Cohort, stats: ScalerStats | None = None) -> tuple[Cohort, ScalerStats]:
    """Z-score numerical columns; training stats are computed when ``stats`` is None.

    Zero-variance columns map to 0 and keep ``std = 0`` in the stats.
    """
    if cohort.scaled:
        raise DomainError("cohort is already standardized")
    if cohort.missing.any():
        raise DomainError("standardize requires a cohort without missing values")
    num = cohort.schema.indices(NUMERICAL)
    names = [cohort.schema.features[j].name for j in num]
    if stats is None:
        block = cohort.values[:, num]
        stats = ScalerStats(names, block.mean(axis=0), block.std(axis=0))
    elif stats.names != names:
        raise SchemaError(f"scaler stats cover {stats.names}, cohort has {names}")
    values = cohort.values.copy()
    values[:, num] = _scale(values[:, num], stats)
    return replace(cohort, values=values, scaled=True), stats


def _scale(block, stats):
    safe = np.where(stats.std > 0, stats.std, 1.0)
    return np.where(stats.std > 0, (block - stats.mean) / safe, 0.0)


def destandardize_values(values: np.ndarray, schema: FeatureSchema, stats: ScalerStats) -> np.ndarray:
    num = schema.indices(NUMERICAL)
    out = values.copy()
    out[:, num] = values[:, num] * stats.std + stats.mean
    return out


def remove_outliers(cohort: Cohort, z_threshold: float = 3.0) -> Cohort:
    if not cohort.scaled:
        raise DomainError("outlier removal expects a standardized cohort")
    num = cohort.schema.indices(NUMERICAL)
    if not num:
        return cohort
    keep = ~(np.abs(cohort.values[:, num]) > z_threshold).any(axis=1)
    if not keep.any():
        raise DegenerateCohortError(f"no sample survives |z| <= {z_threshold}")
    if keep.all():
        return cohort
    return cohort.subset(np.flatnonzero(keep))


def stratified_split(cohort: Cohort, val_fraction: float, rng: RandomSource) -> tuple[Cohort, Cohort]:
    """Per-class shuffle, then the first ``round(fraction * n_class)`` go to validation."""
    if not 0.0 < val_fraction < 1.0:
        raise ParameterError(f"val_fraction must lie in (0, 1), got {val_fraction}")
    val_idx, train_idx = [], []
    for cls in (0, 1):
        members = np.flatnonzero(cohort.labels == cls)
        members = members[rng.permutation(len(members))]
        n_val = int(round(val_fraction * len(members)))
        val_idx.append(members[:n_val])
        train_idx.append(members[n_val:])
    val_idx = np.sort(np.concatenate(val_idx))
    train_idx = np.sort(np.concatenate(train_idx))
    if len(val_idx) == 0 or len(train_idx) == 0:
        raise ParameterError(
            f"val_fraction {val_fraction} leaves an empty part on {len(cohort)} samples"
        )
    return cohort.subset(train_idx), cohort.subset(val_idx)


def sample_features(cohort: Cohort, i: int) -> dict:
    """Row ``i`` as ``{feature name: value or category label}``."""
    out = {}
    for f, v in zip(cohort.schema.features, cohort.values[i]):
        if np.isnan(v):
            out[f.name] = None
        elif f.kind == CATEGORICAL:
            out[f.name] = f.categories[int(v)]
        elif f.kind == BINARY:
            out[f.name] = int(v)
        else:
            out[f.name] = float(v)
    return out
