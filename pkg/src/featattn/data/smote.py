"""SMOTE oversampling for mixed numerical / categorical / binary tables."""

from __future__ import annotations

import numpy as np

from ..errors import DomainError, ParameterError
from ..numerics import RandomSource
from .cohort import Cohort
from .schema import NUMERICAL


def mixed_distances(values: np.ndarray, num_idx: list[int], cat_idx: list[int]) -> np.ndarray:
    """Pairwise Euclidean distance; each differing categorical value adds 1 to the squared sum."""
    num = values[:, num_idx]
    cat = values[:, cat_idx]
    d2 = ((num[:, None, :] - num[None, :, :]) ** 2).sum(axis=-1)
    d2 += (cat[:, None, :] != cat[None, :, :]).sum(axis=-1)
    return np.sqrt(d2)


def nearest_neighbors(dist: np.ndarray, k: int) -> np.ndarray:
    """Indices of the ``k`` nearest other rows; ties resolve to the lower index."""
    d = dist.copy()
    np.fill_diagonal(d, np.inf)
    return np.argsort(d, axis=1, kind="stable")[:, :k]


def _vote(neigh_vals: np.ndarray, base_val: float) -> float:
    labels, counts = np.unique(neigh_vals, return_counts=True)
    best = counts.max()
    tied = labels[counts == best]
    if base_val in tied:
        return base_val
    # a tie that excludes the base value goes to the lowest code
    return tied.min()


def smote(cohort: Cohort, k_neighbors: int = 5, rng: RandomSource | None = None) -> Cohort:
    """Append synthetic minority rows until both classes have equal counts.

    Numerical columns interpolate ``base + u * (neighbour - base)`` with
    ``u ~ U[0, 1)``. Categorical and binary columns take the majority value
    among the base's ``k`` minority neighbours (ties go to the base's own
    value). Bases are drawn uniformly from the minority class. The returned
    cohort records ``parents[i] = (base, neighbour)`` as row indices into
    the input for every synthetic row.
    """
    if rng is None:
        rng = RandomSource(0)
    n0, n1 = cohort.class_counts()
    if n0 == 0 or n1 == 0:
        raise DomainError("SMOTE needs both classes present")
    if k_neighbors < 1:
        raise ParameterError("k_neighbors must be >= 1")
    parents = cohort.parents
    if parents is None:
        parents = np.full((len(cohort), 2), -1, dtype=np.int64)
    if n0 == n1:
        return cohort
    minority = 1 if n1 < n0 else 0
    deficit = abs(n0 - n1)
    members = np.flatnonzero(cohort.labels == minority)
    if len(members) <= k_neighbors:
        raise ParameterError(
            f"minority class has {len(members)} samples; need more than k_neighbors={k_neighbors}"
        )
    schema = cohort.schema
    num_idx = schema.indices(NUMERICAL)
    cat_idx = [j for j in range(len(schema)) if j not in num_idx]
    mvals = cohort.values[members]
    neigh = nearest_neighbors(mixed_distances(mvals, num_idx, cat_idx), k_neighbors)

    bases = rng.integers(0, len(members), size=deficit)
    picks = rng.integers(0, k_neighbors, size=deficit)
    gaps = rng.uniform(0.0, 1.0, size=deficit)

    new_rows = np.empty((deficit, len(schema)))
    new_parents = np.empty((deficit, 2), dtype=np.int64)
    for t in range(deficit):
        b, nb = bases[t], neigh[bases[t], picks[t]]
        row = mvals[b].copy()
        row[num_idx] = mvals[b, num_idx] + gaps[t] * (mvals[nb, num_idx] - mvals[b, num_idx])
        for j in cat_idx:
            row[j] = _vote(mvals[neigh[b], j], mvals[b, j])
        new_rows[t] = row
        new_parents[t] = (members[b], members[nb])

    next_id = int(cohort.ids.max()) + 1 if len(cohort) else 0
    return Cohort(
        schema,
        np.vstack([cohort.values, new_rows]),
        np.concatenate([cohort.labels, np.full(deficit, minority)]),
        provenance="oversampled",
        scaled=cohort.scaled,
        ids=np.concatenate([cohort.ids, np.arange(next_id, next_id + deficit)]),
        parents=np.vstack([parents, new_parents]),
    )


def segment_residual(oversampled: Cohort) -> float:
    """Largest distance of any synthetic numerical vector from its parents' segment.

    ``oversampled`` must be the direct output of :func:`smote`, whose leading
    rows are the input rows that ``parents`` indexes. The interpolation
    fraction is re-derived from the coordinate where base and neighbour
    differ most, then every coordinate is compared against it. A fraction
    outside ``[0, 1]`` counts as its distance from that interval.
    """
    if oversampled.parents is None:
        return 0.0
    num = oversampled.schema.indices(NUMERICAL)
    worst = 0.0
    for i in np.flatnonzero(oversampled.synthetic):
        b, nb = oversampled.parents[i]
        base = oversampled.values[b, num]
        delta = oversampled.values[nb, num] - base
        row = oversampled.values[i, num]
        if not np.any(delta):
            worst = max(worst, float(np.abs(row - base).max(initial=0.0)))
            continue
        j = int(np.argmax(np.abs(delta)))
        u = (row[j] - base[j]) / delta[j]
        worst = max(worst, float(np.abs(row - (base + u * delta)).max()), -u, u - 1.0)
    return worst
