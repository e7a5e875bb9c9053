"""End-to-end preparation and training: clean, scale, trim outliers, rebalance, split, fit.

Two rebalancing modes are supported. ``full`` oversamples the whole cleaned
cohort before the split (synthetic minority rows can then land in the
validation part, which leaks information from training rows into
validation); ``train-only`` splits first and oversamples the training part
alone.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass

from .data.cohort import Cohort, ScalerStats, listwise_delete, remove_outliers, standardize, stratified_split
from .data.smote import smote
from .errors import FeatAttnError, ParameterError
from .model import ATTENTION, MEAN_POOL
from .numerics import RandomSource
from .training import LOGISTIC, TrainConfig, TrainReport, train, train_logistic_baseline

SMOTE_FULL = "full"
SMOTE_TRAIN_ONLY = "train-only"
SMOTE_OFF = "off"
ABLATIONS = (ATTENTION, MEAN_POOL, LOGISTIC)


@contextmanager
def stage(name: str):
    """Prefix pipeline errors with the stage that raised them; the type is kept."""
    try:
        yield
    except FeatAttnError as exc:
        if exc.args and isinstance(exc.args[0], str) and not exc.args[0].startswith("["):
            exc.args = (f"[{name}] {exc.args[0]}",) + exc.args[1:]
        raise


@dataclass
class PreparedData:
    train: Cohort
    val: Cohort
    stats: ScalerStats
    cleaned: Cohort


def prepare(cohort: Cohort, seed: int = 0, val_fraction: float = 0.2, z_threshold: float = 3.0,
            smote_mode: str = SMOTE_FULL, k_neighbors: int = 5) -> PreparedData:
    if smote_mode not in (SMOTE_FULL, SMOTE_TRAIN_ONLY, SMOTE_OFF):
        raise ParameterError(f"unknown smote mode {smote_mode!r}")
    rng = RandomSource(seed)
    smote_rng, split_rng = rng.spawn(), rng.spawn()
    with stage("listwise deletion"):
        cleaned = listwise_delete(cohort)
    with stage("standardize"):
        scaled, stats = standardize(cleaned)
    with stage("outlier removal"):
        scaled = remove_outliers(scaled, z_threshold)
    if smote_mode == SMOTE_FULL:
        with stage("smote"):
            scaled = smote(scaled, k_neighbors, smote_rng)
    with stage("split"):
        train_part, val_part = stratified_split(scaled, val_fraction, split_rng)
    if smote_mode == SMOTE_TRAIN_ONLY:
        with stage("smote"):
            train_part = smote(train_part, k_neighbors, smote_rng)
    return PreparedData(train_part, val_part, stats, cleaned)


def fit(prepared: PreparedData, config: TrainConfig, ablation: str = ATTENTION):
    """Train the requested model on prepared data; returns ``(model, report)``."""
    if ablation not in ABLATIONS:
        raise ParameterError(f"unknown ablation {ablation!r}; choose from {ABLATIONS}")
    with stage("train"):
        if ablation == LOGISTIC:
            return train_logistic_baseline(prepared.train, prepared.val, config)
        if config.pooling != ablation:
            config = TrainConfig.from_dict({**config.to_dict(), "pooling": ablation})
        params, _, report = train(prepared.train, prepared.val, config, prepared.stats)
    return params, report


def run(cohort: Cohort, config: TrainConfig, ablation: str = ATTENTION, smote_mode: str = SMOTE_FULL,
        z_threshold: float = 3.0) -> tuple[object, TrainReport, PreparedData]:
    prepared = prepare(cohort, config.seed, config.val_fraction, z_threshold, smote_mode)
    model, report = fit(prepared, config, ablation)
    return model, report, prepared
