"""Interpretable tabular binary classification with per-feature embeddings and feature-level attention."""

from .data import Cohort, FeatureSchema, PlantedSignal, ScalerStats, default_schema
from .model import ModelConfig, ModelParams, forward, init_params
from .numerics import RandomSource
from .training import TrainConfig, TrainReport, evaluate, train, train_logistic_baseline

__version__ = "0.1.0"

__all__ = [
    "Cohort",
    "FeatureSchema",
    "ModelConfig",
    "ModelParams",
    "PlantedSignal",
    "RandomSource",
    "ScalerStats",
    "TrainConfig",
    "TrainReport",
    "default_schema",
    "evaluate",
    "forward",
    "init_params",
    "train",
    "train_logistic_baseline",
]
