from .cohort import (
    Cohort,
    ScalerStats,
    destandardize_values,
    listwise_delete,
    load_csv,
    remove_outliers,
    sample_features,
    standardize,
    stratified_split,
    write_csv,
)
from .schema import BINARY, CATEGORICAL, NUMERICAL, FeatureDescriptor, FeatureSchema, default_schema
from .smote import segment_residual, smote
from .synthetic import PlantedSignal, generate_synthetic_cohort, write_ground_truth, xor_signal

__all__ = [
    "BINARY",
    "CATEGORICAL",
    "NUMERICAL",
    "Cohort",
    "FeatureDescriptor",
    "FeatureSchema",
    "PlantedSignal",
    "ScalerStats",
    "default_schema",
    "destandardize_values",
    "generate_synthetic_cohort",
    "listwise_delete",
    "load_csv",
    "remove_outliers",
    "sample_features",
    "segment_residual",
    "smote",
    "standardize",
    "stratified_split",
    "write_csv",
    "write_ground_truth",
    "xor_signal",
]
