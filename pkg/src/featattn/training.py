"""Adam + minibatch BCE training, evaluation metrics and the logistic baseline."""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import model as nn
from .data.cohort import Cohort, ScalerStats, standardize
from .data.schema import CATEGORICAL, FeatureSchema
from .errors import DegenerateCohortError, DomainError, ParameterError, SchemaError, ShapeError
from .numerics import RandomSource, matmul, outer_sum, sigmoid

LOGISTIC = "logistic"


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 250
    batch_size: int = 32
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    val_fraction: float = 0.2
    seed: int = 0
    loss_eps: float = 1e-7
    dim: int = 8
    attn_dim: int = 8
    hidden: tuple[int, ...] = (32, 16)
    dropout: float = 0.3
    pooling: str = nn.ATTENTION
    patience: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.epochs < 1:
            raise ParameterError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 2:
            raise ParameterError("batch_size must be >= 2 (batch norm)")
        if self.lr < 0:
            raise ParameterError("learning rate must be >= 0")
        if not 0.0 < self.val_fraction < 1.0:
            raise ParameterError("val_fraction must lie in (0, 1)")
        if self.patience is not None and self.patience < 1:
            raise ParameterError("patience must be >= 1")

    def model_config(self) -> nn.ModelConfig:
        return nn.ModelConfig(
            dim=self.dim,
            attn_dim=self.attn_dim,
            hidden=self.hidden,
            dropout=self.dropout,
            pooling=self.pooling,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        d["hidden"] = tuple(d.get("hidden", (32, 16)))
        return cls(**d)


# -- loss and optimiser ---------------------------------------------------------


def bce_loss(p, y, eps: float = 1e-7) -> float:
    p = np.asarray(p, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if p.shape != y.shape:
        raise ShapeError(f"predictions {p.shape} and labels {y.shape} differ in shape")
    p = np.clip(p, eps, 1.0 - eps)
    return float(np.mean(-(y * np.log(p) + (1.0 - y) * np.log1p(-p))))


@dataclass
class AdamState:
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0


def adam_step(weights: dict, grads: dict, state: AdamState, lr: float, t: int | None = None,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8,
              flat: np.ndarray | None = None) -> AdamState:
    """Update ``weights`` in place with bias-corrected Adam; returns the state.

    ``flat`` may be a contiguous buffer that every weight array views into
    (as ``ModelParams.flat``); the update then runs as one vector operation.
    """
    t = state.t + 1 if t is None else t
    if t < 1:
        raise ParameterError("Adam step counter starts at 1")
    if set(grads) != set(weights):
        raise ShapeError("gradient keys do not match parameter keys")
    for key, w in weights.items():
        if grads[key].shape != w.shape:
            raise ShapeError(f"{key}: gradient {grads[key].shape} vs parameter {w.shape}")
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    if flat is not None:
        pairs = [("", flat, np.concatenate([grads[k].ravel() for k in weights]))]
    else:
        pairs = [(key, w, grads[key]) for key, w in weights.items()]
    for key, w, g in pairs:
        m = state.m.setdefault(key, np.zeros_like(w))
        v = state.v.setdefault(key, np.zeros_like(w))
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        w -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    state.t = t
    return state


# -- logistic baseline ------------------------------------------------------------


def one_hot_design(values: np.ndarray, schema: FeatureSchema) -> np.ndarray:
    """Standardized numerical columns, 0/1 binary columns, one-hot categories."""
    cols = []
    for j, f in enumerate(schema.features):
        col = values[:, j]
        if f.kind == CATEGORICAL:
            cols.append((col[:, None] == np.arange(f.cardinality)).astype(np.float64))
        else:
            cols.append(col[:, None])
    return np.hstack(cols)


@dataclass
class LogisticModel:
    schema: FeatureSchema
    weights: dict[str, np.ndarray]
    seed: int | None = None
    kind: str = LOGISTIC

    @classmethod
    def init(cls, schema: FeatureSchema, rng: RandomSource) -> "LogisticModel":
        width = sum(f.cardinality if f.kind == CATEGORICAL else 1 for f in schema.features)
        limit = math.sqrt(6.0 / (width + 1))
        return cls(schema, {"W": rng.uniform(-limit, limit, size=(width, 1)), "b": np.zeros(1)}, rng.seed)

    def logits(self, values) -> np.ndarray:
        X = one_hot_design(np.atleast_2d(values), self.schema)
        return matmul(X, self.weights["W"])[:, 0] + self.weights["b"][0]

    def predict_proba(self, values) -> np.ndarray:
        return sigmoid(self.logits(values))

    def gradients(self, values, labels) -> dict[str, np.ndarray]:
        X = one_hot_design(values, self.schema)
        p = sigmoid(matmul(X, self.weights["W"])[:, 0] + self.weights["b"][0])
        dl = (p - labels) / len(labels)
        return {"W": outer_sum(X, dl[:, None]), "b": np.array([dl.sum()])}


def predict_proba(model, values) -> np.ndarray:
    if isinstance(values, Cohort):
        values = values.values
    if isinstance(model, LogisticModel):
        return model.predict_proba(values)
    return nn.predict_proba(values, model)


# -- metrics ----------------------------------------------------------------------------


@dataclass
class Metrics:
    accuracy: float
    sensitivity: float
    specificity: float
    tp: int
    tn: int
    fp: int
    fn: int
    loss: float

    @property
    def n(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("sensitivity", "specificity"):
            if math.isnan(d[key]):
                d[key] = None
        return d


def metrics_from_predictions(p, y, loss_eps: float = 1e-7) -> Metrics:
    """Threshold at 0.5 with ``p >= 0.5`` counted as positive."""
    p = np.asarray(p, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(y) == 0:
        raise DomainError("cannot evaluate an empty cohort")
    pred = (p >= 0.5).astype(np.int64)
    tp = int(np.sum((pred == 1) & (y == 1)))
    tn = int(np.sum((pred == 0) & (y == 0)))
    fp = int(np.sum((pred == 1) & (y == 0)))
    fn = int(np.sum((pred == 0) & (y == 1)))
    sens = tp / (tp + fn) if tp + fn else math.nan
    specif = tn / (tn + fp) if tn + fp else math.nan
    return Metrics((tp + tn) / len(y), sens, specif, tp, tn, fp, fn, bce_loss(p, y, loss_eps))


def evaluate(params, stats: ScalerStats | None, cohort: Cohort, loss_eps: float = 1e-7) -> Metrics:
    """Infer-mode metrics; a raw cohort is first scaled with ``stats``."""
    if len(cohort) == 0:
        raise DomainError("cannot evaluate an empty cohort")
    if params.schema != cohort.schema:
        raise SchemaError("cohort schema differs from the model schema")
    if not cohort.scaled:
        if stats is None:
            raise DomainError("raw cohort needs ScalerStats")
        cohort, _ = standardize(cohort, stats)
    return metrics_from_predictions(predict_proba(params, cohort.values), cohort.labels, loss_eps)


# -- training loop ------------------------------------------------------------------------


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float


@dataclass
class TrainReport:
    records: list[EpochRecord]
    final_val: Metrics
    final_train: Metrics
    wall_seconds: float
    config: TrainConfig
    seed: int
    model_kind: str = nn.ATTENTION

    def curves_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch", "train_loss", "train_acc", "val_loss", "val_acc"])
        for r in self.records:
            w.writerow([r.epoch, repr(r.train_loss), repr(r.train_acc), repr(r.val_loss), repr(r.val_acc)])
        return buf.getvalue()

    def write_curves(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.curves_csv())

    def to_dict(self) -> dict:
        return {
            "model_kind": self.model_kind,
            "seed": self.seed,
            "epochs_run": len(self.records),
            "final_train": self.final_train.to_dict(),
            "final_val": self.final_val.to_dict(),
            "config": self.config.to_dict(),
        }

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


def minibatches(n: int, batch_size: int, rng: RandomSource) -> list[np.ndarray]:
    """Shuffled index batches; a trailing singleton is merged into the previous batch."""
    order = rng.permutation(n)
    batches = [order[i : i + batch_size] for i in range(0, n, batch_size)]
    if len(batches) > 1 and len(batches[-1]) == 1:
        last = batches.pop()
        batches[-1] = np.concatenate([batches[-1], last])
    return batches


def _check_cohorts(train_cohort: Cohort, val_cohort: Cohort):
    if not (train_cohort.scaled and val_cohort.scaled):
        raise DomainError("train and validation cohorts must both be standardized")
    if train_cohort.schema != val_cohort.schema:
        raise SchemaError("train and validation cohorts use different schemas")
    n0, n1 = train_cohort.class_counts()
    if n0 < 2 or n1 < 2:
        raise DegenerateCohortError(f"training cohort needs >= 2 samples per class, has {n0}/{n1}")
    if len(val_cohort) == 0:
        raise DegenerateCohortError("validation cohort is empty")


def _fit(model, step_grads, train_cohort: Cohort, val_cohort: Cohort, config: TrainConfig,
         shuffle_rng: RandomSource, kind: str) -> TrainReport:
    start = time.perf_counter()
    state = AdamState()
    records = []
    best, stale = math.inf, 0
    X, y = train_cohort.values, train_cohort.labels.astype(np.float64)
    for epoch in range(1, config.epochs + 1):
        for idx in minibatches(len(y), config.batch_size, shuffle_rng):
            grads = step_grads(X[idx], y[idx])
            adam_step(model.weights, grads, state, config.lr, None, config.beta1, config.beta2,
                      config.adam_eps, flat=getattr(model, "flat", None))
            if hasattr(model, "version"):
                model.version += 1
        tr = metrics_from_predictions(predict_proba(model, X), train_cohort.labels, config.loss_eps)
        va = metrics_from_predictions(predict_proba(model, val_cohort.values), val_cohort.labels, config.loss_eps)
        records.append(EpochRecord(epoch, tr.loss, tr.accuracy, va.loss, va.accuracy))
        if config.patience is not None:
            if va.loss < best:
                best, stale = va.loss, 0
            else:
                stale += 1
                if stale >= config.patience:
                    break
    return TrainReport(records, va, tr, time.perf_counter() - start, config, config.seed, kind)


def train(train_cohort: Cohort, val_cohort: Cohort, config: TrainConfig = TrainConfig(),
          stats: ScalerStats | None = None):
    """Fit the embedding-attention network (or its mean-pool ablation).

    Returns ``(params, stats, report)``; the parameters are those after the
    last epoch.
    """
    _check_cohorts(train_cohort, val_cohort)
    rng = RandomSource(config.seed)
    init_rng, shuffle_rng, dropout_rng = rng.spawn(), rng.spawn(), rng.spawn()
    params = nn.init_params(train_cohort.schema, config.model_config(), init_rng)
    params.seed = config.seed

    def step_grads(xb, yb):
        _, _, cache = nn.forward(xb, params, nn.TRAIN, dropout_rng)
        return nn.backward(cache, yb, params)

    report = _fit(params, step_grads, train_cohort, val_cohort, config, shuffle_rng, config.pooling)
    return params, stats, report


def train_logistic_baseline(train_cohort: Cohort, val_cohort: Cohort, config: TrainConfig = TrainConfig()):
    """Single affine layer + sigmoid on one-hot inputs, same loss, optimiser and epochs."""
    _check_cohorts(train_cohort, val_cohort)
    rng = RandomSource(config.seed)
    init_rng, shuffle_rng = rng.spawn(), rng.spawn()
    baseline = LogisticModel.init(train_cohort.schema, init_rng)
    baseline.seed = config.seed
    report = _fit(baseline, baseline.gradients, train_cohort, val_cohort, config, shuffle_rng, LOGISTIC)
    return baseline, report
