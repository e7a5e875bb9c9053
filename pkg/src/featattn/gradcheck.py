"""Compare analytic gradients against central finite differences on tiny random networks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import model
from .data.schema import BINARY, CATEGORICAL, NUMERICAL, FeatureDescriptor, FeatureSchema
from .numerics import RandomSource, finite_diff_grad

TOLERANCE = 1e-4


@dataclass
class GroupResult:
    config_index: int
    group: str
    rel_error: float


@dataclass
class GradcheckReport:
    results: list[GroupResult]
    tolerance: float = TOLERANCE

    @property
    def worst(self) -> GroupResult:
        return max(self.results, key=lambda r: r.rel_error)

    @property
    def passed(self) -> bool:
        return all(r.rel_error < self.tolerance for r in self.results)

    def failures(self) -> list[GroupResult]:
        return [r for r in self.results if not r.rel_error < self.tolerance]


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-5) -> float:
    """Norm-wise relative error ``|a - n| / max(|a|, |n|, floor)``.

    Groups whose true gradient is identically zero (a dense bias feeding
    batch norm) leave only central-difference roundoff, ~1e-11 at
    ``eps = 1e-5``; below ``floor`` the check is effectively absolute.
    """
    diff = np.linalg.norm(analytic - numeric)
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), floor)
    return float(diff / scale)


KINK_MARGIN = 1e-3


def kink_distance(params, values, dropout_seed: int) -> float:
    """Smallest |pre-ReLU activation| in a train-mode pass."""
    _, _, cache = model.forward(values, params, model.TRAIN, RandomSource(dropout_seed), update_running=False)
    layers, _ = cache.mlp
    return min(float(np.abs(y).min()) for _, _, _, y, _ in layers)


def random_tiny_setup(rng: RandomSource, dropout_seed: int = 0):
    """A random schema (n <= 6), config (d <= 4, k <= 3, hidden <= 8) and batch (3 <= B <= 8).

    Central differences are meaningless across a ReLU kink, so draws with a
    pre-activation within ``KINK_MARGIN`` of zero are rejected and redrawn.
    Two-sample batches are excluded: batch norm then maps every unit to
    +-1 and the upstream gradients collapse to roundoff size.
    """
    while True:
        params, values, labels = _draw_setup(rng)
        if kink_distance(params, values, dropout_seed) > KINK_MARGIN:
            return params, values, labels


def _draw_setup(rng: RandomSource):
    n = int(rng.integers(1, 7))
    feats = []
    kinds = (NUMERICAL, CATEGORICAL, BINARY)
    for i in range(n):
        kind = kinds[int(rng.integers(0, 3))]
        cats = tuple(f"c{j}" for j in range(int(rng.integers(2, 5)))) if kind == CATEGORICAL else ()
        feats.append(FeatureDescriptor(f"f{i}", kind, cats))
    schema = FeatureSchema(feats, "y")
    n_layers = int(rng.integers(1, 3))
    config = model.ModelConfig(
        dim=int(rng.integers(1, 5)),
        attn_dim=int(rng.integers(1, 4)),
        hidden=tuple(int(rng.integers(1, 9)) for _ in range(n_layers)),
        dropout=float((0.0, 0.2, 0.4)[int(rng.integers(0, 3))]),
        embed_std=0.5,
    )
    params = model.init_params(schema, config, rng)
    for key, arr in params.weights.items():
        if key.endswith((".b", ".beta", ".gamma")):
            arr += rng.gaussian(0.0, 0.3, size=arr.shape)
    B = int(rng.integers(3, 9))
    values = np.empty((B, n))
    for j, f in enumerate(schema.features):
        if f.kind == NUMERICAL:
            values[:, j] = rng.gaussian(0.0, 1.0, size=B)
        else:
            values[:, j] = rng.integers(0, f.cardinality, size=B)
    labels = rng.integers(0, 2, size=B).astype(np.float64)
    return params, values, labels


def check_params(params, values, labels, dropout_seed: int = 0, eps: float = 1e-5, config_index: int = 0):
    """Per-group relative errors for one network and batch."""

    def loss_now():
        _, _, cache = model.forward(values, params, model.TRAIN, RandomSource(dropout_seed), update_running=False)
        return model.loss_from_logits(cache.logit, labels)

    _, _, cache = model.forward(values, params, model.TRAIN, RandomSource(dropout_seed), update_running=False)
    analytic = model.backward(cache, labels, params)
    out = []
    for key, arr in params.weights.items():
        original = arr.copy()

        def f(x, key=key):
            params.weights[key][...] = x
            return loss_now()

        numeric = finite_diff_grad(f, original, eps)
        params.weights[key][...] = original
        out.append(GroupResult(config_index, key, relative_error(analytic[key], numeric)))
    return out


def run_gradcheck(n_configs: int = 20, seed: int = 0, tolerance: float = TOLERANCE) -> GradcheckReport:
    rng = RandomSource(seed)
    results = []
    for c in range(n_configs):
        params, values, labels = random_tiny_setup(rng, dropout_seed=seed + c)
        results.extend(check_params(params, values, labels, dropout_seed=seed + c, config_index=c))
    return GradcheckReport(results, tolerance)
