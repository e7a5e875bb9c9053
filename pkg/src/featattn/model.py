"""Embedding + feature-attention network, forward and backward.

Every feature becomes a ``d``-vector: categorical and binary features look up
a row of their own table, numerical features map ``v -> v * scale + offset``.
A shared attention block scores each embedding with
``s_i = w . tanh(W x_i + b)``, normalises the scores with a softmax over
features and pools ``h = sum_i alpha_i x_i``. An MLP head
(affine -> batch norm -> ReLU -> dropout, repeated) ends in one sigmoid unit.

Parameters live in a flat, ordered ``dict`` of arrays keyed like
``"embed.SmokingStatus"`` or ``"dense0.W"``; gradients use the same keys.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .data.cohort import Cohort
from .data.schema import NUMERICAL, FeatureSchema
from .errors import BatchSizeError, ParameterError, SchemaError, ShapeError, StateError
from .numerics import RandomSource, matmul, outer_sum, relu, sigmoid, softmax

TRAIN = "train"
INFER = "infer"

ATTENTION = "attention"
MEAN_POOL = "mean-pool"


@dataclass(frozen=True)
class ModelConfig:
    dim: int = 8
    attn_dim: int = 8
    hidden: tuple[int, ...] = (32, 16)
    dropout: float = 0.3
    bn_momentum: float = 0.1
    bn_eps: float = 1e-5
    pooling: str = ATTENTION
    embed_std: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.dim < 1 or self.attn_dim < 1:
            raise ParameterError("dim and attn_dim must be >= 1")
        if any(h < 1 for h in self.hidden):
            raise ParameterError(f"hidden sizes must be >= 1, got {self.hidden}")
        if not 0.0 <= self.dropout < 1.0:
            raise ParameterError("dropout must lie in [0, 1)")
        if self.pooling not in (ATTENTION, MEAN_POOL):
            raise ParameterError(f"unknown pooling {self.pooling!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d


@dataclass
class ModelParams:
    schema: FeatureSchema
    config: ModelConfig
    weights: dict[str, np.ndarray]
    buffers: dict[str, np.ndarray] = field(default_factory=dict)
    seed: int | None = None
    # bumped on every in-place update so stale caches can be detected
    version: int = 0

    def __post_init__(self):
        # one contiguous buffer; the dict entries are views into it
        total = sum(v.size for v in self.weights.values())
        self.flat = np.empty(total)
        views, pos = {}, 0
        for key, arr in self.weights.items():
            arr = np.asarray(arr, dtype=np.float64)
            view = self.flat[pos : pos + arr.size].reshape(arr.shape)
            view[...] = arr
            views[key] = view
            pos += arr.size
        self.weights = views

    def copy(self) -> "ModelParams":
        return ModelParams(
            self.schema,
            self.config,
            {k: v.copy() for k, v in self.weights.items()},
            {k: v.copy() for k, v in self.buffers.items()},
            self.seed,
            self.version,
        )

    def n_parameters(self) -> int:
        return sum(v.size for v in self.weights.values())


def _xavier(rng: RandomSource, fan_in: int, fan_out: int, shape) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_params(schema: FeatureSchema, config: ModelConfig, rng: RandomSource) -> ModelParams:
    d, k = config.dim, config.attn_dim
    w: dict[str, np.ndarray] = {}
    for f in schema.features:
        if f.kind == NUMERICAL:
            w[f"scale.{f.name}"] = rng.gaussian(0.0, config.embed_std, size=d)
            w[f"offset.{f.name}"] = rng.gaussian(0.0, config.embed_std, size=d)
        else:
            w[f"embed.{f.name}"] = rng.gaussian(0.0, config.embed_std, size=(f.cardinality, d))
    w["attn.W"] = _xavier(rng, d, k, (k, d))
    w["attn.b"] = np.zeros(k)
    w["attn.w"] = _xavier(rng, k, 1, k)
    buffers = {}
    fan_in = d
    for layer, width in enumerate(config.hidden):
        w[f"dense{layer}.W"] = _xavier(rng, fan_in, width, (fan_in, width))
        w[f"dense{layer}.b"] = np.zeros(width)
        w[f"bn{layer}.gamma"] = np.ones(width)
        w[f"bn{layer}.beta"] = np.zeros(width)
        buffers[f"bn{layer}.running_mean"] = np.zeros(width)
        buffers[f"bn{layer}.running_var"] = np.ones(width)
        fan_in = width
    w["out.W"] = _xavier(rng, fan_in, 1, (fan_in, 1))
    w["out.b"] = np.zeros(1)
    return ModelParams(schema, config, w, buffers, seed=rng.seed)


# -- embeddings ---------------------------------------------------------------


def _as_batch(values, schema: FeatureSchema) -> np.ndarray:
    if isinstance(values, Cohort):
        if values.schema != schema:
            raise SchemaError("cohort schema differs from the model schema")
        values = values.values
    x = np.asarray(values, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != len(schema):
        raise ShapeError(f"expected (batch, {len(schema)}) feature values, got {x.shape}")
    return x


def embed_batch(values: np.ndarray, params: ModelParams) -> np.ndarray:
    """``(B, n)`` standardized values -> ``(B, n, d)`` embeddings in schema order."""
    schema, w = params.schema, params.weights
    x = _as_batch(values, schema)
    out = np.empty((x.shape[0], len(schema), params.config.dim))
    for j, f in enumerate(schema.features):
        col = x[:, j]
        if f.kind == NUMERICAL:
            out[:, j, :] = col[:, None] * w[f"scale.{f.name}"] + w[f"offset.{f.name}"]
        else:
            idx = col.astype(np.int64)
            if np.any(idx != col) or np.any(idx < 0) or np.any(idx >= f.cardinality):
                raise IndexError(f"feature {f.name!r}: code outside [0, {f.cardinality})")
            out[:, j, :] = w[f"embed.{f.name}"][idx]
    return out


def embed_sample(sample, params: ModelParams) -> list[np.ndarray]:
    """One sample's ``n`` feature embeddings, each a ``d``-vector."""
    return list(embed_batch(np.asarray(sample, dtype=np.float64)[None, :], params)[0])


# -- attention ----------------------------------------------------------------


def attention_forward(X, W, b, w):
    """Pool ``(..., n, d)`` embeddings into ``(..., d)``.

    Returns ``(h, alpha, cache)``; ``alpha`` has shape ``(..., n)``.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim < 2 or X.shape[-2] < 1:
        raise ShapeError(f"attention needs (..., n>=1, d) embeddings, got {X.shape}")
    k, d = W.shape
    if X.shape[-1] != d or b.shape != (k,) or w.shape != (k,):
        raise ShapeError(
            f"attention shapes disagree: X {X.shape}, W {W.shape}, b {b.shape}, w {w.shape}"
        )
    U = np.tanh(matmul(X, W.T) + b)
    s = matmul(U, w[:, None])[..., 0]
    alpha = softmax(s, axis=-1)
    h = (alpha[..., :, None] * X).sum(axis=-2)
    return h, alpha, (X, U, alpha)


def attention_backward(dh, cache, W, w):
    X, U, alpha = cache
    dalpha = (X * dh[..., None, :]).sum(axis=-1)
    ds = alpha * (dalpha - (alpha * dalpha).sum(axis=-1, keepdims=True))
    dU = ds[..., None] * w
    dZ = dU * (1.0 - U**2)
    flatZ = dZ.reshape(-1, dZ.shape[-1])
    flatX = X.reshape(-1, X.shape[-1])
    grads = {
        "attn.w": (ds[..., None] * U).reshape(-1, U.shape[-1]).sum(axis=0),
        "attn.W": outer_sum(flatZ, flatX),
        "attn.b": flatZ.sum(axis=0),
    }
    dX = alpha[..., None] * dh[..., None, :] + matmul(dZ, W)
    return dX, grads


def mean_pool_forward(X):
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[-2]
    alpha = np.full(X.shape[:-1], 1.0 / n)
    return X.sum(axis=-2) / n, alpha


# -- MLP head -----------------------------------------------------------------


def mlp_forward(H, params: ModelParams, mode: str, rng: RandomSource | None = None, update_running: bool = True):
    """Hidden stack plus sigmoid output on a ``(B, d)`` batch.

    Returns ``(p, logit, cache)``. In train mode the batch statistics feed
    batch norm, running statistics are refreshed (unless
    ``update_running=False``) and inverted dropout is applied.
    """
    cfg, w = params.config, params.weights
    H = np.asarray(H, dtype=np.float64)
    B = H.shape[0]
    if mode == TRAIN and B < 2:
        raise BatchSizeError("train-mode batch norm needs at least 2 samples per batch")
    if mode not in (TRAIN, INFER):
        raise ParameterError(f"unknown mode {mode!r}")
    if mode == TRAIN and cfg.dropout > 0 and rng is None:
        raise ParameterError("train mode with dropout needs a RandomSource")
    layers = []
    a = H
    for layer in range(len(cfg.hidden)):
        x_in = a
        z = matmul(x_in, w[f"dense{layer}.W"]) + w[f"dense{layer}.b"]
        if mode == TRAIN:
            mu = z.mean(axis=0)
            var = z.var(axis=0)
            if update_running:
                m = cfg.bn_momentum
                rm, rv = params.buffers[f"bn{layer}.running_mean"], params.buffers[f"bn{layer}.running_var"]
                rm *= 1.0 - m
                rm += m * mu
                rv *= 1.0 - m
                rv += m * var
        else:
            mu = params.buffers[f"bn{layer}.running_mean"]
            var = params.buffers[f"bn{layer}.running_var"]
        inv_std = 1.0 / np.sqrt(var + cfg.bn_eps)
        zhat = (z - mu) * inv_std
        y = w[f"bn{layer}.gamma"] * zhat + w[f"bn{layer}.beta"]
        r = relu(y)
        mask = None
        if mode == TRAIN and cfg.dropout > 0:
            keep = rng.uniform(0.0, 1.0, size=r.shape) >= cfg.dropout
            mask = keep / (1.0 - cfg.dropout)
            a = r * mask
        else:
            a = r
        layers.append((x_in, zhat, inv_std, y, mask))
    logit = matmul(a, w["out.W"])[:, 0] + w["out.b"][0]
    p = sigmoid(logit)
    return p, logit, (layers, a)


def mlp_backward(dlogit, cache, params: ModelParams):
    layers, a_last = cache
    w = params.weights
    g = {}
    dl = dlogit[:, None]
    g["out.W"] = outer_sum(a_last, dl)
    g["out.b"] = dl.sum(axis=0)
    da = matmul(dl, w["out.W"].T)
    B = dl.shape[0]
    for layer in reversed(range(len(layers))):
        x_in, zhat, inv_std, y, mask = layers[layer]
        dr = da if mask is None else da * mask
        dy = dr * (y > 0)
        g[f"bn{layer}.gamma"] = (dy * zhat).sum(axis=0)
        g[f"bn{layer}.beta"] = dy.sum(axis=0)
        dzhat = dy * w[f"bn{layer}.gamma"]
        dz = inv_std / B * (B * dzhat - dzhat.sum(axis=0) - zhat * (dzhat * zhat).sum(axis=0))
        g[f"dense{layer}.W"] = outer_sum(x_in, dz)
        g[f"dense{layer}.b"] = dz.sum(axis=0)
        da = matmul(dz, w[f"dense{layer}.W"].T)
    return da, g


# -- full network -------------------------------------------------------------


@dataclass
class ForwardCache:
    mode: str
    version: int
    params_id: int
    values: np.ndarray
    E: np.ndarray
    attn: tuple | None
    mlp: tuple
    logit: np.ndarray
    p: np.ndarray
    h: np.ndarray


def forward(inputs, params: ModelParams, mode: str = INFER, rng: RandomSource | None = None, update_running: bool = True):
    """Run the network on standardized feature values.

    ``inputs`` is a ``(B, n)`` array, a single ``(n,)`` sample or a scaled
    Cohort. Returns ``(p, alpha, cache)`` with ``p`` of shape ``(B,)`` and
    ``alpha`` of shape ``(B, n)``.
    """
    values = _as_batch(inputs, params.schema)
    if isinstance(inputs, Cohort) and not inputs.scaled:
        raise StateError("forward expects standardized inputs; apply ScalerStats first")
    E = embed_batch(values, params)
    if params.config.pooling == ATTENTION:
        w = params.weights
        h, alpha, attn_cache = attention_forward(E, w["attn.W"], w["attn.b"], w["attn.w"])
    else:
        h, alpha = mean_pool_forward(E)
        attn_cache = None
    p, logit, mlp_cache = mlp_forward(h, params, mode, rng, update_running)
    cache = ForwardCache(mode, params.version, id(params), values, E, attn_cache, mlp_cache, logit, p, h)
    return p, alpha, cache


def loss_from_logits(logit: np.ndarray, y: np.ndarray) -> float:
    """Mean binary cross-entropy evaluated stably on the logit scale."""
    y = np.asarray(y, dtype=np.float64)
    return float(np.mean(np.logaddexp(0.0, logit) - y * logit))


def backward(cache: ForwardCache, labels, params: ModelParams) -> dict[str, np.ndarray]:
    """Gradients of mean BCE (unclamped, logit form) for every trainable array."""
    labels = np.asarray(labels, dtype=np.float64)
    if cache.mode != TRAIN:
        raise StateError("backward needs the cache of a train-mode forward pass")
    if cache.params_id != id(params) or cache.version != params.version:
        raise StateError("cache is stale: parameters changed since the forward pass")
    if labels.shape != cache.p.shape:
        raise ShapeError(f"labels shape {labels.shape} does not match batch {cache.p.shape}")
    B = labels.shape[0]
    dlogit = (cache.p - labels) / B
    dh, grads = mlp_backward(dlogit, cache.mlp, params)
    w = params.weights
    if params.config.pooling == ATTENTION:
        dE, g_attn = attention_backward(dh, cache.attn, w["attn.W"], w["attn.w"])
        grads.update(g_attn)
    else:
        n = cache.E.shape[1]
        dE = np.broadcast_to(dh[:, None, :] / n, cache.E.shape)
        for key in ("attn.W", "attn.b", "attn.w"):
            grads[key] = np.zeros_like(w[key])
    for j, f in enumerate(params.schema.features):
        col = cache.values[:, j]
        if f.kind == NUMERICAL:
            grads[f"scale.{f.name}"] = (col[:, None] * dE[:, j, :]).sum(axis=0)
            grads[f"offset.{f.name}"] = dE[:, j, :].sum(axis=0)
        else:
            table = np.zeros_like(w[f"embed.{f.name}"])
            np.add.at(table, col.astype(np.int64), dE[:, j, :])
            grads[f"embed.{f.name}"] = table
    return {key: grads[key] for key in w}


def predict_proba(inputs, params: ModelParams) -> np.ndarray:
    p, _, _ = forward(inputs, params, INFER)
    return p
