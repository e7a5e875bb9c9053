"""Dense float64 kernels, activations, seeded randomness and a gradient oracle.

Matrices and vectors are plain ``numpy.ndarray`` objects of dtype float64.
``matmul`` deliberately avoids BLAS: the accumulation over the inner
dimension runs in a fixed order that does not depend on how many rows are
in the batch, which is what makes single-sample and batched inference
agree bit for bit.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError, ShapeError

__all__ = [
    "RandomSource",
    "as_matrix",
    "as_vector",
    "finite_diff_grad",
    "matmul",
    "outer_sum",
    "relu",
    "sigmoid",
    "softmax",
    "tanh",
]


def as_vector(data) -> np.ndarray:
    v = np.asarray(data, dtype=np.float64)
    if v.ndim != 1:
        raise ShapeError(f"expected a vector, got shape {v.shape}")
    return v


def as_matrix(data) -> np.ndarray:
    m = np.asarray(data, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"expected a matrix, got shape {m.shape}")
    return m


def matmul(a, b) -> np.ndarray:
    """Matrix product with a batch-size independent summation order.

    ``a`` may carry leading batch axes: ``(..., m, n) @ (n, p)``. The inner
    dimension is reduced left to right, one rank-1 update at a time.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim < 2 or b.ndim != 2 or a.shape[-1] != b.shape[0]:
        raise ShapeError(f"cannot multiply shapes {a.shape} and {b.shape}")
    n = b.shape[0]
    if n == 0:
        return np.zeros(a.shape[:-1] + (b.shape[1],))
    out = a[..., :, 0, None] * b[0]
    for j in range(1, n):
        out += a[..., :, j, None] * b[j]
    return out


def outer_sum(a, b) -> np.ndarray:
    """``a.T @ b`` for weight gradients, where the inner axis is the batch.

    Uses einsum's own (non-BLAS) loops: deterministic, and fast when the
    batch is long. Inference never goes through this path.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[0] != b.shape[0]:
        raise ShapeError(f"cannot contract shapes {a.shape} and {b.shape} over the leading axis")
    return np.einsum("ni,nj->ij", a, b)


def softmax(v, axis: int = -1) -> np.ndarray:
    """Max-shifted softmax; exp of raw scores overflows past ~709."""
    v = np.asarray(v, dtype=np.float64)
    if v.size == 0 or v.shape[axis] == 0:
        raise DomainError("softmax of an empty vector")
    if not np.all(np.isfinite(v)):
        raise DomainError("softmax input must be finite")
    z = np.exp(v - v.max(axis=axis, keepdims=True))
    return z / z.sum(axis=axis, keepdims=True)


def relu(x):
    return np.maximum(x, 0.0)


def tanh(x):
    return np.tanh(x)


def sigmoid(x):
    """Logistic function, evaluated without overflow on either tail."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    if out.ndim == 0:
        return float(out)
    return out


def finite_diff_grad(f, x, eps: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of scalar ``f`` at ``x`` (any shape).

    ``x`` is not modified. Non-finite evaluations raise ``DomainError``.
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    x = np.array(x, dtype=np.float64, copy=True)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    g = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        fp = f(x)
        flat[i] = orig - eps
        fm = f(x)
        flat[i] = orig
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise DomainError(f"non-finite function value at coordinate {i}")
        g[i] = (fp - fm) / (2.0 * eps)
    return grad


class RandomSource:
    """Seeded random stream backed by numpy's PCG64 generator.

    Every stochastic stage (initialisation, SMOTE, splits, dropout,
    shuffling, synthetic data) draws from one of these, so a seed fully
    determines a run.
    """

    algorithm = "numpy.PCG64"

    def __init__(self, seed: int = 0):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def gaussian(self, mean: float = 0.0, stddev: float = 1.0, size=None):
        if stddev < 0:
            raise DomainError(f"stddev must be >= 0, got {stddev}")
        if stddev == 0:
            return mean if size is None else np.full(size, float(mean))
        return self._gen.normal(mean, stddev, size)

    def uniform(self, lo: float = 0.0, hi: float = 1.0, size=None):
        if not lo <= hi:
            raise DomainError(f"invalid uniform range [{lo}, {hi})")
        return self._gen.uniform(lo, hi, size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def bernoulli(self, p, size=None):
        return (self._gen.random(size) < p).astype(np.int64)

    def spawn(self) -> "RandomSource":
        """Independent child stream, derived deterministically from this one."""
        return RandomSource(int(self._gen.integers(0, 2**63 - 1)))
