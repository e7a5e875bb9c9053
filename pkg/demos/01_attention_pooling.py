"""
Attention pooling on a handful of embeddings
============================================

Every feature becomes a d-dimensional vector. A shared scorer turns each
vector into one number, softmax turns the numbers into weights, and the
weighted average of the vectors is what the classifier head sees.
"""

# %%
# Three features, two dimensions each. The scorer has one hidden unit.
import numpy as np

from featattn.model import attention_forward

X = np.array([[0.0, 1.0], [2.0, 0.5], [-1.0, -1.0]])
W = np.array([[1.0, 0.5]])
b = np.zeros(1)
w = np.array([1.5])

h, alpha, _ = attention_forward(X, W, b, w)
print("weights:", alpha.round(4), "sum:", alpha.sum())
print("pooled vector:", h.round(4))

# %%
# The pooled vector is a convex combination, so it never leaves the box
# spanned by the inputs.
print("inside the box:", np.all(h >= X.min(axis=0)) and np.all(h <= X.max(axis=0)))

# %%
# Shuffling the features shuffles the weights the same way and leaves the
# pooled vector alone, because every position shares one scorer.
perm = np.array([2, 0, 1])
h2, alpha2, _ = attention_forward(X[perm], W, b, w)
print("permuted weights match:", np.allclose(alpha2, alpha[perm]))
print("pooled vector unchanged:", np.allclose(h2, h))
