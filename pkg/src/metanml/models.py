"""Parametric conditional class-probability models over a finite label set.

Three families share one kernel-level encoding (see ``_kernels``):
a saturated categorical table, a linear softmax with the last class
pinned at zero, and an over-parameterized linear softmax kept around
to exercise non-identifiable fits.  All are exponential families in
their natural parameters, so per-class log likelihoods are concave
in theta.
"""

from __future__ import annotations

import numpy as np

from ._kernels import (
    class_probs,
    fisher_kernel,
    grad_log_prob_kernel,
    log_prob_kernel,
)

__all__ = [
    "ConditionalModel",
    "CategoricalTableModel",
    "SoftmaxLinearModel",
    "OverparamSoftmaxModel",
    "unconditional_fisher",
]


class ConditionalModel:
    """Base class: ``p_theta(y | x)`` over classes ``0..num_classes-1``.

    Subclasses fix ``kind`` (the kernel dispatch code), the parameter
    dimension ``dim`` and how a public query point ``x`` is encoded as
    a float vector for the kernels.
    """

    kind: int
    dim: int
    num_classes: int

    def encode_x(self, x):
        raise NotImplementedError

    def _check_theta(self, theta):
        theta = np.ascontiguousarray(theta, dtype=float)
        if theta.shape != (self.dim,):
            raise ValueError(
                f"theta must have shape ({self.dim},), got {theta.shape}")
        if not np.isfinite(theta).all():
            raise ValueError("theta must be finite")
        return theta

    def _check_y(self, y):
        y = int(y)
        if not 0 <= y < self.num_classes:
            raise ValueError(f"class index {y} outside 0..{self.num_classes - 1}")
        return y

    def probs(self, theta, x):
        """Class-probability vector at one query point; sums to 1."""
        theta = self._check_theta(theta)
        return class_probs(self.kind, self.num_classes, theta, self.encode_x(x))

    def log_prob(self, theta, x, y):
        theta = self._check_theta(theta)
        y = self._check_y(y)
        return float(log_prob_kernel(self.kind, self.num_classes, theta,
                                     self.encode_x(x), y))

    def grad_log_prob(self, theta, x, y):
        """Gradient of ``ln p_theta(y|x)`` in theta."""
        theta = self._check_theta(theta)
        y = self._check_y(y)
        return grad_log_prob_kernel(self.kind, self.num_classes, theta,
                                    self.encode_x(x), y)

    def fisher_at(self, theta, x):
        """Conditional Fisher information matrix at (theta, x).

        Computed as the exact finite sum over classes of
        ``p(y) * score(y) score(y)^T``; no sampling anywhere.
        """
        theta = self._check_theta(theta)
        F = fisher_kernel(self.kind, self.num_classes, theta, self.encode_x(x))
        return 0.5 * (F + F.T)


class CategoricalTableModel(ConditionalModel):
    """Saturated table over a finite input set of ``num_cells`` points.

    theta concatenates per-cell logits with the last class pinned at 0,
    so ``dim = num_cells * (num_classes - 1)``.  Query points are cell
    indices.
    """

    kind = 0

    def __init__(self, num_cells, num_classes):
        if num_cells < 1 or num_classes < 2:
            raise ValueError("need num_cells >= 1 and num_classes >= 2")
        self.num_cells = int(num_cells)
        self.num_classes = int(num_classes)
        self.dim = self.num_cells * (self.num_classes - 1)

    def encode_x(self, x):
        if isinstance(x, np.ndarray):
            cell = int(x.reshape(-1)[0])
        else:
            cell = int(x)
        if not 0 <= cell < self.num_cells:
            raise ValueError(f"cell index {cell} outside 0..{self.num_cells - 1}")
        return np.array([float(cell)])


class SoftmaxLinearModel(ConditionalModel):
    """Linear softmax on feature vectors, last class pinned at zero.

    ``dim = (num_classes - 1) * num_features`` with theta the row-major
    weight matrix.
    """

    kind = 1

    def __init__(self, num_features, num_classes):
        if num_features < 1 or num_classes < 2:
            raise ValueError("need num_features >= 1 and num_classes >= 2")
        self.num_features = int(num_features)
        self.num_classes = int(num_classes)
        self.dim = (self.num_classes - 1) * self.num_features

    def encode_x(self, x):
        xv = np.ascontiguousarray(x, dtype=float).reshape(-1)
        if xv.size != self.num_features:
            raise ValueError(
                f"x must have {self.num_features} features, got {xv.size}")
        return xv


class OverparamSoftmaxModel(SoftmaxLinearModel):
    """Linear softmax with one weight row per class and no pinning.

    Deliberately non-identifiable: adding the same vector to every
    class row shifts all logits by the same inner product and leaves
    the probabilities unchanged, so the Fisher matrix is singular.
    """

    kind = 2

    def __init__(self, num_features, num_classes):
        super().__init__(num_features, num_classes)
        self.dim = self.num_classes * self.num_features


def unconditional_fisher(model, theta, xs, weights=None):
    """Fisher information averaged over query points.

    Parameters
    ----------
    xs : sequence of query points in the model's public form.
    weights : optional probability weights (uniform when omitted).
    """
    xs = list(xs)
    if not xs:
        raise ValueError("xs must be nonempty")
    if weights is None:
        w = np.full(len(xs), 1.0 / len(xs))
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (len(xs),):
            raise ValueError("weights must match xs in length")
        if (w < 0).any() or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("weights must be a probability vector")
    out = np.zeros((model.dim, model.dim))
    for wi, x in zip(w, xs):
        out += wi * model.fisher_at(theta, x)
    return out
