"""Ground truth, MAP decisions, and exact error accounting.

The ground truth lives on a finite set of query points, so every
misclassification quantity here is an exact finite sum, never an
estimate.  Ties inside an argmax (within 1e-12 of the best value)
are broken uniformly at random from the supplied generator.
"""

from __future__ import annotations

import numpy as np

from .data import Dataset
from .numerics import PROB_FLOOR

__all__ = [
    "TIE_TOL",
    "argmax_tie_break",
    "FiniteMarginal",
    "GroundTruth",
    "misclassification_at",
    "map_misclassification_at",
    "gap_vs_map",
    "misclassification_rate",
]

TIE_TOL = 1e-12


def argmax_tie_break(values, tie_rng=None):
    """Index of the largest entry; near-ties resolved uniformly at random.

    Entries within ``TIE_TOL`` of the maximum count as tied.  With no
    generator supplied a fresh unseeded one is used, so pass an explicit
    ``numpy.random.Generator`` whenever reproducibility matters.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("values must be a nonempty 1-d vector")
    top = v.max()
    tied = np.flatnonzero(v >= top - TIE_TOL)
    if tied.size == 1:
        return int(tied[0])
    if tie_rng is None:
        tie_rng = np.random.default_rng()
    return int(tied[tie_rng.integers(tied.size)])


class FiniteMarginal:
    """Probability weights over the indices of a finite query panel."""

    def __init__(self, probs):
        p = np.asarray(probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("probs must be a nonempty vector")
        if (p < 0).any() or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError("probs must be a probability vector")
        self.probs = p

    @classmethod
    def uniform(cls, size):
        return cls(np.full(size, 1.0 / size))

    @property
    def size(self):
        return self.probs.size

    def sample_indices(self, n, rng):
        return rng.choice(self.size, size=n, p=self.probs)


class GroundTruth:
    """True conditional distribution over a finite query panel.

    Parameters
    ----------
    xs : list
        Query points in the model's public form (cell indices or
        feature vectors); index into this list is the canonical
        x-identifier everywhere in the harness.
    cond_table : (len(xs), K) array
        Rows are the true class distributions f(. | x).
    marginal : FiniteMarginal
        Weights over ``xs``.
    theta0, model : optional
        Kept when the truth was built from a model, so oracle
        quantities (true Fisher, coverage events) stay available.
    """

    def __init__(self, xs, cond_table, marginal, model=None, theta0=None):
        table = np.asarray(cond_table, dtype=float)
        if table.ndim != 2 or table.shape[0] != len(xs):
            raise ValueError("cond_table must have one row per query point")
        if (table < 0).any():
            raise ValueError("conditional probabilities must be nonnegative")
        if np.abs(table.sum(axis=1) - 1.0).max() > 1e-9:
            raise ValueError("each conditional row must sum to 1")
        if marginal.size != len(xs):
            raise ValueError("marginal size must match the panel")
        self.xs = list(xs)
        self.cond_table = table
        self.marginal = marginal
        self.model = model
        self.theta0 = None if theta0 is None else np.asarray(theta0, dtype=float)

    @classmethod
    def from_model(cls, model, theta0, xs, marginal=None):
        """Truth induced by a model at parameter ``theta0``."""
        xs = list(xs)
        if marginal is None:
            marginal = FiniteMarginal.uniform(len(xs))
        table = np.vstack([model.probs(theta0, x) for x in xs])
        return cls(xs, table, marginal, model=model, theta0=theta0)

    @property
    def num_classes(self):
        return self.cond_table.shape[1]

    def cond_probs(self, x_index):
        return self.cond_table[int(x_index)]

    def log_cond_probs(self, x_index):
        return np.log(np.maximum(self.cond_probs(x_index), PROB_FLOOR))

    def map_class(self, x_index, tie_rng=None):
        """Bayes-optimal label at one panel point."""
        return argmax_tie_break(self.cond_probs(x_index), tie_rng)

    def bayes_error_at(self, x_index):
        return 1.0 - float(self.cond_probs(x_index).max())

    def sample(self, n, rng):
        """Draw ``n`` labelled points; X rows use the model encoding."""
        if n < 1:
            raise ValueError("n must be positive")
        idx = self.marginal.sample_indices(n, rng)
        if self.model is not None:
            rows = [self.model.encode_x(self.xs[i]) for i in range(len(self.xs))]
        else:
            rows = [np.atleast_1d(np.asarray(x, dtype=float)) for x in self.xs]
        X = np.vstack([rows[i] for i in idx])
        u = rng.random(n)
        cum = self.cond_table.cumsum(axis=1)
        y = np.empty(n, dtype=np.int64)
        for j in range(n):
            y[j] = int(np.searchsorted(cum[idx[j]], u[j], side="right"))
        y = np.minimum(y, self.num_classes - 1)
        return Dataset(X=X, y=y)


def misclassification_at(gt, x_index, predicted):
    """Exact error probability of predicting ``predicted`` at one point."""
    f = gt.cond_probs(x_index)
    p = int(predicted)
    if not 0 <= p < f.size:
        raise ValueError("predicted class out of range")
    return 1.0 - float(f[p])


def map_misclassification_at(gt, x_index):
    return gt.bayes_error_at(x_index)


def gap_vs_map(gt, x_index, predicted):
    """Excess error over the MAP decision; equals max f - f[predicted] >= 0."""
    return misclassification_at(gt, x_index, predicted) - gt.bayes_error_at(x_index)


def misclassification_rate(gt, predictions):
    """Marginal-weighted error of one label choice per panel point."""
    preds = list(predictions)
    if len(preds) != len(gt.xs):
        raise ValueError("need one prediction per panel point")
    total = 0.0
    for i, pred in enumerate(preds):
        total += gt.marginal.probs[i] * misclassification_at(gt, i, pred)
    return total
