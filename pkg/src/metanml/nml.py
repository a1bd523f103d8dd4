"""Constrained-likelihood NML distributions and exact maximal leakage.

Given a region of admissible parameters, each class score is the
supremum of its likelihood over the region; normalizing the scores
gives the predictive distribution and the log normalizer is both the
stochastic complexity and the maximal leakage of the restricted
strategy.  For every model family here the per-class log likelihood
is concave in theta, so projected gradient ascent over a ball finds
the global supremum; finite sets and grids are enumerated exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import ball_sup_kernel, grid_sup_kernel
from .decision import argmax_tie_break
from .regions import Ball, FiniteSet, Grid

__all__ = [
    "OptConfig",
    "SupResult",
    "NmlDistribution",
    "constrained_sup",
    "nml_distribution",
    "leakage",
    "nml_predict",
]


@dataclass(frozen=True)
class OptConfig:
    """Settings for the ball-constrained solvers.

    ``n_starts`` counts the seeded uniform restarts added on top of the
    region-center start.  ``tau`` and ``tau_polish`` are the log-sum-exp
    temperatures of the two minimax smoothing phases.
    """

    max_iter: int = 500
    pg_tol: float = 1e-8
    armijo: float = 1e-4
    n_starts: int = 8
    seed: int = 0
    tau: float = 1e3
    tau_polish: float = 1e4


DEFAULT_OPT = OptConfig()


@dataclass
class SupResult:
    value: float
    log_value: float
    argmax: np.ndarray
    converged: bool


@dataclass
class NmlDistribution:
    """Per-class suprema, their normalizer, and the induced predictive law."""

    per_class_sup: np.ndarray
    per_class_argmax: np.ndarray
    normalizer: float
    leakage: float
    q: np.ndarray
    all_converged: bool
    warnings: tuple = field(default_factory=tuple)


def ball_starts(ball, n_starts, entropy):
    """Center plus ``n_starts`` uniform draws from the ball.

    ``entropy`` is a sequence of nonnegative ints feeding a
    SeedSequence, so identical inputs give identical starts no matter
    the call order.
    """
    d = ball.dim
    starts = np.empty((n_starts + 1, d))
    starts[0] = ball.center
    if n_starts > 0:
        rng = np.random.default_rng(np.random.SeedSequence(list(entropy)))
        for s in range(n_starts):
            g = rng.standard_normal(d)
            nrm = float(np.linalg.norm(g))
            if nrm == 0.0:
                starts[s + 1] = ball.center
                continue
            u = rng.random() ** (1.0 / d)
            starts[s + 1] = ball.center + ball.radius * u * g / nrm
    return starts


def constrained_sup(model, region, x, y, opt=DEFAULT_OPT):
    """Supremum of ``p_theta(y | x)`` over the region.

    Balls run multi-start projected gradient ascent with a backtracking
    Armijo line search; finite sets and grid lattices are enumerated, so
    their results are exact and always flagged converged.
    """
    y = model._check_y(y)
    xv = model.encode_x(x)
    K = model.num_classes
    if region.dim != model.dim:
        raise ValueError("region dimension does not match the model")
    if isinstance(region, FiniteSet):
        best_val, best_theta = -math.inf, region.points[0]
        for pt in region.points:
            v = model.log_prob(pt, x, y)
            if v > best_val:
                best_val, best_theta = v, pt
        return SupResult(math.exp(best_val), best_val, best_theta.copy(), True)
    if isinstance(region, Grid):
        lv, th = grid_sup_kernel(model.kind, K, region.lower, region.upper,
                                 region.steps, xv, y)
        return SupResult(math.exp(lv), float(lv), th, True)
    if isinstance(region, Ball):
        if region.radius == 0.0:
            lv = model.log_prob(region.center, x, y)
            return SupResult(math.exp(lv), lv, region.center.copy(), True)
        starts = ball_starts(region, opt.n_starts, (opt.seed, y))
        lv, th, conv = ball_sup_kernel(model.kind, K, region.center,
                                       region.radius, xv, y, starts,
                                       opt.max_iter, opt.pg_tol, opt.armijo)
        return SupResult(math.exp(lv), float(lv), th, bool(conv))
    raise TypeError(f"unsupported region type {type(region).__name__}")


def nml_distribution(model, region, x, opt=DEFAULT_OPT):
    """Normalized maximum likelihood over the restricted parameter set.

    Singleton regions short-circuit: their normalizer is identically 1,
    so the leakage is pinned to exactly 0.0 rather than picking up
    float rounding from summing the class probabilities.
    """
    K = model.num_classes
    if region.dim != model.dim:
        raise ValueError("region dimension does not match the model")
    if region.is_singleton:
        theta = (region.center if isinstance(region, Ball)
                 else region.project(np.zeros(region.dim)))
        p = model.probs(theta, x)
        q = p / p.sum()
        return NmlDistribution(
            per_class_sup=q,
            per_class_argmax=np.tile(theta, (K, 1)),
            normalizer=1.0,
            leakage=0.0,
            q=q,
            all_converged=True,
        )
    sups = np.empty(K)
    argmaxes = np.empty((K, model.dim))
    all_conv = True
    for y in range(K):
        res = constrained_sup(model, region, x, y, opt)
        sups[y] = res.value
        argmaxes[y] = res.argmax
        all_conv = all_conv and res.converged
    Z = float(sups.sum())
    warn = () if all_conv else ("sup-not-converged",)
    return NmlDistribution(
        per_class_sup=sups,
        per_class_argmax=argmaxes,
        normalizer=Z,
        leakage=math.log(Z),
        q=sups / Z,
        all_converged=all_conv,
        warnings=warn,
    )


def leakage(model, region, x, opt=DEFAULT_OPT):
    """Maximal leakage of the restricted strategy at one query point.

    Equals the log normalizer of :func:`nml_distribution` for the same
    region (support of the admissible-parameter prior).
    """
    return nml_distribution(model, region, x, opt).leakage


def nml_predict(dist, tie_rng=None):
    """Class with the largest predictive mass, ties broken at random."""
    return argmax_tie_break(dist.q, tie_rng)
