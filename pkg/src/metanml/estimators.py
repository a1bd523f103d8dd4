"""Maximum likelihood fitting and data-dependent ball radii.

The categorical table has a closed-form smoothed MLE; the softmax
families run damped Newton on a ridge-penalized likelihood, which
stays finite on linearly separable data (flagged by a norm check).

Three radius rules turn an estimate into a parameter ball:

* a fixed radius,
* an epsilon-calibrated radius ``min(eps, eps / C)`` with
  ``C = 2 K sqrt(sup-eig of Fisher over the eps-ball)``, and
* a CLT-quantile radius ``sqrt(q / (n sigma_min))`` where ``q`` is the
  chi-squared quantile at level ``1 - delta + c / sqrt(n)`` and
  ``sigma_min`` the smallest eigenvalue of the unconditional Fisher.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import grad_log_prob_kernel, softmax_mle_newton
from .curvature import max_fisher_eig_in_ball
from .models import CategoricalTableModel, unconditional_fisher
from .numerics import chi2_inverse_cdf, extreme_eigenvalues
from .regions import Ball, FiniteSet

__all__ = [
    "MleFit",
    "fit_mle",
    "FixedRadius",
    "EpsilonCalibrated",
    "BerryEsseenRadius",
    "berry_esseen_radius",
    "noisy_ball_region",
    "plugin_region",
    "sigma_min_unconditional",
]

COUNT_SMOOTHING = 0.5
SOFTMAX_RIDGE = 1e-6
SEPARATION_NORM = 30.0


@dataclass
class MleFit:
    theta: np.ndarray
    grad_norm: float
    iters: int
    warnings: tuple
    method: str


def _fit_categorical(model, dataset):
    K = model.num_classes
    counts = np.zeros((model.num_cells, K))
    cells = dataset.X[:, 0].astype(np.int64)
    if cells.size and (cells.min() < 0 or cells.max() >= model.num_cells):
        raise ValueError("dataset cell index outside the model's input set")
    for c, y in zip(cells, dataset.y):
        if y >= K:
            raise ValueError("dataset label outside the model's class set")
        counts[c, y] += 1.0
    warnings = ()
    if (counts.sum(axis=1) == 0).any():
        warnings = ("empty-cell",)
    smoothed = counts + COUNT_SMOOTHING
    phat = smoothed / smoothed.sum(axis=1, keepdims=True)
    theta = np.empty(model.dim)
    for c in range(model.num_cells):
        base = c * (K - 1)
        for k in range(K - 1):
            theta[base + k] = math.log(phat[c, k]) - math.log(phat[c, K - 1])
    # stationarity of the smoothed objective, reported for auditability
    grad = np.zeros(model.dim)
    for c in range(model.num_cells):
        xv = np.array([float(c)])
        for k in range(K):
            grad += smoothed[c, k] * grad_log_prob_kernel(
                model.kind, K, theta, xv, k)
    return MleFit(theta=theta, grad_norm=float(np.linalg.norm(grad)),
                  iters=0, warnings=warnings, method="closed-form-smoothed")


def fit_mle(model, dataset, ridge=SOFTMAX_RIDGE, max_iter=200, grad_tol=1e-8):
    """Fit theta to a dataset.

    Categorical tables use per-cell frequencies with +0.5 smoothing on
    every count (empty cells fall back to uniform and set a warning);
    softmax families maximize the ridge-penalized likelihood by damped
    Newton.  A softmax fit whose max-abs weight exceeds 30 is flagged
    as likely separation.
    """
    if dataset.n < 1:
        raise ValueError("dataset must be nonempty")
    if isinstance(model, CategoricalTableModel):
        return _fit_categorical(model, dataset)
    theta0 = np.zeros(model.dim)
    theta, gnorm, iters = softmax_mle_newton(
        model.kind, model.num_classes, dataset.X, dataset.y,
        theta0, ridge, max_iter, grad_tol)
    warnings = ()
    if np.abs(theta).max() > SEPARATION_NORM:
        warnings = ("separation-suspected",)
    return MleFit(theta=theta, grad_norm=float(gnorm), iters=int(iters),
                  warnings=warnings, method="newton-ridge")


@dataclass(frozen=True)
class FixedRadius:
    rho: float


@dataclass(frozen=True)
class EpsilonCalibrated:
    """Radius ``min(eps, eps / C)``, ``C = 2 K sqrt(sup-eig over eps-ball)``."""

    epsilon: float
    n_samples: int = 64
    seed: int = 0


@dataclass(frozen=True)
class BerryEsseenRadius:
    """CLT-quantile radius at miss level delta with finite-n slack c."""

    delta: float
    c: float = 0.0
    sigma_min: float = float("nan")


def berry_esseen_radius(dim, n, delta, c, sigma_min):
    """sqrt(chi2_quantile(dim, 1 - delta + c / sqrt(n)) / (n sigma_min))."""
    if n < 1:
        raise ValueError("n must be positive")
    if not sigma_min > 0.0:
        raise ValueError("sigma_min must be positive")
    t = 1.0 - delta + c / math.sqrt(n)
    if not 0.0 < t < 1.0:
        raise ValueError(
            f"quantile level {t} outside (0, 1); n too small for this c")
    return math.sqrt(chi2_inverse_cdf(dim, t) / (n * sigma_min))


def noisy_ball_region(model, theta_hat, rule, x=None, n=None):
    """Ball around the estimate under one of the radius rules.

    ``x`` is required by the epsilon rule (its curvature is query
    dependent) and ``n`` by the CLT rule.
    """
    theta_hat = np.ascontiguousarray(theta_hat, dtype=float).reshape(-1)
    if isinstance(rule, FixedRadius):
        if rule.rho < 0:
            raise ValueError("rho must be nonnegative")
        return Ball(theta_hat, rule.rho)
    if isinstance(rule, EpsilonCalibrated):
        if rule.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if x is None:
            raise ValueError("the epsilon rule needs the query point x")
        sig = max_fisher_eig_in_ball(model, theta_hat, rule.epsilon, x,
                                     rule.n_samples, rule.seed)
        cal = 2.0 * model.num_classes * math.sqrt(max(sig, 0.0))
        rho = rule.epsilon if cal == 0.0 else min(rule.epsilon,
                                                  rule.epsilon / cal)
        return Ball(theta_hat, rho)
    if isinstance(rule, BerryEsseenRadius):
        if n is None:
            raise ValueError("the CLT rule needs the sample size n")
        rho = berry_esseen_radius(model.dim, n, rule.delta, rule.c,
                                  rule.sigma_min)
        return Ball(theta_hat, rho)
    raise TypeError(f"unknown radius rule {type(rule).__name__}")


def plugin_region(theta_hat):
    """Singleton region: NML collapses to the plug-in classifier."""
    return FiniteSet(np.asarray(theta_hat, dtype=float).reshape(1, -1))


def sigma_min_unconditional(model, theta, xs, weights=None):
    """Smallest eigenvalue of the x-averaged Fisher information."""
    lo, _hi = extreme_eigenvalues(unconditional_fisher(model, theta, xs, weights))
    return float(lo)
