"""Sampled suprema of Fisher curvature over parameter balls.

The true quantities are suprema over a continuum; here they are
evaluated on a deterministic seeded point cloud (ball center, the 2d
axis-aligned extreme points, and uniform draws from the ball) and are
therefore sampled lower bounds of the exact suprema.  With a shared
seed the cloud scales radially with rho, so the value is monotone in
rho whenever the curvature profile is radially monotone, which holds
for every model family shipped here.
"""

from __future__ import annotations

import math

import numpy as np

from .models import unconditional_fisher
from .numerics import max_eigenvalue

__all__ = [
    "ball_sample_points",
    "max_fisher_eig_in_ball",
    "mean_trace_sup_in_ball",
    "eig_gap_bound",
]


def ball_sample_points(theta_hat, rho, n_samples=64, seed=0):
    """Evaluation cloud: center, axis extremes at +-rho, uniform ball draws."""
    theta_hat = np.ascontiguousarray(theta_hat, dtype=float).reshape(-1)
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    d = theta_hat.size
    pts = [theta_hat.copy()]
    for i in range(d):
        e = np.zeros(d)
        e[i] = rho
        pts.append(theta_hat + e)
        pts.append(theta_hat - e)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), d]))
    for _ in range(int(n_samples)):
        g = rng.standard_normal(d)
        nrm = float(np.linalg.norm(g))
        if nrm == 0.0:
            continue
        u = rng.random() ** (1.0 / d)
        pts.append(theta_hat + rho * u * g / nrm)
    return np.vstack(pts)


def max_fisher_eig_in_ball(model, theta_hat, rho, x, n_samples=64, seed=0):
    """Sampled sup of the top Fisher eigenvalue over the rho-ball at x."""
    best = -math.inf
    for theta in ball_sample_points(theta_hat, rho, n_samples, seed):
        best = max(best, max_eigenvalue(model.fisher_at(theta, x)))
    return float(best)


def mean_trace_sup_in_ball(model, theta_hat, rho, xs, weights=None,
                           n_samples=64, seed=0):
    """Sampled sup over the ball of the marginal-averaged Fisher trace."""
    best = -math.inf
    for theta in ball_sample_points(theta_hat, rho, n_samples, seed):
        tr = float(np.trace(unconditional_fisher(model, theta, xs, weights)))
        best = max(best, tr)
    return float(best)


def eig_gap_bound(model, theta_hat, rho, x, n_samples=64, seed=0):
    """Curvature form of the leakage bound: 2 rho K sqrt(sup eig)."""
    sig = max_fisher_eig_in_ball(model, theta_hat, rho, x, n_samples, seed)
    return 2.0 * rho * model.num_classes * math.sqrt(max(sig, 0.0))
