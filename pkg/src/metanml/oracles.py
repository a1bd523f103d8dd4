"""Brute-force dense-grid oracles for cross-checking the solvers.

Deliberately independent of the gradient code paths: suprema and
minimax values over balls are re-derived by projecting a dense box
lattice into the ball and enumerating, then refining around the
incumbent.  Only practical at low dimension; the cross-check suite
runs these at d <= 3.
"""

from __future__ import annotations

import math

import numpy as np

from ._kernels import grid_ball_delta_kernel, grid_ball_sup_kernel
from .numerics import PROB_FLOOR

__all__ = ["dense_ball_sup", "dense_ball_delta"]


def _refined_search(kernel_call, center, radius, points_per_axis, refine):
    d = center.size
    steps = np.full(d, int(points_per_axis), dtype=np.int64)
    half = np.full(d, radius)
    mid = center.copy()
    best_val = None
    best_theta = None
    for _ in range(refine + 1):
        lower = mid - half
        upper = mid + half
        val, theta = kernel_call(lower, upper, steps)
        if best_val is None or kernel_call.better(val, best_val):
            best_val = val
            best_theta = theta
        spacing = 2.0 * half / max(points_per_axis - 1, 1)
        half = np.maximum(1.5 * spacing, 1e-14)
        mid = best_theta.copy()
    return float(best_val), best_theta


def dense_ball_sup(model, ball, x, y, points_per_axis=51, refine=3):
    """Max of ``p(y|x)`` over the ball by projected-lattice enumeration.

    Returns the probability-scale value and its argument.
    """
    xv = model.encode_x(x)
    y = model._check_y(y)

    def call(lower, upper, steps):
        return grid_ball_sup_kernel(model.kind, model.num_classes,
                                    ball.center, ball.radius, lower, upper,
                                    steps, xv, y)

    call.better = lambda a, b: a > b
    log_val, theta = _refined_search(call, ball.center, ball.radius,
                                     points_per_axis, refine)
    return math.exp(log_val), theta


def dense_ball_delta(model, ball, x, f, points_per_axis=51, refine=3):
    """Min over the ball of the worst-class log ratio, by enumeration."""
    xv = model.encode_x(x)
    f = np.asarray(f, dtype=float).reshape(-1)
    active = f > 0.0
    log_f = np.log(np.maximum(f, PROB_FLOOR))

    def call(lower, upper, steps):
        return grid_ball_delta_kernel(model.kind, model.num_classes,
                                      ball.center, ball.radius, lower, upper,
                                      steps, xv, log_f, active)

    call.better = lambda a, b: a < b
    val, theta = _refined_search(call, ball.center, ball.radius,
                                 points_per_axis, refine)
    return val, theta
