"""Performance-gap bounds and their per-query verification reports.

The central inequality checked throughout: the excess error of the
restricted NML decision over the MAP decision at a query point is at
most ``exp(approximation gap + leakage) - 1``.  Supporting pieces:

* ``approximation_gap`` -- smallest worst-class log ratio between the
  truth and any admissible model,
* ``redundancy`` / ``max_regret`` -- the two legs of the triangle
  inequality that proves the bound,
* ``fisher_leakage_bound`` -- curvature form of the leakage for convex
  regions, built from per-class argmaxes and segment curvature,
* ``decay_chain`` -- the CLT-radius chain whose constant over sqrt(n)
  dominates ``exp(leakage) - 1`` on coverage runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import delta_ball_kernel, grid_delta_kernel, hard_max_ratio
from .curvature import max_fisher_eig_in_ball, mean_trace_sup_in_ball
from .decision import gap_vs_map
from .estimators import berry_esseen_radius, fit_mle, sigma_min_unconditional
from .nml import DEFAULT_OPT, ball_starts, constrained_sup, nml_distribution, nml_predict
from .numerics import PROB_FLOOR, max_eigenvalue
from .regions import Ball, FiniteSet, Grid

__all__ = [
    "DeltaResult",
    "approximation_gap",
    "redundancy",
    "max_regret",
    "FisherLeakageBound",
    "fisher_leakage_bound",
    "BoundReport",
    "gap_bound_report",
    "trace_gap_bound",
    "DecayChain",
    "decay_chain",
    "BOUND_TOL",
]

BOUND_TOL = 1e-8


def _check_dist(f, name="f"):
    f = np.asarray(f, dtype=float).reshape(-1)
    if (f < 0).any() or abs(f.sum() - 1.0) > 1e-6:
        raise ValueError(f"{name} must be a probability vector")
    return f


@dataclass
class DeltaResult:
    value: float
    argmin: np.ndarray
    converged: bool


def approximation_gap(model, region, x, f, opt=DEFAULT_OPT):
    """inf over the region of the worst-class log ratio ln f / p_theta.

    Zero-probability classes of ``f`` are excluded from the max.  Balls
    are solved by projected gradient descent on a log-sum-exp softening
    (temperature ``opt.tau``, polished at ``opt.tau_polish``); the value
    reported is the exact hard max at the best point found, so it upper
    bounds the true infimum.
    """
    f = _check_dist(f)
    K = model.num_classes
    if f.size != K:
        raise ValueError("f must have one entry per class")
    if region.dim != model.dim:
        raise ValueError("region dimension does not match the model")
    xv = model.encode_x(x)
    active = f > 0.0
    log_f = np.log(np.maximum(f, PROB_FLOOR))
    if isinstance(region, FiniteSet):
        best, arg = math.inf, region.points[0]
        for pt in region.points:
            v = hard_max_ratio(model.kind, K, np.ascontiguousarray(pt), xv,
                               log_f, active)
            if v < best:
                best, arg = v, pt
        return DeltaResult(float(best), arg.copy(), True)
    if isinstance(region, Grid):
        v, th = grid_delta_kernel(model.kind, K, region.lower, region.upper,
                                  region.steps, xv, log_f, active)
        return DeltaResult(float(v), th, True)
    if isinstance(region, Ball):
        if region.radius == 0.0:
            v = hard_max_ratio(model.kind, K, region.center, xv, log_f, active)
            return DeltaResult(float(v), region.center.copy(), True)
        starts = ball_starts(region, opt.n_starts, (opt.seed, K + 1))
        v, th, conv = delta_ball_kernel(model.kind, K, region.center,
                                        region.radius, xv, log_f, active,
                                        starts, opt.max_iter, opt.pg_tol,
                                        opt.armijo, opt.tau, opt.tau_polish)
        return DeltaResult(float(v), th, bool(conv))
    raise TypeError(f"unsupported region type {type(region).__name__}")


def redundancy(f, q):
    """Worst-class log ratio ``max_y ln f(y)/q(y)``; always >= 0."""
    f = _check_dist(f, "f")
    q = np.asarray(q, dtype=float).reshape(-1)
    if q.shape != f.shape:
        raise ValueError("f and q must have equal length")
    if (q < 0).any():
        raise ValueError("q must be nonnegative")
    best = -math.inf
    for fy, qy in zip(f, q):
        if fy > 0.0:
            best = max(best, math.log(fy) - math.log(max(qy, PROB_FLOOR)))
    return float(best)


def max_regret(model, region, x, q, opt=DEFAULT_OPT):
    """max over classes of ``ln sup_region p(y|x) - ln q(y)``.

    With ``q`` the region's own NML distribution this is exactly the
    log normalizer, since every class then shares the ratio Z.
    """
    q = np.asarray(q, dtype=float).reshape(-1)
    K = model.num_classes
    if q.size != K:
        raise ValueError("q must have one entry per class")
    best = -math.inf
    for y in range(K):
        res = constrained_sup(model, region, x, y, opt)
        best = max(best, res.log_value - math.log(max(q[y], PROB_FLOOR)))
    return float(best)


@dataclass
class FisherLeakageBound:
    """Curvature bound on leakage for a convex region.

    ``sum_term`` bounds ``exp(leakage) - 1``; ``log_bound`` is
    ``ln(1 + sum_term)`` and bounds the leakage itself.
    """

    log_bound: float
    sum_term: float
    segment_sups: np.ndarray


def fisher_leakage_bound(model, region, x, per_class_argmax, n_segment=32):
    """Pairwise-distance / segment-curvature bound on the leakage.

    Anchored at class 0's argmax ``t0``: sums, over the other classes,
    ``||tk - t0|| * sqrt(sbar_k)`` where ``sbar_k`` is the largest top
    Fisher eigenvalue over ``n_segment`` uniformly spaced points of the
    segment ``[t0, tk]``.  Requires a convex region so the segments stay
    admissible.
    """
    if not region.is_convex:
        raise ValueError("the curvature bound needs a convex region")
    if n_segment < 2:
        raise ValueError("need at least the two segment endpoints")
    arg = np.asarray(per_class_argmax, dtype=float)
    K = model.num_classes
    if arg.shape != (K, model.dim):
        raise ValueError("per_class_argmax must be (num_classes, dim)")
    t0 = arg[0]
    sups = np.zeros(K)
    total = 0.0
    for k in range(1, K):
        tk = arg[k]
        dist = float(np.linalg.norm(tk - t0))
        sbar = 0.0
        for t in np.linspace(0.0, 1.0, n_segment):
            theta = t0 + t * (tk - t0)
            sbar = max(sbar, max_eigenvalue(model.fisher_at(theta, x)))
        sups[k] = sbar
        total += dist * math.sqrt(max(sbar, 0.0))
    return FisherLeakageBound(log_bound=math.log1p(total), sum_term=total,
                              segment_sups=sups)


@dataclass
class BoundReport:
    """Everything checked for one (query, region, dataset) triple."""

    x_index: int
    predicted_class: int
    map_class: int
    gap: float
    approx_gap: float
    leakage: float
    gap_bound: float
    gap_bound_holds: bool
    fisher_bound: float | None = None
    fisher_bound_holds: bool | None = None
    sqrt_n_bound: float | None = None
    coverage: bool | None = None
    warnings: tuple = field(default_factory=tuple)


def gap_bound_report(gt, model, region, x_index, opt=DEFAULT_OPT,
                     tie_rng=None, n_segment=32):
    """Verify the core inequality at one query point.

    Computes the restricted-NML prediction, its exact excess error over
    MAP, the approximation gap, the leakage, and the resulting bound
    ``exp(gap + leakage) - 1``; for nondegenerate balls the curvature
    form of the leakage bound is attached as well.
    """
    x = gt.xs[x_index]
    f = gt.cond_probs(x_index)
    dist = nml_distribution(model, region, x, opt)
    pred = nml_predict(dist, tie_rng)
    map_cls = gt.map_class(x_index, tie_rng)
    gap = gap_vs_map(gt, x_index, pred)
    delta = approximation_gap(model, region, x, f, opt)
    bound = math.expm1(delta.value + dist.leakage)
    warnings = tuple(dist.warnings)
    if not delta.converged:
        warnings = warnings + ("delta-not-converged",)
    fisher_bound = None
    fisher_holds = None
    if isinstance(region, Ball) and region.radius > 0.0:
        fb = fisher_leakage_bound(model, region, x, dist.per_class_argmax,
                                  n_segment)
        fisher_bound = fb.sum_term
        fisher_holds = bool(math.expm1(dist.leakage) <= fb.sum_term + BOUND_TOL)
    return BoundReport(
        x_index=int(x_index),
        predicted_class=int(pred),
        map_class=int(map_cls),
        gap=float(gap),
        approx_gap=float(delta.value),
        leakage=float(dist.leakage),
        gap_bound=float(bound),
        gap_bound_holds=bool(gap <= bound + BOUND_TOL),
        fisher_bound=fisher_bound,
        fisher_bound_holds=fisher_holds,
        warnings=warnings,
    )


def trace_gap_bound(model, theta_hat, rho, xs, weights=None, n_samples=64,
                    seed=0):
    """Marginal-averaged trace form: ``2 rho K sqrt(sup mean-trace)``.

    On a one-point panel this dominates the eigenvalue form, since the
    trace of a PSD matrix is at least its top eigenvalue pointwise.
    """
    T = mean_trace_sup_in_ball(model, theta_hat, rho, xs, weights,
                               n_samples, seed)
    return 2.0 * rho * model.num_classes * math.sqrt(max(T, 0.0))


@dataclass
class DecayChain:
    """gap <= exp(leakage) - 1 <= constant / sqrt(n), on coverage runs."""

    n: int
    gap: float
    exp_leak_minus_1: float
    sqrt_n_bound: float
    rho_n: float
    coverage: bool
    leakage: float
    theta_hat: np.ndarray
    warnings: tuple


def decay_chain(gt, model, dataset, x_index, delta, c=0.0, opt=DEFAULT_OPT,
                tie_rng=None, n_samples=64, seed=0, sigma_min=None):
    """Fit, build the CLT-radius ball, and evaluate the decay chain.

    ``sigma_min`` defaults to the oracle value at the true parameter;
    pass a plug-in estimate to study the fully data-driven variant.
    The constant uses the displayed two-class form
    ``2 sqrt(sup-eig over the 2 rho ball at theta0 / sigma_min)``.
    """
    if gt.theta0 is None:
        raise ValueError("decay_chain needs a model-based ground truth")
    n = dataset.n
    fit = fit_mle(model, dataset)
    if sigma_min is None:
        sigma_min = sigma_min_unconditional(model, gt.theta0, gt.xs,
                                            gt.marginal.probs)
    rho_n = berry_esseen_radius(model.dim, n, delta, c, sigma_min)
    region = Ball(fit.theta, rho_n)
    x = gt.xs[x_index]
    dist = nml_distribution(model, region, x, opt)
    pred = nml_predict(dist, tie_rng)
    gap = gap_vs_map(gt, x_index, pred)
    sig2 = max_fisher_eig_in_ball(model, gt.theta0, 2.0 * rho_n, x,
                                  n_samples, seed)
    bound = 2.0 * math.sqrt(max(sig2, 0.0) / sigma_min) / math.sqrt(n)
    coverage = bool(np.linalg.norm(fit.theta - gt.theta0) <= rho_n)
    return DecayChain(
        n=n,
        gap=float(gap),
        exp_leak_minus_1=float(math.expm1(dist.leakage)),
        sqrt_n_bound=float(bound),
        rho_n=float(rho_n),
        coverage=coverage,
        leakage=float(dist.leakage),
        theta_hat=fit.theta,
        warnings=tuple(fit.warnings) + tuple(dist.warnings),
    )
