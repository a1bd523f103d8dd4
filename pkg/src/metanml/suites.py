"""Randomized verification suites.

Each suite draws a seeded batch of synthetic instances, checks one
inequality on every instance at a fixed tolerance, and reports the
violation count together with the worst signed margin (positive means
a violation).  The CLI ``check`` subcommand and the acceptance tests
both run these.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .bounds import (
    BOUND_TOL,
    approximation_gap,
    fisher_leakage_bound,
    gap_bound_report,
    max_regret,
    redundancy,
)
from .decision import FiniteMarginal, GroundTruth, argmax_tie_break, misclassification_rate
from .estimators import FixedRadius, fit_mle, noisy_ball_region
from .models import CategoricalTableModel, OverparamSoftmaxModel, SoftmaxLinearModel
from .nml import OptConfig, constrained_sup, nml_distribution
from .numerics import kl_divergence, total_variation
from .oracles import dense_ball_delta, dense_ball_sup
from .regions import Ball, FiniteSet

__all__ = [
    "SuiteResult",
    "gap_bound_suite",
    "redundancy_suite",
    "triangle_suite",
    "fisher_bound_suite",
    "leakage_property_suite",
    "pinsker_suite",
    "grid_oracle_suite",
    "overparam_demo",
    "ALL_CHECKS",
]


@dataclass
class SuiteResult:
    name: str
    count: int
    violations: int
    worst: float
    elapsed: float
    info: dict = field(default_factory=dict)

    @property
    def ok(self):
        return self.violations == 0

    def line(self):
        status = "PASS" if self.ok else "FAIL"
        return (f"[{status}] {self.name}: {self.count} instances, "
                f"{self.violations} violations, worst margin {self.worst:.3e}, "
                f"{self.elapsed:.1f}s")


def _random_model(rng, fam):
    """One of four model families plus a parameter draw at its scale."""
    if fam == 0:
        model = CategoricalTableModel(1, 2)
    elif fam == 1:
        model = CategoricalTableModel(2, 3)
    elif fam == 2:
        model = SoftmaxLinearModel(2, 3)
    else:
        model = OverparamSoftmaxModel(2, 2)
    theta0 = 1.2 * rng.standard_normal(model.dim)
    return model, theta0


def _panel_for(model, rng):
    if isinstance(model, CategoricalTableModel):
        return list(range(model.num_cells))
    return [rng.standard_normal(model.num_features) for _ in range(3)]


def _random_region(rng, theta0, kind):
    d = theta0.size
    if kind == 0:  # ball near the truth, often containing it
        center = theta0 + 0.4 * rng.standard_normal(d)
        radius = float(0.05 + rng.random() * 1.5)
        return Ball(center, radius)
    if kind == 1:  # ball clearly away from the truth
        center = theta0 + (1.0 + rng.random() * 2.0) * rng.standard_normal(d)
        radius = float(0.05 + rng.random() * 0.8)
        return Ball(center, radius)
    if kind == 2:  # singleton (plug-in style)
        return FiniteSet((theta0 + 0.6 * rng.standard_normal(d)).reshape(1, -1))
    pts = theta0 + 0.8 * rng.standard_normal((4, d))
    return FiniteSet(pts)


def gap_bound_suite(n_instances=2000, seed=20250821):
    """Excess error of restricted NML vs exp(gap + leakage) - 1."""
    rng = np.random.default_rng(seed)
    t0 = time.time()
    violations = 0
    worst = -math.inf
    for i in range(n_instances):
        model, theta0 = _random_model(rng, i % 4)
        region = _random_region(rng, theta0, i % 4)
        xs = _panel_for(model, rng)
        gt = GroundTruth.from_model(model, theta0, xs)
        x_index = int(rng.integers(len(xs)))
        opt = OptConfig(seed=int(rng.integers(2 ** 32)))
        report = gap_bound_report(gt, model, region, x_index, opt, tie_rng=rng)
        margin = report.gap - report.gap_bound - BOUND_TOL
        worst = max(worst, margin)
        if margin > 0:
            violations += 1
    return SuiteResult("gap-bound", n_instances, violations, worst,
                       time.time() - t0)


def redundancy_suite(n_instances=1000, seed=7):
    """Excess error of any argmax-of-q rule vs exp(redundancy) - 1."""
    rng = np.random.default_rng(seed)
    t0 = time.time()
    violations = 0
    worst = -math.inf
    for i in range(n_instances):
        K = int(rng.integers(2, 6))
        f = rng.dirichlet(np.ones(K))
        if i % 3 == 0:
            q = rng.dirichlet(0.3 * np.ones(K))  # occasionally very skewed
        else:
            q = rng.dirichlet(np.ones(K))
        h_q = argmax_tie_break(q, rng)
        gap = float(f.max() - f[h_q])
        margin = gap - math.expm1(redundancy(f, q)) - BOUND_TOL
        worst = max(worst, margin)
        if margin > 0:
            violations += 1
    return SuiteResult("redundancy", n_instances, violations, worst,
                       time.time() - t0)


def triangle_suite(n_instances=500, seed=11):
    """redundancy(f, q) <= approximation gap + max regret."""
    rng = np.random.default_rng(seed)
    t0 = time.time()
    violations = 0
    worst = -math.inf
    for i in range(n_instances):
        model, theta0 = _random_model(rng, i % 3)
        region = _random_region(rng, theta0, i % 3)
        xs = _panel_for(model, rng)
        x = xs[int(rng.integers(len(xs)))]
        K = model.num_classes
        f = rng.dirichlet(np.ones(K))
        q = rng.dirichlet(np.ones(K))
        opt = OptConfig(seed=int(rng.integers(2 ** 32)))
        delta = approximation_gap(model, region, x, f, opt).value
        reg = max_regret(model, region, x, q, opt)
        margin = redundancy(f, q) - delta - reg - BOUND_TOL
        worst = max(worst, margin)
        if margin > 0:
            violations += 1
    return SuiteResult("triangle", n_instances, violations, worst,
                       time.time() - t0)


def fisher_bound_suite(n_instances=500, seed=13):
    """exp(leakage) - 1 vs the segment-curvature sum over convex balls."""
    rng = np.random.default_rng(seed)
    t0 = time.time()
    violations = 0
    worst = -math.inf
    for i in range(n_instances):
        model, theta0 = _random_model(rng, i % 3)
        center = theta0 + 0.3 * rng.standard_normal(model.dim)
        region = Ball(center, float(0.05 + rng.random() * 1.2))
        xs = _panel_for(model, rng)
        x = xs[int(rng.integers(len(xs)))]
        opt = OptConfig(seed=int(rng.integers(2 ** 32)))
        dist = nml_distribution(model, region, x, opt)
        fb = fisher_leakage_bound(model, region, x, dist.per_class_argmax)
        margin = math.expm1(dist.leakage) - fb.sum_term - BOUND_TOL
        worst = max(worst, margin)
        if margin > 0:
            violations += 1
    return SuiteResult("fisher-leakage-bound", n_instances, violations, worst,
                       time.time() - t0)


def leakage_property_suite(n_pairs=500, seed=17):
    """Leakage identities: range, exact log-normalizer, nesting monotonicity."""
    rng = np.random.default_rng(seed)
    t0 = time.time()
    violations = 0
    worst = -math.inf

    def note(margin):
        nonlocal violations, worst
        worst = max(worst, margin)
        if margin > 0:
            violations += 1

    for i in range(n_pairs):
        model, theta0 = _random_model(rng, i % 3)
        center = theta0 + 0.3 * rng.standard_normal(model.dim)
        r1 = float(0.05 + rng.random())
        r2 = r1 + float(rng.random())
        xs = _panel_for(model, rng)
        x = xs[int(rng.integers(len(xs)))]
        opt = OptConfig(seed=int(rng.integers(2 ** 32)))
        d1 = nml_distribution(model, Ball(center, r1), x, opt)
        d2 = nml_distribution(model, Ball(center, r2), x, opt)
        # identity: leakage is exactly the stored log normalizer
        note(abs(d1.leakage - math.log(d1.normalizer)))
        # range and normalization
        note(-d1.leakage)
        note(d1.leakage - math.log(model.num_classes) - 1e-9)
        note(abs(float(d1.q.sum()) - 1.0) - 1e-10)
        # monotone under region nesting
        note(d1.leakage - d2.leakage - BOUND_TOL)
    return SuiteResult("leakage-properties", n_pairs, violations, worst,
                       time.time() - t0)


def pinsker_suite(n_pairs=1000, seed=19):
    """Total variation vs sqrt(KL / 2) on random distribution pairs."""
    rng = np.random.default_rng(seed)
    t0 = time.time()
    violations = 0
    worst = -math.inf
    for _ in range(n_pairs):
        K = int(rng.integers(2, 8))
        p = rng.dirichlet(np.ones(K))
        q = rng.dirichlet(np.ones(K))
        margin = total_variation(p, q) - math.sqrt(0.5 * kl_divergence(p, q)) - 1e-12
        worst = max(worst, margin)
        if margin > 0:
            violations += 1
    return SuiteResult("pinsker", n_pairs, violations, worst, time.time() - t0)


def grid_oracle_suite(n_instances=100, seed=23, sup_tol=1e-4, delta_tol=1e-3):
    """Gradient solvers vs dense projected-lattice enumeration at d <= 3."""
    rng = np.random.default_rng(seed)
    t0 = time.time()
    violations = 0
    worst = -math.inf
    worst_sup = 0.0
    worst_delta = 0.0
    for i in range(n_instances):
        fam = i % 4
        if fam == 0:
            model = CategoricalTableModel(1, 2)     # d = 1
        elif fam == 1:
            model = CategoricalTableModel(1, 3)     # d = 2
        elif fam == 2:
            model = CategoricalTableModel(1, 4)     # d = 3
        else:
            model = SoftmaxLinearModel(3, 2)        # d = 3
        theta0 = rng.standard_normal(model.dim)
        center = theta0 + 0.3 * rng.standard_normal(model.dim)
        ball = Ball(center, float(0.1 + rng.random()))
        x = 0 if isinstance(model, CategoricalTableModel) \
            else rng.standard_normal(model.num_features)
        y = int(rng.integers(model.num_classes))
        f = rng.dirichlet(np.ones(model.num_classes))
        opt = OptConfig(seed=int(rng.integers(2 ** 32)))
        sup = constrained_sup(model, ball, x, y, opt)
        oracle_sup, _ = dense_ball_sup(model, ball, x, y)
        dev_sup = abs(sup.value - oracle_sup)
        delta = approximation_gap(model, ball, x, f, opt).value
        oracle_delta, _ = dense_ball_delta(model, ball, x, f)
        dev_delta = abs(delta - oracle_delta)
        worst_sup = max(worst_sup, dev_sup)
        worst_delta = max(worst_delta, dev_delta)
        margin = max(dev_sup - sup_tol, dev_delta - delta_tol)
        worst = max(worst, margin)
        if margin > 0:
            violations += 1
    return SuiteResult("grid-oracle", n_instances, violations, worst,
                       time.time() - t0,
                       info={"worst_sup_dev": worst_sup,
                             "worst_delta_dev": worst_delta})


def overparam_demo(seeds=40, base_seed=31, n_small=100, n_large=10000):
    """Shift-invariant softmax demo: the error gap still shrinks with n.

    Fits the over-parameterized model by ridge Newton (the Fisher matrix
    is singular, the ridge picks one representative), wraps a ball of
    radius 3/sqrt(n) around the fit, and compares panel-averaged excess
    error over MAP at both sample sizes.  The core bound is also checked
    on every (seed, query) record.
    """
    model = OverparamSoftmaxModel(4, 3)
    rng0 = np.random.default_rng(base_seed)
    theta0 = rng0.standard_normal(model.dim)
    xs = [rng0.standard_normal(model.num_features) for _ in range(8)]
    gt = GroundTruth.from_model(model, theta0, xs, FiniteMarginal.uniform(8))
    t0 = time.time()
    medians = {}
    all_hold = True
    for n in (n_small, n_large):
        gaps = []
        for rep in range(seeds):
            rng = np.random.default_rng(
                np.random.SeedSequence([base_seed, rep, n]))
            dataset = gt.sample(n, rng)
            fit = fit_mle(model, dataset)
            region = noisy_ball_region(model, fit.theta,
                                       FixedRadius(3.0 / math.sqrt(n)))
            preds = []
            maps = []
            for xi in range(len(xs)):
                opt = OptConfig(seed=int(rng.integers(2 ** 32)))
                report = gap_bound_report(gt, model, region, xi, opt,
                                          tie_rng=rng)
                all_hold = all_hold and report.gap_bound_holds
                preds.append(report.predicted_class)
                maps.append(report.map_class)
            gaps.append(misclassification_rate(gt, preds)
                        - misclassification_rate(gt, maps))
        medians[n] = float(np.median(gaps))
    return {
        "median_gap_small_n": medians[n_small],
        "median_gap_large_n": medians[n_large],
        "improves": medians[n_large] < medians[n_small],
        "all_bounds_hold": all_hold,
        "elapsed": time.time() - t0,
    }


ALL_CHECKS = (
    gap_bound_suite,
    redundancy_suite,
    triangle_suite,
    fisher_bound_suite,
    leakage_property_suite,
    pinsker_suite,
    grid_oracle_suite,
)
