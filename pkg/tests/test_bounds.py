"""Gap, redundancy, and curvature bounds, plus the per-query report
and the sqrt-n decay chain.

Frozen cases use the Bernoulli logit interval [0, 0.8473], where the
per-class suprema and the curvature sum have closed forms.
"""

import math

import numpy as np
import pytest

from metanml.bounds import (
    BOUND_TOL,
    approximation_gap,
    decay_chain,
    fisher_leakage_bound,
    gap_bound_report,
    max_regret,
    redundancy,
    trace_gap_bound,
)
from metanml.curvature import eig_gap_bound
from metanml.decision import GroundTruth
from metanml.models import CategoricalTableModel, SoftmaxLinearModel
from metanml.nml import OptConfig, nml_distribution
from metanml.regions import Ball, FiniteSet, Grid
from metanml.estimators import berry_esseen_radius

BERN = CategoricalTableModel(1, 2)


class TestApproximationGap:
    def test_singleton_frozen_value(self):
        # max over classes of ln f / p for f = (0.7, 0.3), p = (0.6, 0.4)
        theta = np.array([math.log(0.6 / 0.4)])
        res = approximation_gap(BERN, FiniteSet(theta.reshape(1, -1)), 0,
                                f=np.array([0.7, 0.3]))
        np.testing.assert_allclose(res.value, math.log(0.7 / 0.6), atol=1e-12)

    def test_truth_in_region_is_near_zero(self):
        # the infimum is exactly 0 at the true parameter; the solver may
        # sit a hair above it but never meaningfully below
        theta0 = np.array([0.3])
        gt_f = BERN.probs(theta0, 0)
        region = Ball([0.1], 0.5)
        res = approximation_gap(BERN, region, 0, f=gt_f)
        assert res.value >= -1e-8
        assert res.value <= 1e-3
        assert region.contains(res.argmin)

    def test_finite_set_exact(self):
        rng = np.random.default_rng(2)
        model = CategoricalTableModel(1, 3)
        pts = rng.standard_normal((4, 2))
        f = rng.dirichlet(np.ones(3))
        res = approximation_gap(model, FiniteSet(pts), 0, f)
        want = min(
            max(math.log(f[y] / model.probs(p, 0)[y]) for y in range(3))
            for p in pts)
        np.testing.assert_allclose(res.value, want, atol=1e-12)

    def test_grid_exact(self):
        model = BERN
        f = np.array([0.65, 0.35])
        region = Grid([-1.0], [1.0], [41])
        res = approximation_gap(model, region, 0, f)
        lattice = np.linspace(-1.0, 1.0, 41)
        want = min(
            max(math.log(f[y] / model.probs(np.array([t]), 0)[y])
                for y in range(2))
            for t in lattice)
        np.testing.assert_allclose(res.value, want, atol=1e-12)

    def test_zero_f_classes_ignored(self):
        theta = np.array([0.0])
        res = approximation_gap(BERN, FiniteSet(theta.reshape(1, -1)), 0,
                                f=np.array([1.0, 0.0]))
        np.testing.assert_allclose(res.value, math.log(1.0 / 0.5), atol=1e-12)

    def test_rejects_bad_f(self):
        region = Ball([0.0], 1.0)
        with pytest.raises(ValueError):
            approximation_gap(BERN, region, 0, f=np.array([0.7, 0.7]))
        with pytest.raises(ValueError):
            approximation_gap(BERN, region, 0, f=np.array([0.5, 0.3, 0.2]))


class TestRedundancy:
    def test_frozen_value(self):
        got = redundancy(np.array([0.7, 0.3]), np.array([0.5, 0.5]))
        np.testing.assert_allclose(got, math.log(1.4), atol=1e-14)

    def test_zero_on_equal(self):
        f = np.array([0.25, 0.75])
        assert redundancy(f, f) == 0.0

    def test_zero_f_class_ignored(self):
        got = redundancy(np.array([1.0, 0.0]), np.array([0.5, 0.5]))
        np.testing.assert_allclose(got, math.log(2.0), atol=1e-14)

    def test_nonnegative_against_distributions(self):
        # max_y ln f/q >= 0 whenever both are distributions
        rng = np.random.default_rng(3)
        for _ in range(100):
            f = rng.dirichlet(np.ones(4))
            q = rng.dirichlet(np.ones(4))
            assert redundancy(f, q) >= -1e-15


class TestMaxRegret:
    def test_equals_leakage_at_nml(self):
        # with q the NML weights, every class attains ln Z
        opt = OptConfig(seed=5)
        region = Ball([0.3], 0.6)
        dist = nml_distribution(BERN, region, 0, opt)
        got = max_regret(BERN, region, 0, dist.q, opt)
        np.testing.assert_allclose(got, dist.leakage, atol=1e-12)

    def test_other_q_is_no_smaller(self):
        opt = OptConfig(seed=6)
        region = Ball([0.3], 0.6)
        dist = nml_distribution(BERN, region, 0, opt)
        skew = np.array([0.9, 0.1])
        assert max_regret(BERN, region, 0, skew, opt) >= dist.leakage - 1e-12


class TestTriangleInequality:
    def test_redundancy_bounded_by_gap_plus_regret(self):
        rng = np.random.default_rng(7)
        model = CategoricalTableModel(1, 3)
        opt = OptConfig(seed=8)
        for _ in range(20):
            region = Ball(rng.standard_normal(2), float(0.2 + rng.random()))
            dist = nml_distribution(model, region, 0, opt)
            f = rng.dirichlet(np.ones(3))
            delta = approximation_gap(model, region, 0, f, opt).value
            regret = max_regret(model, region, 0, dist.q, opt)
            assert redundancy(f, dist.q) <= delta + regret + 1e-8


class TestFisherLeakageBound:
    CENTER, RADIUS = 0.42365, 0.42365

    def test_interval_frozen_case(self):
        region = Ball([self.CENTER], self.RADIUS)
        dist = nml_distribution(BERN, region, 0)
        bound = fisher_leakage_bound(BERN, region, 0, dist.per_class_argmax)
        # |0.8473 - 0| * sqrt(max p(1-p) on the segment) = 0.8473 * 0.5
        np.testing.assert_allclose(bound.sum_term, 0.8473 * 0.5, atol=1e-5)
        np.testing.assert_allclose(bound.log_bound,
                                   math.log1p(bound.sum_term), atol=1e-15)
        lhs = math.expm1(dist.leakage)
        np.testing.assert_allclose(lhs, 0.20000044931849503, atol=1e-6)
        assert lhs <= bound.sum_term + 1e-8

    def test_needs_convex_region(self):
        pts = np.array([[0.0], [1.0]])
        with pytest.raises(ValueError):
            fisher_leakage_bound(BERN, FiniteSet(pts), 0,
                                 np.zeros((2, 1)))

    def test_needs_two_segment_points(self):
        region = Ball([0.0], 1.0)
        with pytest.raises(ValueError):
            fisher_leakage_bound(BERN, region, 0, np.zeros((2, 1)),
                                 n_segment=1)

    def test_holds_on_random_balls(self):
        rng = np.random.default_rng(9)
        model = CategoricalTableModel(1, 3)
        for _ in range(20):
            region = Ball(rng.standard_normal(2), float(0.1 + rng.random()))
            dist = nml_distribution(model, region, 0)
            bound = fisher_leakage_bound(model, region, 0,
                                         dist.per_class_argmax)
            assert math.expm1(dist.leakage) <= bound.sum_term + 1e-8


class TestTraceVsEigBound:
    def test_scalar_parameter_equality(self):
        rho = 0.4
        theta = np.array([0.2])
        t = trace_gap_bound(BERN, theta, rho, xs=[0], n_samples=32, seed=11)
        e = eig_gap_bound(BERN, theta, rho, 0, n_samples=32, seed=11)
        np.testing.assert_allclose(t, e, rtol=1e-12)

    def test_trace_dominates_eigenvalue(self):
        rng = np.random.default_rng(13)
        model = SoftmaxLinearModel(2, 2)
        theta = rng.standard_normal(model.dim)
        x = rng.standard_normal(2)
        t = trace_gap_bound(model, theta, 0.5, xs=[x], n_samples=32, seed=11)
        e = eig_gap_bound(model, theta, 0.5, x, n_samples=32, seed=11)
        assert t >= e - 1e-12


class TestGapBoundReport:
    def _gt(self):
        model = CategoricalTableModel(1, 3)
        theta0 = np.array([0.4, -0.3])
        return GroundTruth.from_model(model, theta0, xs=[0]), model, theta0

    def test_truth_in_ball(self):
        gt, model, theta0 = self._gt()
        region = Ball(theta0 + 0.05, 0.3)
        rep = gap_bound_report(gt, model, region, 0)
        assert rep.gap_bound_holds
        assert rep.gap <= rep.gap_bound + BOUND_TOL
        assert rep.fisher_bound is not None
        assert rep.fisher_bound_holds
        assert rep.leakage > 0
        assert rep.x_index == 0

    def test_region_far_from_truth_still_bounds(self):
        gt, model, theta0 = self._gt()
        region = Ball(theta0 + np.array([2.5, -2.0]), 0.2)
        rep = gap_bound_report(gt, model, region, 0)
        assert rep.approx_gap > 0.1
        assert rep.gap_bound_holds

    def test_singleton_has_no_curvature_bound(self):
        gt, model, theta0 = self._gt()
        rep = gap_bound_report(gt, model, FiniteSet(theta0.reshape(1, -1)), 0)
        assert rep.fisher_bound is None
        assert rep.leakage == 0.0
        assert rep.gap_bound_holds


class TestDecayChain:
    def test_chain_fields_and_inequalities(self):
        model = CategoricalTableModel(1, 2)
        theta0 = np.array([math.log(0.7 / 0.3)])
        gt = GroundTruth.from_model(model, theta0, xs=[0])
        rng = np.random.default_rng(15)
        ds = gt.sample(400, rng)
        chain = decay_chain(gt, model, ds, 0, delta=0.05)
        sig_min = 0.7 * 0.3
        want_rho = berry_esseen_radius(1, 400, 0.05, 0.0, sig_min)
        np.testing.assert_allclose(chain.rho_n, want_rho, atol=1e-12)
        assert chain.n == 400
        assert chain.coverage == (
            abs(chain.theta_hat[0] - theta0[0]) <= chain.rho_n)
        if chain.coverage:
            assert chain.gap <= math.expm1(chain.leakage) + BOUND_TOL
            assert math.expm1(chain.leakage) <= chain.sqrt_n_bound + BOUND_TOL

    def test_explicit_sigma_min(self):
        model = CategoricalTableModel(1, 2)
        theta0 = np.array([0.0])
        gt = GroundTruth.from_model(model, theta0, xs=[0])
        ds = gt.sample(100, np.random.default_rng(17))
        chain = decay_chain(gt, model, ds, 0, delta=0.05, sigma_min=0.25)
        want_rho = berry_esseen_radius(1, 100, 0.05, 0.0, 0.25)
        np.testing.assert_allclose(chain.rho_n, want_rho, atol=1e-12)

    def test_needs_model_truth(self):
        from metanml.decision import FiniteMarginal

        gt = GroundTruth(xs=[0], cond_table=np.array([[0.7, 0.3]]),
                         marginal=FiniteMarginal([1.0]))
        model = CategoricalTableModel(1, 2)
        ds = GroundTruth.from_model(
            model, np.array([0.0]), xs=[0]).sample(
                50, np.random.default_rng(19))
        with pytest.raises(ValueError):
            decay_chain(gt, model, ds, 0, delta=0.05)
