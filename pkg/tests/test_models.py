"""Conditional model families: normalization, gradients, and Fisher
information checked against finite differences and closed forms.
"""

import math

import numpy as np
import pytest

from metanml.models import (
    CategoricalTableModel,
    OverparamSoftmaxModel,
    SoftmaxLinearModel,
    unconditional_fisher,
)
from metanml.numerics import eigenvalues, kl_divergence


def _sigmoid(t):
    return 1.0 / (1.0 + math.exp(-t))


def _all_cases(rng):
    """(model, theta, x) triples covering every family."""
    cases = []
    m1 = CategoricalTableModel(1, 2)
    cases.append((m1, rng.standard_normal(m1.dim), 0))
    m2 = CategoricalTableModel(3, 4)
    cases.append((m2, rng.standard_normal(m2.dim), 2))
    m3 = SoftmaxLinearModel(2, 3)
    cases.append((m3, rng.standard_normal(m3.dim), rng.standard_normal(2)))
    m4 = OverparamSoftmaxModel(2, 3)
    cases.append((m4, rng.standard_normal(m4.dim), rng.standard_normal(2)))
    return cases


class TestProbabilities:
    def test_normalization(self):
        rng = np.random.default_rng(0)
        for model, theta, x in _all_cases(rng):
            p = model.probs(theta, x)
            assert p.shape == (model.num_classes,)
            assert np.all(p > 0)
            np.testing.assert_allclose(p.sum(), 1.0, atol=1e-12)

    def test_log_prob_consistency(self):
        rng = np.random.default_rng(1)
        for model, theta, x in _all_cases(rng):
            p = model.probs(theta, x)
            for y in range(model.num_classes):
                np.testing.assert_allclose(
                    model.log_prob(theta, x, y), math.log(p[y]), atol=1e-12)

    def test_bernoulli_closed_form(self):
        model = CategoricalTableModel(1, 2)
        for t in (-1.3, 0.0, 0.8472978603872037):
            p = model.probs(np.array([t]), 0)
            np.testing.assert_allclose(p[0], _sigmoid(t), atol=1e-14)
            np.testing.assert_allclose(p[1], _sigmoid(-t), atol=1e-14)

    def test_table_cells_are_independent(self):
        model = CategoricalTableModel(2, 3)
        theta = np.array([0.5, -0.2, 1.0, 0.3])
        p0 = model.probs(theta, 0)
        theta2 = theta.copy()
        theta2[2:] = 9.0
        np.testing.assert_allclose(model.probs(theta2, 0), p0)

    def test_input_validation(self):
        model = CategoricalTableModel(2, 3)
        with pytest.raises(ValueError):
            model.probs(np.zeros(3), 0)
        with pytest.raises(ValueError):
            model.probs(np.zeros(4), 5)
        with pytest.raises(ValueError):
            model.log_prob(np.zeros(4), 0, 3)


class TestGradients:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(2)
        h = 1e-6
        for model, theta, x in _all_cases(rng):
            for y in range(model.num_classes):
                g = model.grad_log_prob(theta, x, y)
                num = np.zeros_like(g)
                for i in range(theta.size):
                    e = np.zeros_like(theta)
                    e[i] = h
                    num[i] = (model.log_prob(theta + e, x, y)
                              - model.log_prob(theta - e, x, y)) / (2 * h)
                np.testing.assert_allclose(g, num, atol=1e-6)

    def test_score_has_zero_mean(self):
        rng = np.random.default_rng(3)
        for model, theta, x in _all_cases(rng):
            p = model.probs(theta, x)
            mean = sum(p[y] * model.grad_log_prob(theta, x, y)
                       for y in range(model.num_classes))
            np.testing.assert_allclose(mean, 0.0, atol=1e-12)


class TestFisher:
    def _kl_hessian(self, model, theta, x, h=1e-3, reverse=False):
        p0 = model.probs(theta, x)

        def kl_at(t):
            pt = model.probs(t, x)
            if reverse:
                return kl_divergence(pt, p0)
            return kl_divergence(p0, pt)

        d = theta.size
        H = np.zeros((d, d))
        for i in range(d):
            for j in range(d):
                ei = np.zeros(d)
                ej = np.zeros(d)
                ei[i] = h
                ej[j] = h
                H[i, j] = (kl_at(theta + ei + ej) - kl_at(theta + ei - ej)
                           - kl_at(theta - ei + ej)
                           + kl_at(theta - ei - ej)) / (4 * h * h)
        return H

    def test_equals_kl_hessian(self):
        rng = np.random.default_rng(4)
        for model, theta, x in _all_cases(rng):
            F = model.fisher_at(theta, x)
            np.testing.assert_allclose(
                F, self._kl_hessian(model, theta, x), atol=1e-4)

    def test_equals_reverse_kl_hessian(self):
        rng = np.random.default_rng(5)
        model = SoftmaxLinearModel(2, 3)
        theta = rng.standard_normal(model.dim)
        x = rng.standard_normal(2)
        F = model.fisher_at(theta, x)
        np.testing.assert_allclose(
            F, self._kl_hessian(model, theta, x, reverse=True), atol=1e-4)

    def test_bernoulli_closed_form(self):
        model = CategoricalTableModel(1, 2)
        F0 = model.fisher_at(np.array([0.0]), 0)
        np.testing.assert_allclose(F0, [[0.25]], atol=1e-14)
        t = math.log(0.7 / 0.3)
        Ft = model.fisher_at(np.array([t]), 0)
        np.testing.assert_allclose(Ft, [[0.7 * 0.3]], atol=1e-12)

    def test_bernoulli_mean_reparameterization(self):
        # F_p = F_theta * (dtheta/dp)^2 with theta = logit(p)
        model = CategoricalTableModel(1, 2)
        for p in (0.5, 0.7, 0.9):
            t = math.log(p / (1 - p))
            f_logit = model.fisher_at(np.array([t]), 0)[0, 0]
            f_mean = f_logit / (p * (1 - p)) ** 2
            np.testing.assert_allclose(f_mean, 1.0 / (p * (1 - p)), rtol=1e-10)

    def test_positive_semidefinite(self):
        rng = np.random.default_rng(6)
        for model, theta, x in _all_cases(rng):
            w = eigenvalues(model.fisher_at(theta, x))
            assert np.all(w >= -1e-9)


class TestOverparam:
    def test_shift_invariance(self):
        # adding the same vector to every class block leaves probs alone
        rng = np.random.default_rng(7)
        model = OverparamSoftmaxModel(2, 3)
        theta = rng.standard_normal(model.dim)
        x = rng.standard_normal(2)
        shift = np.tile(rng.standard_normal(2), model.num_classes)
        np.testing.assert_allclose(
            model.probs(theta + 3.0 * shift, x), model.probs(theta, x),
            atol=1e-12)

    def test_fisher_is_singular(self):
        rng = np.random.default_rng(8)
        model = OverparamSoftmaxModel(2, 2)
        theta = rng.standard_normal(model.dim)
        x = rng.standard_normal(2)
        w = eigenvalues(model.fisher_at(theta, x))
        assert w[0] <= 1e-10

    def test_dimension_bookkeeping(self):
        assert OverparamSoftmaxModel(4, 3).dim == 12
        assert SoftmaxLinearModel(4, 3).dim == 8
        assert CategoricalTableModel(3, 4).dim == 9


class TestUnconditionalFisher:
    def test_weighted_average(self):
        rng = np.random.default_rng(9)
        model = SoftmaxLinearModel(2, 3)
        theta = rng.standard_normal(model.dim)
        xs = [rng.standard_normal(2) for _ in range(3)]
        weights = np.array([0.5, 0.3, 0.2])
        got = unconditional_fisher(model, theta, xs, weights)
        want = sum(w * model.fisher_at(theta, x)
                   for w, x in zip(weights, xs))
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_uniform_default(self):
        rng = np.random.default_rng(10)
        model = CategoricalTableModel(2, 2)
        theta = rng.standard_normal(model.dim)
        xs = [0, 1]
        got = unconditional_fisher(model, theta, xs)
        want = 0.5 * (model.fisher_at(theta, 0)
                      + model.fisher_at(theta, 1))
        np.testing.assert_allclose(got, want, atol=1e-12)
