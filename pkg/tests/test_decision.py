"""Tie-broken argmax decisions, ground-truth tables, sampling, and the
per-query excess-error bookkeeping.
"""

import numpy as np
import pytest

from metanml.decision import (
    FiniteMarginal,
    GroundTruth,
    TIE_TOL,
    argmax_tie_break,
    gap_vs_map,
    map_misclassification_at,
    misclassification_at,
    misclassification_rate,
)
from metanml.models import CategoricalTableModel, SoftmaxLinearModel


class TestArgmaxTieBreak:
    def test_unique_maximum(self):
        assert argmax_tie_break(np.array([0.1, 0.7, 0.2])) == 1
        assert argmax_tie_break(np.array([3.0])) == 0

    def test_tie_is_uniform(self):
        rng = np.random.default_rng(123)
        vals = np.array([0.4, 0.4, 0.2])
        picks = np.array([argmax_tie_break(vals, rng) for _ in range(10000)])
        freq0 = np.mean(picks == 0)
        assert set(np.unique(picks)) == {0, 1}
        np.testing.assert_allclose(freq0, 0.5, atol=0.02)

    def test_three_way_tie(self):
        rng = np.random.default_rng(7)
        vals = np.array([1.0, 1.0, 1.0])
        picks = np.array([argmax_tie_break(vals, rng) for _ in range(12000)])
        for k in range(3):
            np.testing.assert_allclose(np.mean(picks == k), 1 / 3, atol=0.02)

    def test_tolerance_window(self):
        # within TIE_TOL of the max counts as tied; beyond it does not
        rng = np.random.default_rng(9)
        vals = np.array([0.5, 0.5 - 0.5 * TIE_TOL])
        picks = {argmax_tie_break(vals, rng) for _ in range(200)}
        assert picks == {0, 1}
        assert argmax_tie_break(np.array([0.5, 0.5 - 1e-6]), rng) == 0


class TestFiniteMarginal:
    def test_validation(self):
        with pytest.raises(ValueError):
            FiniteMarginal([0.5, 0.6])
        with pytest.raises(ValueError):
            FiniteMarginal([1.2, -0.2])

    def test_uniform(self):
        m = FiniteMarginal.uniform(4)
        np.testing.assert_allclose(m.probs, 0.25)

    def test_sampling_rates(self):
        m = FiniteMarginal([0.7, 0.2, 0.1])
        rng = np.random.default_rng(11)
        idx = m.sample_indices(20000, rng)
        np.testing.assert_allclose(np.mean(idx == 0), 0.7, atol=0.02)
        np.testing.assert_allclose(np.mean(idx == 2), 0.1, atol=0.02)


class TestGroundTruth:
    def _bernoulli_gt(self, p=0.7):
        model = CategoricalTableModel(1, 2)
        theta0 = np.array([np.log(p / (1 - p))])
        return GroundTruth.from_model(model, theta0, xs=[0]), model, theta0

    def test_from_model_matches_probs(self):
        gt, model, theta0 = self._bernoulli_gt()
        np.testing.assert_allclose(gt.cond_probs(0), model.probs(theta0, 0))
        np.testing.assert_allclose(
            gt.log_cond_probs(0), np.log(model.probs(theta0, 0)))

    def test_map_and_bayes_error(self):
        gt, _, _ = self._bernoulli_gt(0.7)
        assert gt.map_class(0) == 0
        np.testing.assert_allclose(gt.bayes_error_at(0), 0.3, atol=1e-12)

    def test_row_validation(self):
        with pytest.raises(ValueError):
            GroundTruth(xs=[0], cond_table=np.array([[0.6, 0.5]]),
                        marginal=FiniteMarginal([1.0]))

    def test_sampling_law(self):
        gt, _, _ = self._bernoulli_gt(0.7)
        rng = np.random.default_rng(21)
        ds = gt.sample(30000, rng)
        np.testing.assert_allclose(np.mean(ds.y == 0), 0.7, atol=0.02)
        assert ds.n == 30000

    def test_sampling_feature_encoding(self):
        rng = np.random.default_rng(22)
        model = SoftmaxLinearModel(2, 3)
        theta0 = rng.standard_normal(model.dim)
        xs = [rng.standard_normal(2) for _ in range(4)]
        gt = GroundTruth.from_model(model, theta0, xs=xs)
        ds = gt.sample(50, rng)
        # every sampled row must be one of the panel points
        panel = np.stack([np.asarray(x, dtype=float) for x in xs])
        for row in ds.X:
            assert any(np.allclose(row, p) for p in panel)


class TestErrorBookkeeping:
    def _gt(self):
        table = np.array([[0.5, 0.3, 0.2], [0.2, 0.2, 0.6]])
        return GroundTruth(xs=[0, 1], cond_table=table,
                           marginal=FiniteMarginal([0.5, 0.5]))

    def test_misclassification(self):
        gt = self._gt()
        np.testing.assert_allclose(misclassification_at(gt, 0, 1), 0.7)
        np.testing.assert_allclose(map_misclassification_at(gt, 0), 0.5)

    def test_gap_vs_map(self):
        gt = self._gt()
        np.testing.assert_allclose(gap_vs_map(gt, 0, 0), 0.0)
        np.testing.assert_allclose(gap_vs_map(gt, 0, 1), 0.2)
        np.testing.assert_allclose(gap_vs_map(gt, 0, 2), 0.3)
        assert gap_vs_map(gt, 1, 0) > 0

    def test_map_dominates_every_rule(self):
        gt = self._gt()
        for x_index in (0, 1):
            for pred in range(3):
                assert gap_vs_map(gt, x_index, pred) >= -1e-15

    def test_marginal_rate(self):
        gt = self._gt()
        rate = misclassification_rate(gt, predictions=[0, 2])
        np.testing.assert_allclose(rate, 0.5 * 0.5 + 0.5 * 0.4)
