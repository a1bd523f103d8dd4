"""Parameter regions: membership, projection, and the convexity and
singleton flags the bound machinery relies on.
"""

import numpy as np
import pytest

from metanml.regions import Ball, FiniteSet, GRID_MAX_POINTS, Grid


class TestBall:
    def test_membership(self):
        b = Ball(center=[0.0, 0.0], radius=1.0)
        assert b.contains([0.0, 0.0])
        assert b.contains([1.0, 0.0])
        assert not b.contains([1.01, 0.0])

    def test_projection(self):
        b = Ball(center=[1.0, 0.0], radius=2.0)
        inside = np.array([1.5, 0.5])
        np.testing.assert_allclose(b.project(inside), inside)
        far = np.array([11.0, 0.0])
        proj = b.project(far)
        np.testing.assert_allclose(proj, [3.0, 0.0])
        # idempotent
        np.testing.assert_allclose(b.project(proj), proj)

    def test_projection_lands_on_sphere(self):
        rng = np.random.default_rng(1)
        b = Ball(center=rng.standard_normal(4), radius=0.7)
        for _ in range(50):
            theta = b.center + 5.0 * rng.standard_normal(4)
            if np.linalg.norm(theta - b.center) <= b.radius:
                continue
            proj = b.project(theta)
            np.testing.assert_allclose(
                np.linalg.norm(proj - b.center), b.radius, atol=1e-12)
            assert b.contains(proj)

    def test_singleton_flag(self):
        assert Ball([1.0], 0.0).is_singleton
        assert not Ball([1.0], 0.1).is_singleton
        assert Ball([0.0], 1.0).is_convex

    def test_negative_radius_rejected(self):
        with pytest.raises(ValueError):
            Ball([0.0], -0.5)


class TestFiniteSet:
    def test_membership_and_projection(self):
        pts = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 0.0]])
        s = FiniteSet(pts)
        assert s.contains([1.0, 1.0])
        assert not s.contains([0.5, 0.5])
        np.testing.assert_allclose(s.project([1.9, 0.2]), [2.0, 0.0])
        np.testing.assert_allclose(s.project([0.1, -0.1]), [0.0, 0.0])

    def test_flags(self):
        one = FiniteSet(np.array([[3.0, 1.0]]))
        assert one.is_singleton
        assert not one.is_convex
        many = FiniteSet(np.zeros((2, 3)))
        assert not many.is_singleton

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            FiniteSet(np.zeros((0, 2)))


class TestGrid:
    def test_membership_and_projection(self):
        g = Grid(lower=[0.0, -1.0], upper=[1.0, 1.0], steps=[5, 5])
        assert g.contains([0.5, 0.0])
        assert not g.contains([1.5, 0.0])
        np.testing.assert_allclose(g.project([2.0, -3.0]), [1.0, -1.0])
        inside = np.array([0.3, 0.3])
        np.testing.assert_allclose(g.project(inside), inside)

    def test_is_convex_box(self):
        g = Grid([0.0], [1.0], [3])
        assert g.is_convex
        assert not g.is_singleton

    def test_lattice_cap(self):
        with pytest.raises(ValueError):
            Grid(lower=[0.0] * 4, upper=[1.0] * 4, steps=[200] * 4)
        assert 200 ** 4 > GRID_MAX_POINTS

    def test_bad_bounds_rejected(self):
        with pytest.raises(ValueError):
            Grid(lower=[1.0], upper=[0.0], steps=[3])
