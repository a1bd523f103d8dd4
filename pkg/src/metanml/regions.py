"""Parameter-space regions that restrict the per-class suprema."""

from __future__ import annotations

import numpy as np

__all__ = ["ParameterRegion", "Ball", "FiniteSet", "Grid", "GRID_MAX_POINTS"]

GRID_MAX_POINTS = 10 ** 6


class ParameterRegion:
    """Subset of parameter space; supports membership and projection."""

    dim: int
    is_convex: bool

    def contains(self, theta, tol=1e-9):
        raise NotImplementedError

    def project(self, theta):
        raise NotImplementedError

    @property
    def is_singleton(self):
        return False

    def _check(self, theta):
        theta = np.ascontiguousarray(theta, dtype=float).reshape(-1)
        if theta.size != self.dim:
            raise ValueError(f"theta must have dimension {self.dim}")
        return theta


class Ball(ParameterRegion):
    """Closed Euclidean ball ``{theta : ||theta - center|| <= radius}``."""

    is_convex = True

    def __init__(self, center, radius):
        self.center = np.ascontiguousarray(center, dtype=float).reshape(-1)
        self.radius = float(radius)
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")
        if not np.isfinite(self.center).all() or not np.isfinite(self.radius):
            raise ValueError("center and radius must be finite")
        self.dim = self.center.size

    def contains(self, theta, tol=1e-9):
        theta = self._check(theta)
        return float(np.linalg.norm(theta - self.center)) <= self.radius + tol

    def project(self, theta):
        theta = self._check(theta)
        diff = theta - self.center
        nrm = float(np.linalg.norm(diff))
        if nrm <= self.radius or nrm == 0.0:
            return theta.copy()
        return self.center + (self.radius / nrm) * diff

    @property
    def is_singleton(self):
        return self.radius == 0.0

    def __repr__(self):
        return f"Ball(center=<{self.dim}d>, radius={self.radius!r})"


class FiniteSet(ParameterRegion):
    """Explicit finite set of parameter points (rows)."""

    is_convex = False

    def __init__(self, points):
        pts = np.ascontiguousarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(1, -1)
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValueError("points must be a nonempty (n, d) array")
        if not np.isfinite(pts).all():
            raise ValueError("points must be finite")
        self.points = pts
        self.dim = pts.shape[1]

    def contains(self, theta, tol=1e-9):
        theta = self._check(theta)
        return bool((np.linalg.norm(self.points - theta, axis=1) <= tol).any())

    def project(self, theta):
        """Nearest member point."""
        theta = self._check(theta)
        i = int(np.argmin(np.linalg.norm(self.points - theta, axis=1)))
        return self.points[i].copy()

    @property
    def is_singleton(self):
        return self.points.shape[0] == 1

    def __repr__(self):
        return f"FiniteSet(n={self.points.shape[0]}, dim={self.dim})"


class Grid(ParameterRegion):
    """Axis-aligned box whose suprema are taken over a regular lattice.

    Exists as a brute-force oracle region: the lattice is enumerated
    exhaustively, so the total point count is capped at 10**6.
    """

    is_convex = True  # the box hull; the lattice is its evaluation rule

    def __init__(self, lower, upper, steps):
        self.lower = np.ascontiguousarray(lower, dtype=float).reshape(-1)
        self.upper = np.ascontiguousarray(upper, dtype=float).reshape(-1)
        if self.lower.shape != self.upper.shape:
            raise ValueError("lower and upper must match in length")
        if (self.upper < self.lower).any():
            raise ValueError("need lower <= upper per axis")
        self.dim = self.lower.size
        steps_arr = np.asarray(steps, dtype=np.int64).reshape(-1)
        if steps_arr.size == 1:
            steps_arr = np.full(self.dim, int(steps_arr[0]), dtype=np.int64)
        if steps_arr.shape != (self.dim,) or (steps_arr < 1).any():
            raise ValueError("steps must be positive, one per axis")
        total = int(np.prod(steps_arr.astype(object)))
        if total > GRID_MAX_POINTS:
            raise ValueError(
                f"grid has {total} points, over the {GRID_MAX_POINTS} cap")
        self.steps = steps_arr
        self.total_points = total

    def contains(self, theta, tol=1e-9):
        theta = self._check(theta)
        return bool((theta >= self.lower - tol).all()
                    and (theta <= self.upper + tol).all())

    def project(self, theta):
        """Componentwise clip into the box."""
        theta = self._check(theta)
        return np.clip(theta, self.lower, self.upper)

    @property
    def is_singleton(self):
        return bool((self.steps == 1).all() and (self.lower == self.upper).all())

    def __repr__(self):
        return f"Grid(dim={self.dim}, total={self.total_points})"
