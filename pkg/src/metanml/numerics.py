"""Self-contained numeric primitives.

Everything here is implemented from first principles (power series,
continued fractions, Jacobi rotations) so results are reproducible
bit-for-bit across platforms without pulling in a special-function
library.  numpy is used only as the array container.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import jacobi_eigh, reg_lower_gamma

__all__ = [
    "SymmetricMatrix",
    "jacobi_decomposition",
    "eigenvalues",
    "extreme_eigenvalues",
    "max_eigenvalue",
    "chi2_cdf",
    "chi2_inverse_cdf",
    "kl_divergence",
    "total_variation",
]

PROB_FLOOR = 1e-300

_JACOBI_OFF_TOL = 1e-12
_JACOBI_MAX_SWEEPS = 100


@dataclass(frozen=True)
class SymmetricMatrix:
    """Symmetric matrix in packed lower-triangular storage.

    Parameters
    ----------
    dim : int
        Matrix dimension.
    packed : numpy.ndarray
        Row-major lower triangle, length ``dim * (dim + 1) // 2``.
    """

    dim: int
    packed: np.ndarray

    @classmethod
    def from_full(cls, mat, sym_tol=1e-9):
        """Pack a dense symmetric matrix; rejects asymmetric input."""
        A = np.asarray(mat, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("expected a square matrix")
        scale = max(1.0, float(np.abs(A).max())) if A.size else 1.0
        if np.abs(A - A.T).max(initial=0.0) > sym_tol * scale:
            raise ValueError("matrix is not symmetric within tolerance")
        d = A.shape[0]
        packed = np.empty(d * (d + 1) // 2)
        k = 0
        for i in range(d):
            for j in range(i + 1):
                packed[k] = 0.5 * (A[i, j] + A[j, i])
                k += 1
        return cls(dim=d, packed=packed)

    def full(self):
        """Expand back to a dense ndarray."""
        d = self.dim
        A = np.empty((d, d))
        k = 0
        for i in range(d):
            for j in range(i + 1):
                A[i, j] = self.packed[k]
                A[j, i] = self.packed[k]
                k += 1
        return A


def _as_dense(mat):
    if isinstance(mat, SymmetricMatrix):
        return mat.full()
    A = np.ascontiguousarray(mat, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix")
    return A


def jacobi_decomposition(mat):
    """Full eigendecomposition by cyclic Jacobi rotations.

    Returns
    -------
    (w, V) : eigenvalues sorted ascending and the matching orthonormal
        eigenvector columns.  Sweeps stop once the off-diagonal
        Frobenius norm falls below 1e-12.
    """
    A = _as_dense(mat)
    if A.shape[0] == 0:
        raise ValueError("empty matrix")
    w, V, _off = jacobi_eigh(A, _JACOBI_OFF_TOL, _JACOBI_MAX_SWEEPS)
    order = np.argsort(w)
    return w[order], V[:, order]


def eigenvalues(mat):
    w, _ = jacobi_decomposition(mat)
    return w


def extreme_eigenvalues(mat):
    """(smallest, largest) eigenvalue of a symmetric matrix."""
    w = eigenvalues(mat)
    return float(w[0]), float(w[-1])


def max_eigenvalue(mat):
    return extreme_eigenvalues(mat)[1]


def chi2_cdf(dof, x):
    """Chi-squared CDF with ``dof`` degrees of freedom.

    Uses the regularized lower incomplete gamma (series for small
    arguments, continued fraction for large).
    """
    if int(dof) != dof or dof < 1:
        raise ValueError("dof must be a positive integer")
    x = float(x)
    if x <= 0.0:
        return 0.0
    return float(reg_lower_gamma(0.5 * dof, 0.5 * x))


def _chi2_log_pdf(dof, x):
    a = 0.5 * dof
    return (a - 1.0) * math.log(x) - 0.5 * x - a * math.log(2.0) - math.lgamma(a)


def chi2_inverse_cdf(dof, t):
    """Quantile of the chi-squared distribution.

    Newton iteration on the regularized incomplete gamma with a
    maintained bisection bracket as safeguard; the result ``x``
    satisfies ``|chi2_cdf(dof, x) - t| <= 1e-12`` in practice.
    """
    if int(dof) != dof or dof < 1:
        raise ValueError("dof must be a positive integer")
    t = float(t)
    if not 0.0 < t < 1.0:
        raise ValueError("t must lie strictly inside (0, 1)")
    lo = 0.0
    hi = float(dof)
    for _ in range(400):
        if chi2_cdf(dof, hi) > t:
            break
        hi *= 2.0
    else:  # pragma: no cover - t < 1 guarantees a bracket
        raise ArithmeticError("failed to bracket the quantile")
    x = 0.5 * (lo + hi)
    for _ in range(200):
        f = chi2_cdf(dof, x) - t
        if f > 0.0:
            hi = x
        else:
            lo = x
        if abs(f) < 1e-14:
            break
        step = f * math.exp(-_chi2_log_pdf(dof, x))
        x_new = x - step
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) < 1e-15 * max(1.0, x):
            x = x_new
            break
        x = x_new
    return x


def _check_pair(p, q):
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape or p.ndim != 1:
        raise ValueError("p and q must be 1-d vectors of equal length")
    if (p < 0).any() or (q < 0).any():
        raise ValueError("probabilities must be nonnegative")
    if abs(p.sum() - 1.0) > 1e-6 or abs(q.sum() - 1.0) > 1e-6:
        raise ValueError("inputs must sum to 1")
    return p, q


def kl_divergence(p, q):
    """KL divergence sum(p * ln(p/q)) in nats; 0 ln 0 = 0, q floored at 1e-300."""
    p, q = _check_pair(p, q)
    total = 0.0
    for pi, qi in zip(p, q):
        if pi > 0.0:
            total += pi * math.log(pi / max(qi, PROB_FLOOR))
    return total


def total_variation(p, q):
    """Total variation distance 0.5 * sum |p - q|."""
    p, q = _check_pair(p, q)
    return 0.5 * float(np.abs(p - q).sum())
