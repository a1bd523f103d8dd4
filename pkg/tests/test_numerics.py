"""Scalar and matrix numerics: chi-squared quantiles, the Jacobi
eigensolver, and the discrete divergences.

Derived expected values are frozen from independent oracles: the
chi-squared CDF has a closed form for integer degrees of freedom
(erf / exp base cases plus a two-step recurrence), and the eigensolver
is checked against numpy's LAPACK wrapper.
"""

import math

import numpy as np
import pytest

from metanml.numerics import (
    PROB_FLOOR,
    SymmetricMatrix,
    chi2_cdf,
    chi2_inverse_cdf,
    eigenvalues,
    extreme_eigenvalues,
    jacobi_decomposition,
    kl_divergence,
    max_eigenvalue,
    total_variation,
)


def chi2_cdf_closed(x, k):
    """Closed-form chi-squared CDF for integer dof, used as the oracle."""
    if x <= 0.0:
        return 0.0
    if k % 2 == 1:
        f = math.erf(math.sqrt(x / 2.0))
        j = 1
    else:
        f = 1.0 - math.exp(-x / 2.0)
        j = 2
    while j < k:
        f -= x ** (j / 2.0) * math.exp(-x / 2.0) / (
            2.0 ** (j / 2.0) * math.gamma(j / 2.0 + 1.0))
        j += 2
    return f


class TestChi2Cdf:
    def test_matches_closed_form(self):
        xs = [0.01, 0.1, 0.5, 1.0, 2.0, 3.84, 7.0, 15.0, 40.0]
        for dof in range(1, 9):
            got = [chi2_cdf(dof, x) for x in xs]
            want = [chi2_cdf_closed(x, dof) for x in xs]
            np.testing.assert_allclose(got, want, atol=1e-12, rtol=1e-12)

    def test_boundary_and_monotone(self):
        assert chi2_cdf(3, 0.0) == 0.0
        grid = np.linspace(0.01, 30.0, 200)
        vals = np.array([chi2_cdf(3, x) for x in grid])
        assert np.all(np.diff(vals) > 0)
        assert vals[-1] < 1.0

    def test_rejects_bad_dof(self):
        with pytest.raises(ValueError):
            chi2_cdf(0, 1.0)
        with pytest.raises(ValueError):
            chi2_cdf(-2, 1.0)


class TestChi2InverseCdf:
    # oracle: bisection on chi2_cdf_closed, 200 halvings
    def test_frozen_quantiles(self):
        np.testing.assert_allclose(
            chi2_inverse_cdf(1, 0.95), 3.8414588206941227, atol=1e-9)
        np.testing.assert_allclose(
            chi2_inverse_cdf(1, 0.99), 6.634896601021204, atol=1e-9)
        np.testing.assert_allclose(
            chi2_inverse_cdf(3, 0.5), 2.3659738843753377, atol=1e-9)
        np.testing.assert_allclose(
            chi2_inverse_cdf(4, 0.9), 7.779440339734858, atol=1e-9)

    def test_exponential_case_exact(self):
        # dof 2 is an exponential: quantile at 1 - e^{-1} is exactly 2
        got = chi2_inverse_cdf(2, 1.0 - math.exp(-1.0))
        np.testing.assert_allclose(got, 2.0, atol=1e-10)

    def test_round_trip(self):
        levels = [0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99, 0.999]
        for dof in range(1, 7):
            for t in levels:
                x = chi2_inverse_cdf(dof, t)
                assert abs(chi2_cdf(dof, x) - t) <= 1e-9

    def test_rejects_bad_level(self):
        for t in (0.0, 1.0, -0.2, 1.3):
            with pytest.raises(ValueError):
                chi2_inverse_cdf(2, t)


class TestJacobi:
    def _random_sym(self, rng, d):
        a = rng.standard_normal((d, d))
        return 0.5 * (a + a.T)

    def test_known_two_by_two(self):
        w = eigenvalues([[2.0, 1.0], [1.0, 2.0]])
        np.testing.assert_allclose(w, [1.0, 3.0], atol=1e-12)

    def test_matches_lapack(self):
        rng = np.random.default_rng(42)
        for d in range(1, 9):
            for _ in range(10):
                a = self._random_sym(rng, d)
                got = eigenvalues(a)
                want = np.linalg.eigvalsh(a)
                np.testing.assert_allclose(got, want, atol=1e-9)

    def test_trace_identity(self):
        rng = np.random.default_rng(7)
        for d in (2, 4, 6, 8):
            a = self._random_sym(rng, d)
            w = eigenvalues(a)
            np.testing.assert_allclose(
                np.sum(w), np.trace(a), rtol=1e-9, atol=1e-12)

    def test_reconstruction_and_orthogonality(self):
        rng = np.random.default_rng(11)
        a = self._random_sym(rng, 5)
        w, v = jacobi_decomposition(a)
        np.testing.assert_allclose(v @ np.diag(w) @ v.T, a, atol=1e-9)
        np.testing.assert_allclose(v.T @ v, np.eye(5), atol=1e-10)

    def test_sorted_and_extremes(self):
        rng = np.random.default_rng(13)
        a = self._random_sym(rng, 6)
        w = eigenvalues(a)
        assert np.all(np.diff(w) >= 0)
        lo, hi = extreme_eigenvalues(a)
        assert lo == w[0] and hi == w[-1]
        assert max_eigenvalue(a) == w[-1]

    def test_scalar_case(self):
        np.testing.assert_allclose(eigenvalues([[3.5]]), [3.5])


class TestSymmetricMatrix:
    def test_round_trip(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((4, 4))
        a = 0.5 * (a + a.T)
        sym = SymmetricMatrix.from_full(a)
        np.testing.assert_allclose(sym.full(), a)
        assert sym.dim == 4

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            SymmetricMatrix.from_full([[1.0, 2.0], [0.0, 1.0]])


class TestDivergences:
    def test_kl_frozen_value(self):
        # 0.7 ln 1.4 + 0.3 ln 0.6
        got = kl_divergence([0.7, 0.3], [0.5, 0.5])
        np.testing.assert_allclose(got, 0.08228287850505178, atol=1e-14)

    def test_kl_self_is_zero(self):
        p = np.array([0.2, 0.5, 0.3])
        assert kl_divergence(p, p) == 0.0

    def test_kl_zero_mass_convention(self):
        # 0 ln 0 contributes nothing
        got = kl_divergence([1.0, 0.0], [0.5, 0.5])
        np.testing.assert_allclose(got, math.log(2.0), atol=1e-14)

    def test_kl_nonnegative(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            p = rng.dirichlet(np.ones(4))
            q = rng.dirichlet(np.ones(4))
            assert kl_divergence(p, q) >= 0.0

    def test_total_variation_frozen_value(self):
        got = total_variation([0.7, 0.3], [0.5, 0.5])
        np.testing.assert_allclose(got, 0.2, atol=1e-14)

    def test_pinsker(self):
        # TV <= sqrt(KL / 2)
        rng = np.random.default_rng(17)
        for _ in range(500):
            k = int(rng.integers(2, 6))
            p = rng.dirichlet(np.ones(k))
            q = rng.dirichlet(np.ones(k))
            assert total_variation(p, q) <= math.sqrt(
                kl_divergence(p, q) / 2.0) + 1e-12

    def test_floor_keeps_kl_finite(self):
        # a zero in q is floored rather than producing inf against p > 0
        got = kl_divergence([0.5, 0.5], [1.0, 0.0])
        assert np.isfinite(got)
        assert got >= 0.5 * math.log(0.5 / PROB_FLOOR) - 1.0

    def test_rejects_invalid_pairs(self):
        with pytest.raises(ValueError):
            kl_divergence([0.5, 0.6], [0.5, 0.5])
        with pytest.raises(ValueError):
            kl_divergence([0.5, 0.5], [0.5, -0.5])
        with pytest.raises(ValueError):
            total_variation([0.5, 0.5], [0.3, 0.3, 0.4])
