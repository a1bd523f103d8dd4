"""Hot numeric kernels, jitted with numba when available.

Every function in this module is written in plain loop-oriented
numpy so that the exact same source runs in two modes:

* compiled with ``numba.njit`` (the default), or
* as ordinary Python (the fallback), selected by setting the
  environment variable ``METANML_NO_NUMBA=1`` before import, or
  automatically when numba cannot be imported.

``benchmarks/bench_kernels.py`` compares the two paths.

Model families are encoded for the kernels by an integer ``kind``:

* ``0`` -- categorical table: ``x[0]`` holds the cell index, theta is
  the concatenation of per-cell logits with the last class pinned at 0
  (``n_cells * (K - 1)`` entries).
* ``1`` -- linear softmax with the last class pinned: theta is the
  row-major ``(K - 1) x m`` weight matrix, ``x`` the feature vector.
* ``2`` -- over-parameterized linear softmax: theta is row-major
  ``K x m`` with no pinning.
"""

from __future__ import annotations

import math
import os

import numpy as np

_flag = os.environ.get("METANML_NO_NUMBA", "").strip().lower()
NUMBA_REQUESTED = _flag in ("", "0", "false", "no")

if NUMBA_REQUESTED:
    try:
        from numba import njit as _njit

        NUMBA_ACTIVE = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ACTIVE = False
else:
    NUMBA_ACTIVE = False


def jit_kernel(func):
    """Compile ``func`` with numba when enabled, else return it unchanged."""
    if NUMBA_ACTIVE:
        return _njit(cache=True)(func)
    return func


# ---------------------------------------------------------------------------
# model primitives
# ---------------------------------------------------------------------------


@jit_kernel
def class_logits(kind, K, theta, x):
    """Per-class logits for one query point; pinned classes get 0."""
    out = np.zeros(K)
    if kind == 0:
        cell = int(x[0])
        base = cell * (K - 1)
        for k in range(K - 1):
            out[k] = theta[base + k]
    elif kind == 1:
        m = x.size
        for k in range(K - 1):
            s = 0.0
            for j in range(m):
                s += theta[k * m + j] * x[j]
            out[k] = s
    else:
        m = x.size
        for k in range(K):
            s = 0.0
            for j in range(m):
                s += theta[k * m + j] * x[j]
            out[k] = s
    return out


@jit_kernel
def logsumexp_1d(v):
    hi = v[0]
    for i in range(1, v.size):
        if v[i] > hi:
            hi = v[i]
    s = 0.0
    for i in range(v.size):
        s += math.exp(v[i] - hi)
    return hi + math.log(s)


@jit_kernel
def class_probs(kind, K, theta, x):
    logits = class_logits(kind, K, theta, x)
    lse = logsumexp_1d(logits)
    p = np.empty(K)
    for k in range(K):
        p[k] = math.exp(logits[k] - lse)
    return p


@jit_kernel
def log_prob_kernel(kind, K, theta, x, y):
    logits = class_logits(kind, K, theta, x)
    return logits[y] - logsumexp_1d(logits)


@jit_kernel
def grad_log_prob_kernel(kind, K, theta, x, y):
    """Gradient of ``ln p_theta(y | x)`` with respect to theta."""
    p = class_probs(kind, K, theta, x)
    g = np.zeros(theta.size)
    if kind == 0:
        cell = int(x[0])
        base = cell * (K - 1)
        for k in range(K - 1):
            ind = 1.0 if k == y else 0.0
            g[base + k] = ind - p[k]
    elif kind == 1:
        m = x.size
        for k in range(K - 1):
            ind = 1.0 if k == y else 0.0
            coef = ind - p[k]
            for j in range(m):
                g[k * m + j] = coef * x[j]
    else:
        m = x.size
        for k in range(K):
            ind = 1.0 if k == y else 0.0
            coef = ind - p[k]
            for j in range(m):
                g[k * m + j] = coef * x[j]
    return g


@jit_kernel
def fisher_kernel(kind, K, theta, x):
    """Conditional Fisher information as the exact K-term score covariance."""
    d = theta.size
    out = np.zeros((d, d))
    p = class_probs(kind, K, theta, x)
    for y in range(K):
        g = grad_log_prob_kernel(kind, K, theta, x, y)
        w = p[y]
        for i in range(d):
            gi = g[i]
            if gi == 0.0:
                continue
            for j in range(d):
                out[i, j] += w * gi * g[j]
    return out


# ---------------------------------------------------------------------------
# ball-constrained optimization
# ---------------------------------------------------------------------------


@jit_kernel
def project_ball(v, center, radius):
    d = v.size
    out = np.empty(d)
    nrm = 0.0
    for i in range(d):
        diff = v[i] - center[i]
        nrm += diff * diff
    nrm = math.sqrt(nrm)
    if nrm <= radius or nrm == 0.0:
        for i in range(d):
            out[i] = v[i]
    else:
        scale = radius / nrm
        for i in range(d):
            out[i] = center[i] + scale * (v[i] - center[i])
    return out


@jit_kernel
def ball_sup_kernel(kind, K, center, radius, x, y, starts, max_iter, pg_tol, armijo):
    """Maximize ``ln p_theta(y | x)`` over the closed ball by projected
    gradient ascent with a doubling/backtracking Armijo line search.

    ``starts`` holds one start per row (the first row should be the
    center).  Returns the best log value, its argument, and 1.0 when at
    least one start met the projected-gradient tolerance.
    """
    d = center.size
    best_val = -np.inf
    best_theta = np.empty(d)
    for i in range(d):
        best_theta[i] = center[i]
    any_converged = 0.0
    n_starts = starts.shape[0]
    for s in range(n_starts):
        theta = project_ball(starts[s], center, radius)
        fval = log_prob_kernel(kind, K, theta, x, y)
        step = 1.0
        converged = 0.0
        for _ in range(max_iter):
            g = grad_log_prob_kernel(kind, K, theta, x, y)
            cand = project_ball(theta + g, center, radius)
            pg = 0.0
            for i in range(d):
                diff = cand[i] - theta[i]
                pg += diff * diff
            if math.sqrt(pg) < pg_tol:
                converged = 1.0
                break
            step *= 2.0
            accepted = False
            for _ in range(64):
                trial = project_ball(theta + step * g, center, radius)
                ftrial = log_prob_kernel(kind, K, trial, x, y)
                descent = 0.0
                for i in range(d):
                    descent += g[i] * (trial[i] - theta[i])
                if ftrial >= fval + armijo * descent:
                    theta = trial
                    fval = ftrial
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                break
        if fval > best_val:
            best_val = fval
            best_theta = theta
        if converged == 1.0:
            any_converged = 1.0
    return best_val, best_theta, any_converged


@jit_kernel
def delta_smooth_val_grad(kind, K, theta, x, log_f, active, tau):
    """Soft-max (log-sum-exp at temperature tau) of the per-class log
    ratios ``ln f(y|x) - ln p_theta(y|x)`` together with its gradient."""
    d = theta.size
    logits = class_logits(kind, K, theta, x)
    lse = logsumexp_1d(logits)
    hi = -np.inf
    r = np.empty(K)
    for k in range(K):
        if active[k]:
            r[k] = log_f[k] - (logits[k] - lse)
            if r[k] > hi:
                hi = r[k]
        else:
            r[k] = -np.inf
    zsum = 0.0
    w = np.zeros(K)
    for k in range(K):
        if active[k]:
            w[k] = math.exp(tau * (r[k] - hi))
            zsum += w[k]
    val = hi + math.log(zsum) / tau
    grad = np.zeros(d)
    for k in range(K):
        if active[k] and w[k] > 0.0:
            coef = w[k] / zsum
            gk = grad_log_prob_kernel(kind, K, theta, x, k)
            for i in range(d):
                grad[i] -= coef * gk[i]
    return val, grad


@jit_kernel
def hard_max_ratio(kind, K, theta, x, log_f, active):
    logits = class_logits(kind, K, theta, x)
    lse = logsumexp_1d(logits)
    hi = -np.inf
    for k in range(K):
        if active[k]:
            rk = log_f[k] - (logits[k] - lse)
            if rk > hi:
                hi = rk
    return hi


@jit_kernel
def delta_ball_kernel(kind, K, center, radius, x, log_f, active, starts,
                      max_iter, pg_tol, armijo, tau_lo, tau_hi):
    """Minimize the worst-class log ratio over the ball.

    Runs projected gradient descent on the log-sum-exp softening at
    temperature ``tau_lo``, then polishes at ``tau_hi``; the reported
    value is the hard maximum at the best point found.
    """
    d = center.size
    best_val = np.inf
    best_theta = np.empty(d)
    for i in range(d):
        best_theta[i] = center[i]
    any_converged = 0.0
    n_starts = starts.shape[0]
    for s in range(n_starts):
        theta = project_ball(starts[s], center, radius)
        converged = 0.0
        for phase in range(2):
            tau = tau_lo if phase == 0 else tau_hi
            fval, g = delta_smooth_val_grad(kind, K, theta, x, log_f, active, tau)
            step = 1.0
            for _ in range(max_iter):
                cand = project_ball(theta - g, center, radius)
                pg = 0.0
                for i in range(d):
                    diff = cand[i] - theta[i]
                    pg += diff * diff
                if math.sqrt(pg) < pg_tol:
                    converged = 1.0
                    break
                step *= 2.0
                accepted = False
                for _ in range(64):
                    trial = project_ball(theta - step * g, center, radius)
                    ftrial, gtrial = delta_smooth_val_grad(
                        kind, K, trial, x, log_f, active, tau)
                    descent = 0.0
                    for i in range(d):
                        descent -= g[i] * (trial[i] - theta[i])
                    if ftrial <= fval - armijo * descent:
                        theta = trial
                        fval = ftrial
                        g = gtrial
                        accepted = True
                        break
                    step *= 0.5
                if not accepted:
                    break
        hard = hard_max_ratio(kind, K, theta, x, log_f, active)
        if hard < best_val:
            best_val = hard
            best_theta = theta
        if converged == 1.0:
            any_converged = 1.0
    return best_val, best_theta, any_converged


# ---------------------------------------------------------------------------
# lattice enumeration (grid regions and grid oracles)
# ---------------------------------------------------------------------------


@jit_kernel
def grid_sup_kernel(kind, K, lower, upper, steps, x, y):
    """Exhaustive maximization of ``ln p(y|x)`` over a box lattice."""
    d = lower.size
    total = 1
    for i in range(d):
        total *= steps[i]
    theta = np.empty(d)
    best_val = -np.inf
    best_theta = np.empty(d)
    idx = np.zeros(d, dtype=np.int64)
    for _ in range(total):
        for i in range(d):
            if steps[i] == 1:
                theta[i] = 0.5 * (lower[i] + upper[i])
            else:
                theta[i] = lower[i] + idx[i] * (upper[i] - lower[i]) / (steps[i] - 1)
        val = log_prob_kernel(kind, K, theta, x, y)
        if val > best_val:
            best_val = val
            for i in range(d):
                best_theta[i] = theta[i]
        pos = 0
        while pos < d:
            idx[pos] += 1
            if idx[pos] < steps[pos]:
                break
            idx[pos] = 0
            pos += 1
    return best_val, best_theta


@jit_kernel
def grid_delta_kernel(kind, K, lower, upper, steps, x, log_f, active):
    """Exhaustive minimization of the worst-class log ratio over a lattice."""
    d = lower.size
    total = 1
    for i in range(d):
        total *= steps[i]
    theta = np.empty(d)
    best_val = np.inf
    best_theta = np.empty(d)
    idx = np.zeros(d, dtype=np.int64)
    for _ in range(total):
        for i in range(d):
            if steps[i] == 1:
                theta[i] = 0.5 * (lower[i] + upper[i])
            else:
                theta[i] = lower[i] + idx[i] * (upper[i] - lower[i]) / (steps[i] - 1)
        val = hard_max_ratio(kind, K, theta, x, log_f, active)
        if val < best_val:
            best_val = val
            for i in range(d):
                best_theta[i] = theta[i]
        pos = 0
        while pos < d:
            idx[pos] += 1
            if idx[pos] < steps[pos]:
                break
            idx[pos] = 0
            pos += 1
    return best_val, best_theta


@jit_kernel
def grid_ball_sup_kernel(kind, K, center, radius, lower, upper, steps, x, y):
    """Dense-lattice maximization of ``ln p(y|x)`` over a ball.

    Every lattice point of the box is radially projected into the
    ball before evaluation, which covers the boundary sphere densely;
    used only as a brute-force oracle against the gradient solver.
    """
    d = lower.size
    total = 1
    for i in range(d):
        total *= steps[i]
    theta = np.empty(d)
    best_val = -np.inf
    best_theta = np.empty(d)
    idx = np.zeros(d, dtype=np.int64)
    for _ in range(total):
        for i in range(d):
            if steps[i] == 1:
                theta[i] = 0.5 * (lower[i] + upper[i])
            else:
                theta[i] = lower[i] + idx[i] * (upper[i] - lower[i]) / (steps[i] - 1)
        proj = project_ball(theta, center, radius)
        val = log_prob_kernel(kind, K, proj, x, y)
        if val > best_val:
            best_val = val
            for i in range(d):
                best_theta[i] = proj[i]
        pos = 0
        while pos < d:
            idx[pos] += 1
            if idx[pos] < steps[pos]:
                break
            idx[pos] = 0
            pos += 1
    return best_val, best_theta


@jit_kernel
def grid_ball_delta_kernel(kind, K, center, radius, lower, upper, steps, x,
                           log_f, active):
    """Dense-lattice minimization of the worst-class log ratio over a ball."""
    d = lower.size
    total = 1
    for i in range(d):
        total *= steps[i]
    theta = np.empty(d)
    best_val = np.inf
    best_theta = np.empty(d)
    idx = np.zeros(d, dtype=np.int64)
    for _ in range(total):
        for i in range(d):
            if steps[i] == 1:
                theta[i] = 0.5 * (lower[i] + upper[i])
            else:
                theta[i] = lower[i] + idx[i] * (upper[i] - lower[i]) / (steps[i] - 1)
        proj = project_ball(theta, center, radius)
        val = hard_max_ratio(kind, K, proj, x, log_f, active)
        if val < best_val:
            best_val = val
            for i in range(d):
                best_theta[i] = proj[i]
        pos = 0
        while pos < d:
            idx[pos] += 1
            if idx[pos] < steps[pos]:
                break
            idx[pos] = 0
            pos += 1
    return best_val, best_theta


# ---------------------------------------------------------------------------
# symmetric eigensolver (cyclic Jacobi)
# ---------------------------------------------------------------------------


@jit_kernel
def jacobi_eigh(A_in, off_tol, max_sweeps):
    """Cyclic Jacobi rotations on a symmetric matrix.

    Sweeps until the off-diagonal Frobenius norm drops below
    ``off_tol`` (or ``max_sweeps`` is hit).  Returns eigenvalues,
    the accumulated rotation matrix (columns are eigenvectors), and
    the final off-diagonal norm.
    """
    n = A_in.shape[0]
    A = A_in.copy()
    V = np.eye(n)
    off = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                off += A[i, j] * A[i, j]
    off = math.sqrt(off)
    for _ in range(max_sweeps):
        if off < off_tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) == 0.0:
                    continue
                app = A[p, p]
                aqq = A[q, q]
                tau = (aqq - app) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                for i in range(n):
                    aip = A[i, p]
                    aiq = A[i, q]
                    A[i, p] = c * aip - s * aiq
                    A[i, q] = s * aip + c * aiq
                for i in range(n):
                    api = A[p, i]
                    aqi = A[q, i]
                    A[p, i] = c * api - s * aqi
                    A[q, i] = s * api + c * aqi
                for i in range(n):
                    vip = V[i, p]
                    viq = V[i, q]
                    V[i, p] = c * vip - s * viq
                    V[i, q] = s * vip + c * viq
        off = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off += A[i, j] * A[i, j]
        off = math.sqrt(off)
    w = np.empty(n)
    for i in range(n):
        w[i] = A[i, i]
    return w, V, off


# ---------------------------------------------------------------------------
# regularized lower incomplete gamma
# ---------------------------------------------------------------------------


@jit_kernel
def reg_lower_gamma(a, x):
    """Regularized lower incomplete gamma P(a, x).

    Power series for ``x < a + 1``, Lentz continued fraction for the
    upper tail otherwise.
    """
    if x <= 0.0:
        return 0.0
    lg = math.lgamma(a)
    if x < a + 1.0:
        term = 1.0 / a
        total = term
        ap = a
        for _ in range(500):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) < abs(total) * 1e-16:
                break
        return total * math.exp(-x + a * math.log(x) - lg)
    # continued fraction for Q(a, x)
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    dd = 1.0 / b
    h = dd
    for i in range(1, 500):
        an = -i * (i - a)
        b += 2.0
        dd = an * dd + b
        if abs(dd) < tiny:
            dd = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        dd = 1.0 / dd
        delta = dd * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    q = math.exp(-x + a * math.log(x) - lg) * h
    return 1.0 - q


# ---------------------------------------------------------------------------
# penalized maximum likelihood for the softmax families
# ---------------------------------------------------------------------------


@jit_kernel
def dataset_loglik_grad(kind, K, theta, X, ys, ridge):
    """Ridge-penalized log likelihood of a dataset and its gradient."""
    n = ys.size
    d = theta.size
    ll = 0.0
    grad = np.zeros(d)
    for i in range(n):
        x = X[i]
        ll += log_prob_kernel(kind, K, theta, x, ys[i])
        g = grad_log_prob_kernel(kind, K, theta, x, ys[i])
        for j in range(d):
            grad[j] += g[j]
    for j in range(d):
        ll -= 0.5 * ridge * theta[j] * theta[j]
        grad[j] -= ridge * theta[j]
    return ll, grad


@jit_kernel
def softmax_mle_newton(kind, K, X, ys, theta0, ridge, max_iter, gtol):
    """Damped Newton ascent on the ridge-penalized log likelihood.

    The Hessian of the softmax log likelihood is the negated sum of
    per-point Fisher matrices, so each step solves a positive definite
    system.  Backtracks on the penalized objective.
    """
    d = theta0.size
    n = ys.size
    theta = theta0.copy()
    ll, grad = dataset_loglik_grad(kind, K, theta, X, ys, ridge)
    gnorm = 0.0
    for j in range(d):
        gnorm += grad[j] * grad[j]
    gnorm = math.sqrt(gnorm)
    iters = 0
    for it in range(max_iter):
        if gnorm < gtol:
            break
        iters = it + 1
        H = np.zeros((d, d))
        for i in range(n):
            Fi = fisher_kernel(kind, K, theta, X[i])
            for a in range(d):
                for b in range(d):
                    H[a, b] += Fi[a, b]
        for a in range(d):
            H[a, a] += ridge + 1e-12
        step = np.linalg.solve(H, grad)
        scale = 1.0
        improved = False
        for _ in range(50):
            trial = theta + scale * step
            ll_t, grad_t = dataset_loglik_grad(kind, K, trial, X, ys, ridge)
            if ll_t > ll:
                theta = trial
                ll = ll_t
                grad = grad_t
                improved = True
                break
            scale *= 0.5
        if not improved:
            break
        gnorm = 0.0
        for j in range(d):
            gnorm += grad[j] * grad[j]
        gnorm = math.sqrt(gnorm)
    return theta, gnorm, iters
