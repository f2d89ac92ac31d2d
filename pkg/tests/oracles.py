"""Independent oracles used to freeze expected values in the tests.

Everything here deliberately avoids the package's own fast paths: gradients
come from central finite differences, prox values from 1-d ternary search,
ridge minima from the normal equations, and epoch updates from plain numpy
steppers that follow the update rules one operation at a time.
"""

import numpy as np


def central_diff_grad(f, x, h=1e-6):
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        g[j] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


def prox_scalar_numeric(eta, lam1, lam2, v, iters=200):
    """Numeric minimizer of h(t) = (t - v)^2 / (2 eta) + lam1 t^2 + lam2 |t|.

    Bisection on the (monotone increasing) subdifferential of h: the whole
    interval [-lam2, +lam2] shift at t=0 is handled first, then the kink-free
    branch is bisected to machine precision.
    """
    at0_lo = -v / eta - lam2
    at0_hi = -v / eta + lam2
    if at0_lo <= 0.0 <= at0_hi:
        return 0.0

    def slope(t):
        s = (t - v) / eta + 2.0 * lam1 * t
        if t > 0.0:
            return s + lam2
        if t < 0.0:
            return s - lam2
        # minimizer is not at 0 here; use the subdifferential edge facing it
        return at0_hi if at0_hi < 0.0 else at0_lo

    lo, hi = -abs(v) - 1.0, abs(v) + 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if slope(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def ridge_minimum(dataset, lam1):
    """Normal-equations solution of mean squared loss plus lam1 ||x||^2."""
    A = dataset.dense()
    b = dataset.labels
    n, d = A.shape
    x = np.linalg.solve(A.T @ A / n + lam1 * np.eye(d), A.T @ b / n)
    return x


def component_value(obj, i, x):
    """Loss of one example, summed by hand."""
    ex = obj.dataset.examples[i]
    z = float(np.dot(ex.values, np.asarray(x)[ex.indices]))
    return float(obj.loss.value(np.float64(z), np.float64(ex.label)))


def phi_by_summation(obj, x):
    """Objective value via an explicit per-example loop."""
    total = 0.0
    for i in range(obj.n):
        total += component_value(obj, i, x)
    return total / obj.n + obj.reg.value(np.asarray(x))


# ---------------------------------------------------------------------------
# plain-numpy epoch steppers (independent transcriptions of the update rules)


def _estimator(obj, batch, x, snapshot, mu_t, subgrad=False):
    comp = obj.component_subgrad if subgrad else obj.component_grad
    g = np.zeros(obj.dim)
    for i in batch:
        g += comp(int(i), x) - comp(int(i), snapshot)
    return g / len(batch) + mu_t


def reference_momentum_epoch(obj, x_tilde, y0, theta, eta, idx, weights=None,
                             radius=None):
    """Momentum epoch: y step (explicit grad / prox / projected subgrad per the
    objective), momentum blend, weighted snapshot average."""
    subgrad = not obj.loss.smooth
    mu_t = obj.snapshot_pass(x_tilde)[1]
    y = np.array(y0, dtype=float)
    x = np.array(x_tilde, dtype=float)
    acc = np.zeros(obj.dim)
    wsum = 0.0
    m = len(idx)
    if weights is None:
        weights = np.ones(m)
    for k in range(m):
        g = _estimator(obj, idx[k], x, x_tilde, mu_t, subgrad=subgrad)
        if subgrad or obj.reg.smooth:
            y = y - eta * (g + obj.reg.grad(x))
            if radius is not None:
                nrm = np.linalg.norm(y)
                if nrm > radius:
                    y = y * (radius / nrm)
        else:
            y = obj.reg.prox(eta, y - eta * g)
        x = y.copy() if theta == 1.0 else x_tilde + theta * (y - x_tilde)
        acc = acc + weights[k] * x
        wsum += weights[k]
    return y, acc / wsum, x


def reference_plain_vr_epoch(obj, x_tilde, eta, idx, use_prox):
    """Chain x_k = x_{k-1} - eta (vr grad + reg grad), or its prox form."""
    mu_t = obj.snapshot_pass(x_tilde)[1]
    x = np.array(x_tilde, dtype=float)
    acc = np.zeros(obj.dim)
    for k in range(len(idx)):
        g = _estimator(obj, idx[k], x, x_tilde, mu_t)
        if use_prox:
            x = obj.reg.prox(eta, x - eta * g)
        else:
            x = x - eta * (g + obj.reg.grad(x))
        acc = acc + x
    return x, acc / len(idx)


def reference_subgrad_vr_epoch(obj, x_tilde, eta, idx, weights=None, radius=None):
    """Projected variance-reduced subgradient chain with weighted averaging."""
    xi_t = obj.snapshot_pass(x_tilde)[1]
    x = np.array(x_tilde, dtype=float)
    acc = np.zeros(obj.dim)
    wsum = 0.0
    m = len(idx)
    if weights is None:
        weights = np.ones(m)
    for k in range(m):
        g = _estimator(obj, idx[k], x, x_tilde, xi_t, subgrad=True)
        x = x - eta * (g + obj.reg.grad(x))
        if radius is not None:
            nrm = np.linalg.norm(x)
            if nrm > radius:
                x = x * (radius / nrm)
        acc = acc + weights[k] * x
        wsum += weights[k]
    return x, acc / wsum


def reference_katyusha_epoch(obj, x_tilde, y0, z0, eta, big_l, theta1, theta2, idx):
    """Three-sequence accelerated epoch, one update rule per line."""
    mu_t = obj.snapshot_pass(x_tilde)[1]
    y = np.array(y0, dtype=float)
    z = np.array(z0, dtype=float)
    acc = np.zeros(obj.dim)
    xs = []
    ys_prev = []
    for k in range(len(idx)):
        ys_prev.append(y.copy())
        x = theta1 * y + theta2 * x_tilde + (1.0 - theta1 - theta2) * z
        g = _estimator(obj, idx[k], x, x_tilde, mu_t)
        y = obj.reg.prox(eta, y - eta * g)
        z = obj.reg.prox(1.0 / (3.0 * big_l), x - g / (3.0 * big_l))
        acc = acc + x
        xs.append(x.copy())
    return y, z, acc / len(idx), xs, ys_prev


def reference_sgd_pass(obj, x0, eta0, idx, step_offset=0):
    """Prox-form stochastic (sub)gradient steps with epoch-wise 1/k decay."""
    x = np.array(x0, dtype=float)
    comp = obj.component_grad if obj.loss.smooth else obj.component_subgrad
    n = obj.n
    for k in range(len(idx)):
        kk = step_offset + k + 1
        eta_k = eta0 / -(-kk // n)
        g = np.zeros(obj.dim)
        for i in idx[k]:
            g += comp(int(i), x)
        x = obj.reg.prox(eta_k, x - eta_k * (g / len(idx[k])))
    return x
