"""Jitted inner loops over CSR-format data.

All kernels take the dataset as flat CSR arrays (indptr, indices, data) plus
a label vector, and run one epoch of sequential stochastic steps. Sampled
index sequences are generated by the caller so the RNG stream discipline
stays in pure Python. Summations run in index order, so results are
bit-reproducible for a fixed input.

Loss dispatch uses integer codes; the same scalar derivative code is used by
the full-pass kernels and the inner-step kernels, which makes the
variance-reduced estimator collapse exactly to the cached full gradient when
the iterate sits at the snapshot.

Each epoch kernel returns (status, step): status 0 on success, 1 if a
non-finite value was detected at inner step `step`.
"""

import math

import numpy as np
from numba import njit

SQUARED = 0
LOGISTIC = 1
HINGE = 2


@njit(cache=True, inline="always")
def _deriv(code, z, y):
    """d/dz of the scalar loss at margin z with label y (subgradient for hinge)."""
    if code == SQUARED:
        return 2.0 * (z - y)
    elif code == LOGISTIC:
        t = y * z
        if t >= 0.0:
            e = math.exp(-t)
            return -y * (e / (1.0 + e))
        return -y / (1.0 + math.exp(t))
    else:
        if 1.0 - y * z > 0.0:
            return -y
        return 0.0


@njit(cache=True, inline="always")
def _row_dot(indptr, indices, data, i, x):
    z = 0.0
    for j in range(indptr[i], indptr[i + 1]):
        z += data[j] * x[indices[j]]
    return z


@njit(cache=True)
def margins(indptr, indices, data, x, out):
    for i in range(indptr.shape[0] - 1):
        out[i] = _row_dot(indptr, indices, data, i, x)


@njit(cache=True)
def mean_grad(indptr, indices, data, labels, code, x, sc_out, grad_out):
    """Per-example derivative scalars at x and the mean gradient (1/n) sum s_i a_i."""
    n = labels.shape[0]
    for t in range(grad_out.shape[0]):
        grad_out[t] = 0.0
    for i in range(n):
        z = _row_dot(indptr, indices, data, i, x)
        c = _deriv(code, z, labels[i])
        sc_out[i] = c
        for j in range(indptr[i], indptr[i + 1]):
            grad_out[indices[j]] += c * data[j]
    inv_n = 1.0 / n
    for t in range(grad_out.shape[0]):
        grad_out[t] *= inv_n


@njit(cache=True, inline="always")
def _prox_inplace(v, eta, lam1, lam2):
    """Coordinatewise prox of lam1*||x||^2 + lam2*||x||_1 at step eta, in place."""
    thr = eta * lam2
    shrink = 1.0 / (1.0 + 2.0 * eta * lam1)
    for t in range(v.shape[0]):
        w = v[t]
        if thr > 0.0:
            if w > thr:
                w -= thr
            elif w < -thr:
                w += thr
            else:
                w = 0.0
        v[t] = w * shrink


@njit(cache=True, inline="always")
def _project_ball(v, radius):
    if radius <= 0.0:
        return
    s = 0.0
    for t in range(v.shape[0]):
        s += v[t] * v[t]
    nrm = math.sqrt(s)
    if nrm > radius:
        f = radius / nrm
        for t in range(v.shape[0]):
            v[t] *= f


@njit(cache=True)
def fsvrg_epoch(indptr, indices, data, labels, code, sc, mu_t, x_tilde, y,
                idx, eta, lam1, lam2, g_smooth, theta, weights, xbar_out):
    """One epoch of the momentum-accelerated variance-reduced method.

    Inner update: variance-reduced gradient at x_{k-1}; auxiliary step on y
    (explicit regularizer gradient when g is smooth, prox otherwise);
    momentum blend x_k = x_tilde + theta (y_k - x_tilde); snapshot output is
    the weights-weighted average of the x_k.
    """
    m, bsz = idx.shape
    d = y.shape[0]
    x = x_tilde.copy()
    for t in range(d):
        xbar_out[t] = 0.0
    wsum = 0.0
    inv_b = 1.0 / bsz
    for k in range(m):
        if g_smooth:
            for t in range(d):
                y[t] -= eta * (mu_t[t] + 2.0 * lam1 * x[t])
            for jj in range(bsz):
                i = idx[k, jj]
                z = _row_dot(indptr, indices, data, i, x)
                if not math.isfinite(z):
                    return 1, k + 1
                c = (_deriv(code, z, labels[i]) - sc[i]) * inv_b
                for j in range(indptr[i], indptr[i + 1]):
                    y[indices[j]] -= eta * c * data[j]
        else:
            for t in range(d):
                y[t] -= eta * mu_t[t]
            for jj in range(bsz):
                i = idx[k, jj]
                z = _row_dot(indptr, indices, data, i, x)
                if not math.isfinite(z):
                    return 1, k + 1
                c = (_deriv(code, z, labels[i]) - sc[i]) * inv_b
                for j in range(indptr[i], indptr[i + 1]):
                    y[indices[j]] -= eta * c * data[j]
            _prox_inplace(y, eta, lam1, lam2)
        if theta == 1.0:
            for t in range(d):
                x[t] = y[t]
        else:
            for t in range(d):
                x[t] = x_tilde[t] + theta * (y[t] - x_tilde[t])
        w = weights[k]
        wsum += w
        for t in range(d):
            xbar_out[t] += w * x[t]
    for t in range(d):
        xbar_out[t] /= wsum
    return 0, m


@njit(cache=True)
def fsvrg_epoch_fullbatch(indptr, indices, data, labels, code, sc, mu_t,
                          x_tilde, y, m, eta, lam1, lam2, g_smooth, theta,
                          xbar_out):
    """Full-batch variant: every inner step uses all n examples (zero variance)."""
    n = labels.shape[0]
    d = y.shape[0]
    x = x_tilde.copy()
    g = np.empty(d)
    for t in range(d):
        xbar_out[t] = 0.0
    inv_n = 1.0 / n
    for k in range(m):
        for t in range(d):
            g[t] = mu_t[t]
        for i in range(n):
            z = _row_dot(indptr, indices, data, i, x)
            if not math.isfinite(z):
                return 1, k + 1
            c = (_deriv(code, z, labels[i]) - sc[i]) * inv_n
            for j in range(indptr[i], indptr[i + 1]):
                g[indices[j]] += c * data[j]
        if g_smooth:
            for t in range(d):
                y[t] -= eta * (g[t] + 2.0 * lam1 * x[t])
        else:
            for t in range(d):
                y[t] -= eta * g[t]
            _prox_inplace(y, eta, lam1, lam2)
        if theta == 1.0:
            for t in range(d):
                x[t] = y[t]
        else:
            for t in range(d):
                x[t] = x_tilde[t] + theta * (y[t] - x_tilde[t])
        for t in range(d):
            xbar_out[t] += x[t]
    for t in range(d):
        xbar_out[t] /= m
    return 0, m


@njit(cache=True)
def svrg_pp_epoch(indptr, indices, data, labels, code, sc, mu_t, x_tilde, y,
                  idx, eta, lam1, lam2, g_smooth, xbar_out):
    """Standalone doubling-epoch solver: the carried chain steps directly
    (no momentum blend), gradients at x_{k-1}, snapshot is the plain average."""
    m, bsz = idx.shape
    d = y.shape[0]
    x = x_tilde.copy()
    for t in range(d):
        xbar_out[t] = 0.0
    inv_b = 1.0 / bsz
    for k in range(m):
        if g_smooth:
            for t in range(d):
                y[t] -= eta * (mu_t[t] + 2.0 * lam1 * x[t])
            for jj in range(bsz):
                i = idx[k, jj]
                z = _row_dot(indptr, indices, data, i, x)
                if not math.isfinite(z):
                    return 1, k + 1
                c = (_deriv(code, z, labels[i]) - sc[i]) * inv_b
                for j in range(indptr[i], indptr[i + 1]):
                    y[indices[j]] -= eta * c * data[j]
        else:
            for t in range(d):
                y[t] -= eta * mu_t[t]
            for jj in range(bsz):
                i = idx[k, jj]
                z = _row_dot(indptr, indices, data, i, x)
                if not math.isfinite(z):
                    return 1, k + 1
                c = (_deriv(code, z, labels[i]) - sc[i]) * inv_b
                for j in range(indptr[i], indptr[i + 1]):
                    y[indices[j]] -= eta * c * data[j]
            _prox_inplace(y, eta, lam1, lam2)
        for t in range(d):
            x[t] = y[t]
        for t in range(d):
            xbar_out[t] += x[t]
    for t in range(d):
        xbar_out[t] /= m
    return 0, m


@njit(cache=True)
def svrg_epoch(indptr, indices, data, labels, code, sc, mu_t, x_tilde, x,
               idx, eta, lam1, lam2, use_prox, xbar_out):
    """Plain variance-reduced chain: x_k = x_{k-1} - eta * (vr grad + reg grad),
    or the prox form of the same step. Snapshot is the epoch average."""
    m, bsz = idx.shape
    d = x.shape[0]
    g = np.empty(d)
    for t in range(d):
        xbar_out[t] = 0.0
    inv_b = 1.0 / bsz
    for k in range(m):
        for t in range(d):
            g[t] = mu_t[t]
        for jj in range(bsz):
            i = idx[k, jj]
            z = _row_dot(indptr, indices, data, i, x)
            if not math.isfinite(z):
                return 1, k + 1
            c = (_deriv(code, z, labels[i]) - sc[i]) * inv_b
            for j in range(indptr[i], indptr[i + 1]):
                g[indices[j]] += c * data[j]
        if use_prox:
            for t in range(d):
                x[t] -= eta * g[t]
            _prox_inplace(x, eta, lam1, lam2)
        else:
            for t in range(d):
                x[t] -= eta * (g[t] + 2.0 * lam1 * x[t])
        for t in range(d):
            xbar_out[t] += x[t]
    for t in range(d):
        xbar_out[t] /= m
    return 0, m


@njit(cache=True)
def katyusha_epoch(indptr, indices, data, labels, code, sc, mu_t, x_tilde,
                   y, zz, x, idx, eta, big_l, theta1, theta2, lam1, lam2,
                   xbar_out):
    """Three-sequence accelerated epoch.

    x_k blends y_{k-1}, the snapshot, and z_{k-1}; y takes the prox step at
    rate eta; z takes the prox step with quadratic coefficient 3L/2 around
    x_k. Snapshot output is the epoch average of the x_k.
    """
    m, bsz = idx.shape
    d = y.shape[0]
    theta3 = 1.0 - theta1 - theta2
    g = np.empty(d)
    eta_z = 1.0 / (3.0 * big_l)
    for t in range(d):
        xbar_out[t] = 0.0
    inv_b = 1.0 / bsz
    for k in range(m):
        for t in range(d):
            x[t] = theta1 * y[t] + theta2 * x_tilde[t] + theta3 * zz[t]
        for t in range(d):
            g[t] = mu_t[t]
        for jj in range(bsz):
            i = idx[k, jj]
            z = _row_dot(indptr, indices, data, i, x)
            if not math.isfinite(z):
                return 1, k + 1
            c = (_deriv(code, z, labels[i]) - sc[i]) * inv_b
            for j in range(indptr[i], indptr[i + 1]):
                g[indices[j]] += c * data[j]
        for t in range(d):
            y[t] -= eta * g[t]
        _prox_inplace(y, eta, lam1, lam2)
        for t in range(d):
            zz[t] = x[t] - eta_z * g[t]
        _prox_inplace(zz, eta_z, lam1, lam2)
        for t in range(d):
            xbar_out[t] += x[t]
    for t in range(d):
        xbar_out[t] /= m
    return 0, m


@njit(cache=True)
def sgd_pass(indptr, indices, data, labels, code, x, idx, eta0, step_offset,
             n, lam1, lam2):
    """Plain stochastic (sub)gradient steps with epoch-wise 1/k decay.

    Step k (global count step_offset + k) uses eta0 / ceil(k/n) and the prox
    form of the composite update, which covers smooth and non-smooth
    regularizers uniformly.
    """
    m, bsz = idx.shape
    d = x.shape[0]
    g = np.empty(d)
    inv_b = 1.0 / bsz
    for k in range(m):
        kk = step_offset + k + 1
        eta_k = eta0 / ((kk + n - 1) // n)
        for t in range(d):
            g[t] = 0.0
        for jj in range(bsz):
            i = idx[k, jj]
            z = _row_dot(indptr, indices, data, i, x)
            if not math.isfinite(z):
                return 1, k + 1
            c = _deriv(code, z, labels[i]) * inv_b
            for j in range(indptr[i], indptr[i + 1]):
                g[indices[j]] += c * data[j]
        for t in range(d):
            x[t] -= eta_k * g[t]
        _prox_inplace(x, eta_k, lam1, lam2)
    return 0, m


@njit(cache=True)
def subgrad_momentum_epoch(indptr, indices, data, labels, sc, xi_t, x_tilde,
                           y, idx, eta, lam1, theta, radius, weights,
                           xbar_out):
    """Variance-reduced subgradient epoch with momentum (non-smooth losses).

    y step: projected step on the variance-reduced hinge subgradient plus the
    smooth regularizer gradient; x step: momentum blend; snapshot: weighted
    average of the x_k.
    """
    m, bsz = idx.shape
    d = y.shape[0]
    x = x_tilde.copy()
    for t in range(d):
        xbar_out[t] = 0.0
    wsum = 0.0
    inv_b = 1.0 / bsz
    for k in range(m):
        for t in range(d):
            y[t] -= eta * (xi_t[t] + 2.0 * lam1 * x[t])
        for jj in range(bsz):
            i = idx[k, jj]
            z = _row_dot(indptr, indices, data, i, x)
            if not math.isfinite(z):
                return 1, k + 1
            c = (_deriv(HINGE, z, labels[i]) - sc[i]) * inv_b
            for j in range(indptr[i], indptr[i + 1]):
                y[indices[j]] -= eta * c * data[j]
        _project_ball(y, radius)
        if theta == 1.0:
            for t in range(d):
                x[t] = y[t]
        else:
            for t in range(d):
                x[t] = x_tilde[t] + theta * (y[t] - x_tilde[t])
        w = weights[k]
        wsum += w
        for t in range(d):
            xbar_out[t] += w * x[t]
    for t in range(d):
        xbar_out[t] /= wsum
    return 0, m


@njit(cache=True)
def subgrad_vr_epoch(indptr, indices, data, labels, sc, xi_t, x_tilde, x,
                     idx, eta, lam1, radius, weights, xbar_out):
    """Variance-reduced subgradient epoch without momentum (single chain)."""
    m, bsz = idx.shape
    d = x.shape[0]
    g = np.empty(d)
    for t in range(d):
        xbar_out[t] = 0.0
    wsum = 0.0
    inv_b = 1.0 / bsz
    for k in range(m):
        for t in range(d):
            g[t] = xi_t[t] + 2.0 * lam1 * x[t]
        for jj in range(bsz):
            i = idx[k, jj]
            z = _row_dot(indptr, indices, data, i, x)
            if not math.isfinite(z):
                return 1, k + 1
            c = (_deriv(HINGE, z, labels[i]) - sc[i]) * inv_b
            for j in range(indptr[i], indptr[i + 1]):
                g[indices[j]] += c * data[j]
        for t in range(d):
            x[t] -= eta * g[t]
        _project_ball(x, radius)
        w = weights[k]
        wsum += w
        for t in range(d):
            xbar_out[t] += w * x[t]
    for t in range(d):
        xbar_out[t] /= wsum
    return 0, m
