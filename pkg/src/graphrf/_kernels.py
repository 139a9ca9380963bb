"""Hot inner loops for online training.

These run once per streamed sample and dominate runtime for long streams, so
they carry ``@njit``; with ``GRAPHRF_NUMBA=0`` the same code runs as plain
numpy.  Both the single-kernel and the multi-kernel stream trainers call the
one shared :func:`step` primitive, which makes a one-kernel multi-kernel run
bit-identical to the single-kernel path under either backend.

Loss codes: 0 = least squares, 1 = hinge, 2 = logistic.
"""

import math

import numpy as np

from ._accel import njit

LOSS_LS = 0
LOSS_HINGE = 1
LOSS_LOGISTIC = 2


@njit(cache=True)
def cost_value(code, pred, y):
    """Un-regularized cost C(pred, y)."""
    if code == 0:
        r = pred - y
        return r * r
    if code == 1:
        m = 1.0 - y * pred
        return m if m > 0.0 else 0.0
    m = y * pred
    if m >= 0.0:
        return math.log1p(math.exp(-m))
    return -m + math.log1p(math.exp(m))


@njit(cache=True)
def cost_grad_scale(code, pred, y):
    """dC/dpred.  Hinge uses the subgradient, 0 at the margin boundary."""
    if code == 0:
        return 2.0 * (pred - y)
    if code == 1:
        return -y if y * pred < 1.0 else 0.0
    m = y * pred
    if m >= 0.0:
        e = math.exp(-m)
        return -y * e / (1.0 + e)
    return -y / (1.0 + math.exp(m))


@njit(cache=True)
def step(theta, z, y, eta, mu, code):
    """One online gradient step on theta, in place.

    Returns the regularized loss at the pre-update iterate, which is the
    quantity every trace records.
    """
    pred = np.dot(theta, z)
    loss = cost_value(code, pred, y) + mu * np.dot(theta, theta)
    g = cost_grad_scale(code, pred, y)
    theta -= eta * (g * z + 2.0 * mu * theta)
    return loss


@njit(cache=True)
def ogd_stream(zs, ys, eta, mu, code, theta):
    """Run the single-kernel online pass over encoded samples.

    ``theta`` is updated in place; returns the per-step pre-update losses.
    """
    n_steps = zs.shape[0]
    losses = np.empty(n_steps)
    for t in range(n_steps):
        losses[t] = step(theta, zs[t], ys[t], eta, mu, code)
    return losses


@njit(cache=True)
def mkl_stream(zs, ys, eta, mu, code, thetas, logw):
    """Multi-kernel online pass with multiplicative weight updates.

    zs has shape (P, T, 2D): one encoded stream per kernel.  thetas (P, 2D)
    and logw (P,) are updated in place.  Weights are kept in the log domain
    and rescaled so the largest stays at 0, which leaves the normalized
    weights untouched while avoiding underflow on long streams.

    Returns (combined losses, per-kernel losses (T, P), normalized weights
    used at each step (T, P)).  All recorded values are pre-update, as the
    online protocol requires.
    """
    n_kernels = zs.shape[0]
    n_steps = zs.shape[1]
    combined = np.empty(n_steps)
    per_kernel = np.empty((n_steps, n_kernels))
    weights_used = np.empty((n_steps, n_kernels))
    for t in range(n_steps):
        wbar = np.exp(logw - np.max(logw))
        wbar /= np.sum(wbar)
        preds = np.empty(n_kernels)
        norms = np.empty(n_kernels)
        for p in range(n_kernels):
            preds[p] = np.dot(thetas[p], zs[p, t])
            norms[p] = np.dot(thetas[p], thetas[p])
            weights_used[t, p] = wbar[p]
        f_hat = np.dot(wbar, preds)
        combined[t] = cost_value(code, f_hat, ys[t]) + mu * np.dot(wbar, norms)
        for p in range(n_kernels):
            lp = step(thetas[p], zs[p, t], ys[t], eta, mu, code)
            per_kernel[t, p] = lp
            clipped = min(max(lp, 0.0), 1.0)
            logw[p] -= eta * clipped
        logw -= np.max(logw)
    return combined, per_kernel, weights_used
