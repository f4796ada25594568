"""Hot numeric kernels with numba and pure-numpy implementations.

Public names (``box_iou``, ``dense_tanh`` ...) are bound to one of the two
implementations according to :data:`kcac._jit.USE_NUMBA`. The suffixed
variants (``*_nb``, ``*_np``) stay importable so tests and the benchmark can
compare them side by side.

All kernels work on float64 arrays. Network parameters live in one flat
buffer per network, so optimizer and target-update kernels only ever see 1-D
contiguous arrays.

Numba compiles ``tanh``/``exp`` to scalar libm calls (no SVML in this
toolchain), which loses to numpy's SIMD ufuncs on training-size batches. In
numba mode the batched transcendental kernels therefore keep the compiled
affine part and hand the elementwise transcendental to numpy once a batch has
more than ``SMALL_BATCH`` rows; per-step calls (one row) stay fully compiled.
"""

from __future__ import annotations

import math

import numpy as np

from ._jit import USE_NUMBA, njit, njit_fast, pick

LOG_2PI = math.log(2.0 * math.pi)
LOG_2 = math.log(2.0)
SMALL_BATCH = 32


# --------------------------------------------------------------------------
# axis-aligned box overlap
# --------------------------------------------------------------------------


def box_iou_np(c1, h1, c2, h2):
    lo1, hi1 = c1 - h1, c1 + h1
    lo2, hi2 = c2 - h2, c2 + h2
    inter_ext = np.clip(np.minimum(hi1, hi2) - np.maximum(lo1, lo2), 0.0, None)
    # extents measured the same way as the intersection so identical boxes give exactly 1
    ext1 = hi1 - lo1
    ext2 = hi2 - lo2
    inter = inter_ext[0] * inter_ext[1] * inter_ext[2]
    if inter <= 0.0:
        return 0.0
    v1 = ext1[0] * ext1[1] * ext1[2]
    v2 = ext2[0] * ext2[1] * ext2[2]
    return float(inter / (v1 + v2 - inter))


@njit
def box_iou_nb(c1, h1, c2, h2):
    inter = 1.0
    v1 = 1.0
    v2 = 1.0
    for k in range(3):
        lo1 = c1[k] - h1[k]
        hi1 = c1[k] + h1[k]
        lo2 = c2[k] - h2[k]
        hi2 = c2[k] + h2[k]
        e = min(hi1, hi2) - max(lo1, lo2)
        if e <= 0.0:
            return 0.0
        inter *= e
        v1 *= hi1 - lo1
        v2 *= hi2 - lo2
    return inter / (v1 + v2 - inter)


# --------------------------------------------------------------------------
# dense layers
# --------------------------------------------------------------------------


def dense_np(x, W, b):
    return x @ W + b


def dense_tanh_np(x, W, b):
    return np.tanh(x @ W + b)


def dense_backward_np(x, W, gz):
    """Gradients of ``z = x @ W + b`` given ``dL/dz``; returns (gx, gW, gb)."""
    return gz @ W.T, x.T @ gz, gz.sum(axis=0)


def dense_tanh_backward_np(x, W, h, gh):
    gz = gh * (1.0 - h * h)
    return gz @ W.T, x.T @ gz, gz.sum(axis=0)


@njit
def dense_nb(x, W, b):
    z = x @ W
    n, m = z.shape
    for i in range(n):
        for j in range(m):
            z[i, j] += b[j]
    return z


@njit
def dense_tanh_nb(x, W, b):
    z = x @ W
    n, m = z.shape
    for i in range(n):
        for j in range(m):
            z[i, j] = np.tanh(z[i, j] + b[j])
    return z


@njit
def dense_backward_nb(x, W, gz):
    gb = np.zeros(gz.shape[1])
    for i in range(gz.shape[0]):
        for j in range(gz.shape[1]):
            gb[j] += gz[i, j]
    return gz @ W.T, x.T @ gz, gb


@njit
def dense_tanh_backward_nb(x, W, h, gh):
    n, m = h.shape
    gz = np.empty((n, m))
    gb = np.zeros(m)
    for i in range(n):
        for j in range(m):
            g = gh[i, j] * (1.0 - h[i, j] * h[i, j])
            gz[i, j] = g
            gb[j] += g
    return gz @ W.T, x.T @ gz, gb


# --------------------------------------------------------------------------
# optimizer / target networks (flat 1-D buffers, in place)
# --------------------------------------------------------------------------


def adam_step_np(p, g, m, v, lr, beta1, beta2, eps, t):
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * (g * g)
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)


@njit_fast
def adam_step_nb(p, g, m, v, lr, beta1, beta2, eps, t):
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    for i in range(p.shape[0]):
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i]
        v[i] = beta2 * v[i] + (1.0 - beta2) * (g[i] * g[i])
        p[i] -= lr * (m[i] / c1) / (np.sqrt(v[i] / c2) + eps)


def soft_update_np(target, online, tau):
    target[:] = (1.0 - tau) * target + tau * online


@njit
def soft_update_nb(target, online, tau):
    keep = 1.0 - tau
    for i in range(target.shape[0]):
        target[i] = keep * target[i] + tau * online[i]


# --------------------------------------------------------------------------
# tanh-squashed diagonal Gaussian
# --------------------------------------------------------------------------


def squashed_sample_np(mu, log_std, noise):
    """Reparameterized sample; returns (action, pre_tanh, log_prob per row)."""
    std = np.exp(log_std)
    u = mu + std * noise
    a = np.tanh(u)
    # log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u))
    log_det = 2.0 * (LOG_2 - u - np.logaddexp(0.0, -2.0 * u))
    logp = (-0.5 * noise * noise - log_std - 0.5 * LOG_2PI - log_det).sum(axis=1)
    return a, u, logp


@njit
def squashed_sample_nb(mu, log_std, noise):
    n, k = mu.shape
    a = np.empty((n, k))
    u = np.empty((n, k))
    logp = np.zeros(n)
    for i in range(n):
        for j in range(k):
            e = noise[i, j]
            uij = mu[i, j] + np.exp(log_std[i, j]) * e
            u[i, j] = uij
            a[i, j] = np.tanh(uij)
            x = -2.0 * uij
            sp = max(x, 0.0) + np.log1p(np.exp(-abs(x)))
            logp[i] += -0.5 * e * e - log_std[i, j] - 0.5 * LOG_2PI - 2.0 * (LOG_2 - uij - sp)
    return a, u, logp


def dense_tanh_hybrid(x, W, b):
    if x.shape[0] <= SMALL_BATCH:
        return dense_tanh_nb(x, W, b)
    z = dense_nb(x, W, b)
    return np.tanh(z, out=z)


def squashed_sample_hybrid(mu, log_std, noise):
    if mu.shape[0] <= SMALL_BATCH:
        return squashed_sample_nb(mu, log_std, noise)
    return squashed_sample_np(mu, log_std, noise)


box_iou = pick(box_iou_nb, box_iou_np)
dense = pick(dense_nb, dense_np)
dense_tanh = dense_tanh_hybrid if USE_NUMBA else dense_tanh_np
dense_backward = pick(dense_backward_nb, dense_backward_np)
dense_tanh_backward = pick(dense_tanh_backward_nb, dense_tanh_backward_np)
adam_step = pick(adam_step_nb, adam_step_np)
soft_update = pick(soft_update_nb, soft_update_np)
squashed_sample = squashed_sample_hybrid if USE_NUMBA else squashed_sample_np
