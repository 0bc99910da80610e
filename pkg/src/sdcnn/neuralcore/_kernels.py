"""Fused loops for the memory-bound hot spots.

Each kernel is single-threaded with a fixed summation order, so results are
reproducible bit for bit. No fastmath: products and sums are rounded
separately, exactly as a plain Python loop would.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def conv2x2_forward(x, F, b, relu):
    B, n, m = x.shape
    nF = F.shape[0]
    P, Q = n - 1, m - 1
    out = np.empty((B, nF, P, Q))
    for i in range(B):
        for f in range(nF):
            f00 = F[f, 0, 0]
            f01 = F[f, 0, 1]
            f10 = F[f, 1, 0]
            f11 = F[f, 1, 1]
            bias = b[f]
            for p in range(P):
                for q in range(Q):
                    s = 0.0
                    s += x[i, p, q] * f00
                    s += x[i, p, q + 1] * f01
                    s += x[i, p + 1, q] * f10
                    s += x[i, p + 1, q + 1] * f11
                    s += bias
                    if relu and s < 0.0:
                        s = 0.0
                    out[i, f, p, q] = s
    return out


@njit(cache=True)
def conv2x2_param_grads(g, a, x, relu):
    """Filter and bias gradients given the gradient ``g`` w.r.t. the activated output ``a``."""
    B, nF, P, Q = g.shape
    dF = np.zeros((nF, 2, 2))
    db = np.zeros(nF)
    for i in range(B):
        for f in range(nF):
            s00 = 0.0
            s01 = 0.0
            s10 = 0.0
            s11 = 0.0
            sb = 0.0
            for p in range(P):
                for q in range(Q):
                    gz = g[i, f, p, q]
                    if relu and not a[i, f, p, q] > 0.0:
                        continue
                    s00 += gz * x[i, p, q]
                    s01 += gz * x[i, p, q + 1]
                    s10 += gz * x[i, p + 1, q]
                    s11 += gz * x[i, p + 1, q + 1]
                    sb += gz
            dF[f, 0, 0] += s00
            dF[f, 0, 1] += s01
            dF[f, 1, 0] += s10
            dF[f, 1, 1] += s11
            db[f] += sb
    return dF, db


@njit(cache=True)
def masked_scale(x, u, rate, scale):
    """``x * scale`` where ``u >= rate``, else 0 (flat views)."""
    out = np.empty_like(x)
    for k in range(x.size):
        out[k] = x[k] * scale if u[k] >= rate else 0.0
    return out


@njit(cache=True)
def adam_update(p, g, m, v, lr, beta1, beta2, c1, c2, eps):
    step = lr / c1
    inv_c2 = 1.0 / c2
    for k in range(p.size):
        gk = g[k]
        mk = beta1 * m[k] + (1.0 - beta1) * gk
        vk = beta2 * v[k] + (1.0 - beta2) * (gk * gk)
        m[k] = mk
        v[k] = vk
        p[k] -= step * mk / (np.sqrt(vk * inv_c2) + eps)
