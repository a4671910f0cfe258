"""Pure-numpy node-level attention kernel (fallback for the compiled one)."""

from __future__ import annotations

import numpy as np


def node_forward(h_i, H, W, a, slope=0.2):
    """Attention over one anchor's neighbors.

    Returns (alpha, logits, m, z) where z = ELU(m) and m is the
    alpha-weighted sum of raw neighbor features.
    """
    D = h_i.shape[0]
    u_i = W @ h_i
    U = H @ W.T
    e = a[:D] @ u_i + U @ a[D:]
    s = np.where(e > 0, e, slope * e)
    s = s - s.max()
    alpha = np.exp(s)
    alpha /= alpha.sum()
    m = alpha @ H
    z = np.where(m > 0, m, np.expm1(m))
    return alpha, e, m, z


def node_backward(h_i, H, W, a, alpha, e, m, dz, slope=0.2):
    """Gradients of the node-level kernel given dL/dz.

    Returns (dW, da, dh_i, dH).
    """
    D = h_i.shape[0]
    a1, a2 = a[:D], a[D:]
    dm = dz * np.where(m > 0, 1.0, np.exp(m))
    dalpha = H @ dm
    ds = alpha * (dalpha - alpha @ dalpha)
    de = ds * np.where(e > 0, 1.0, slope)
    sum_de = de.sum()

    u_i = W @ h_i
    U = H @ W.T
    da = np.concatenate([sum_de * u_i, de @ U])
    du_i = sum_de * a1
    deH = de @ H
    dW = np.outer(du_i, h_i) + np.outer(a2, deH)
    dh_i = W.T @ du_i
    dH = np.outer(alpha, dm) + np.outer(de, W.T @ a2)
    return dW, da, dh_i, dH
