"""Pure-numpy grouped attention kernels (reference backend).

Shapes: queries ``(G, Sq, Dh)``, keys/values ``(G, Sk, Dh)``. Scores are
scaled by ``1/sqrt(Dh)`` and softmaxed with max subtraction, matching the
compiled backend bit-for-bit up to summation order.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"


def attn_forward(q: np.ndarray, k: np.ndarray, v: np.ndarray):
    """Scaled dot-product attention; returns (out, attn_weights)."""
    scale = 1.0 / np.sqrt(q.shape[-1])
    scores = (q @ k.transpose(0, 2, 1)) * scale
    scores -= scores.max(axis=-1, keepdims=True)
    attn = np.exp(scores)
    attn /= attn.sum(axis=-1, keepdims=True)
    return attn @ v, attn


def attn_backward(d_out: np.ndarray, attn: np.ndarray, q: np.ndarray,
                  k: np.ndarray, v: np.ndarray):
    """Gradients of attn_forward; returns (dq, dk, dv)."""
    scale = 1.0 / np.sqrt(q.shape[-1])
    dv = attn.transpose(0, 2, 1) @ d_out
    d_attn = d_out @ v.transpose(0, 2, 1)
    # softmax backward: dS = A * (dA - sum_j dA*A)
    d_scores = attn * (d_attn - (d_attn * attn).sum(axis=-1, keepdims=True))
    dq = (d_scores @ k) * scale
    dk = (d_scores.transpose(0, 2, 1) @ q) * scale
    return dq, dk, dv
