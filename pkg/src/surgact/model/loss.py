"""Evidential classification loss on Dirichlet concentrations.

Bayes-risk mean-squared-error form plus an annealed KL regularizer toward
the uniform Dirichlet, with the target class's evidence removed from the
regularized concentration. Gradients w.r.t. alpha are analytic.
"""

from __future__ import annotations

import numpy as np
from scipy.special import digamma, gammaln, polygamma


class InvalidAlpha(ValueError):
    """Concentration parameters below the admissible floor of 1."""


def anneal_coefficient(epoch: int, anneal_epochs: int = 10) -> float:
    return min(1.0, epoch / anneal_epochs)


def evidential_loss_batch(alpha: np.ndarray, targets: np.ndarray, epoch: int,
                          anneal_epochs: int = 10):
    """Mean loss over a batch and dL/d alpha.

    alpha: (B, K) concentrations, each entry >= 1.
    targets: (B,) integer class indices.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.ndim != 2:
        raise ValueError("alpha must be (B, K)")
    if np.any(alpha < 1.0 - 1e-12):
        raise InvalidAlpha(f"alpha must be >= 1 everywhere, min={alpha.min()}")
    B, K = alpha.shape
    y = np.zeros((B, K))
    y[np.arange(B), targets] = 1.0

    S = alpha.sum(axis=1, keepdims=True)
    p = alpha / S
    err = ((y - p) ** 2).sum(axis=1)
    var = (alpha * (S - alpha) / (S * S * (S + 1.0))).sum(axis=1)
    risk = err + var

    # d err / d alpha_i: every p_j depends on alpha_i through S
    resid = y - p
    d_err = (-2.0 / S) * (resid - (resid * p).sum(axis=1, keepdims=True))
    # var = (S^2 - sum_j alpha_j^2) / (S^2 (S+1)); differentiate the
    # numerator directly and the 1/(S^2(S+1)) factor through S
    d_var = 2.0 * (S - alpha) / (S * S * (S + 1.0)) \
        - var[:, None] * (3.0 * S + 2.0) / (S * (S + 1.0))
    lam = anneal_coefficient(epoch, anneal_epochs)
    loss = risk
    d_alpha = d_err + d_var
    if lam > 0.0:
        alpha_t = y + (1.0 - y) * alpha
        kl, d_kl_at = _kl_to_uniform(alpha_t)
        loss = loss + lam * kl
        d_alpha = d_alpha + lam * d_kl_at * (1.0 - y)

    return float(loss.mean()), d_alpha / B


def _kl_to_uniform(alpha: np.ndarray):
    """KL(Dir(alpha) || Dir(1)) per row, with gradient."""
    K = alpha.shape[1]
    S = alpha.sum(axis=1, keepdims=True)
    kl = (
        gammaln(S[:, 0])
        - gammaln(float(K))
        - gammaln(alpha).sum(axis=1)
        + ((alpha - 1.0) * (digamma(alpha) - digamma(S))).sum(axis=1)
    )
    trigamma = polygamma(1, alpha)
    trigamma_S = polygamma(1, S)
    d_alpha = (alpha - 1.0) * trigamma - (alpha - 1.0).sum(axis=1, keepdims=True) * trigamma_S
    return kl, d_alpha


def evidential_loss(alpha: np.ndarray, target: int, epoch: int,
                    anneal_epochs: int = 10):
    """Loss and gradient for a single sample's concentration vector."""
    loss, d_alpha = evidential_loss_batch(
        np.asarray(alpha, dtype=np.float64)[None], np.array([target]),
        epoch, anneal_epochs)
    return loss, d_alpha[0]
