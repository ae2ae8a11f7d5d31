"""Whole-model forward/backward: encoder, dual head, Dirichlet output.

The class-token feature feeds two heads. The main head's raw scores map
through softplus to non-negative evidence. The imbalance head emits a
penalization weight ``w_p`` for the dominant class and a compensation
weight ``w_c`` for every other class, each squashed onto (0, 2) and equal
to 1 at initialization. Adjusted evidence becomes Dirichlet concentration
``alpha = evidence + 1``; predicted probabilities are ``alpha / sum(alpha)``
and uncertainty is ``n_classes / sum(alpha)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ModelParams
from .layers import (
    ComparisonCounter,
    block_backward,
    block_forward,
    embed_backward,
    embed_forward,
    layernorm_backward,
    layernorm_forward,
    sigmoid,
    softplus,
)


class NonFiniteActivation(FloatingPointError):
    """NaN/Inf encountered in the forward pass."""


@dataclass
class DirichletOutput:
    alpha: np.ndarray
    probabilities: np.ndarray
    uncertainty: float
    w_p: float
    w_c: float


def imbalance_head(theta: np.ndarray, params: ModelParams):
    """Map a (batch of) class-token feature(s) to (w_p, w_c) in (0, 2)."""
    theta = np.atleast_2d(np.asarray(theta, dtype=np.float64))
    z = theta @ params["imbalance.w"] + params["imbalance.b"]
    w = 2.0 * sigmoid(z)
    return w[:, 0], w[:, 1]


def adjust_evidence(evidence: np.ndarray, w_p: np.ndarray, w_c: np.ndarray,
                    dominant_index: int) -> np.ndarray:
    """Dual-head reweighting: w_p scales the dominant class, w_c the rest."""
    evidence = np.atleast_2d(np.asarray(evidence, dtype=np.float64))
    adjusted = evidence * np.asarray(w_c)[:, None]
    adjusted[:, dominant_index] = evidence[:, dominant_index] * np.asarray(w_p)
    return adjusted


def forward_batch(clips: np.ndarray, params: ModelParams,
                  counter: ComparisonCounter | None = None,
                  want_cache: bool = False):
    """Run the encoder and both heads on a batch of clips.

    Returns a dict with alpha/probabilities/uncertainty/w_p/w_c arrays and,
    when ``want_cache`` is set, the cache needed by :func:`backward_batch`.
    """
    config = params.config
    x, embed_cache = embed_forward(clips, params, config)
    block_caches = []
    for l in range(config.depth):
        x, c = block_forward(x, params, l, config, counter)
        block_caches.append(c)

    cls_feat = x[:, 0]
    theta, ln_f = layernorm_forward(cls_feat, params["final_ln.g"], params["final_ln.b"])
    scores = theta @ params["head.w"] + params["head.b"]
    evidence = softplus(scores)

    if config.dual_head:
        z = theta @ params["imbalance.w"] + params["imbalance.b"]
        w = 2.0 * sigmoid(z)
        w_p, w_c = w[:, 0], w[:, 1]
    else:
        w_p = np.ones(len(theta))
        w_c = np.ones(len(theta))

    alpha = adjust_evidence(evidence, w_p, w_c, config.dominant_index) + 1.0
    if not np.all(np.isfinite(alpha)):
        bad = np.where(~np.isfinite(alpha).all(axis=1))[0]
        raise NonFiniteActivation(
            f"non-finite alpha for batch rows {bad.tolist()}; "
            f"score range [{np.nanmin(scores)}, {np.nanmax(scores)}]"
        )
    total = alpha.sum(axis=1, keepdims=True)

    out = {
        "alpha": alpha,
        "probabilities": alpha / total,
        "uncertainty": config.n_classes / total[:, 0],
        "w_p": w_p,
        "w_c": w_c,
        "evidence": evidence,
    }
    if want_cache:
        out["cache"] = {
            "embed": embed_cache, "blocks": block_caches, "ln_f": ln_f,
            "theta": theta, "scores": scores, "evidence": evidence,
            "w_p": w_p, "w_c": w_c, "n_tokens": x.shape[1],
        }
    return out


def backward_batch(d_alpha: np.ndarray, cache, params: ModelParams) -> dict[str, np.ndarray]:
    """Gradients of a scalar loss w.r.t. every parameter, given dL/d alpha."""
    config = params.config
    grads: dict[str, np.ndarray] = {}
    theta = cache["theta"]
    evidence = cache["evidence"]
    w_p, w_c = cache["w_p"], cache["w_c"]
    dom = config.dominant_index

    d_adj = np.asarray(d_alpha, dtype=np.float64)
    d_evidence = d_adj * w_c[:, None]
    d_evidence[:, dom] = d_adj[:, dom] * w_p
    d_scores = d_evidence * sigmoid(cache["scores"])

    grads["head.w"] = theta.T @ d_scores
    grads["head.b"] = d_scores.sum(axis=0)
    d_theta = d_scores @ params["head.w"].T

    if config.dual_head:
        others = np.ones(config.n_classes, dtype=bool)
        others[dom] = False
        d_wp = d_adj[:, dom] * evidence[:, dom]
        d_wc = (d_adj[:, others] * evidence[:, others]).sum(axis=1)
        # w = 2*sigmoid(z)  =>  dw/dz = w * (1 - w/2)
        dz = np.stack([d_wp * w_p * (1.0 - w_p / 2.0),
                       d_wc * w_c * (1.0 - w_c / 2.0)], axis=1)
        grads["imbalance.w"] = theta.T @ dz
        grads["imbalance.b"] = dz.sum(axis=0)
        d_theta = d_theta + dz @ params["imbalance.w"].T
    else:
        grads["imbalance.w"] = np.zeros_like(params["imbalance.w"])
        grads["imbalance.b"] = np.zeros_like(params["imbalance.b"])

    d_cls, dg, db = layernorm_backward(d_theta, cache["ln_f"])
    grads["final_ln.g"], grads["final_ln.b"] = dg, db

    dx = np.zeros((len(theta), cache["n_tokens"], config.embed_dim))
    dx[:, 0] = d_cls
    for l in range(config.depth - 1, -1, -1):
        dx = block_backward(dx, cache["blocks"][l], params, config, grads)
    embed_backward(dx, cache["embed"], grads)
    return grads


def forward(clip: np.ndarray, params: ModelParams,
            counter: ComparisonCounter | None = None) -> DirichletOutput:
    """Single-clip forward pass returning the Dirichlet output."""
    out = forward_batch(np.asarray(clip)[None], params, counter=counter)
    return DirichletOutput(
        alpha=out["alpha"][0],
        probabilities=out["probabilities"][0],
        uncertainty=float(out["uncertainty"][0]),
        w_p=float(out["w_p"][0]),
        w_c=float(out["w_c"][0]),
    )


def predict_batch(clips: np.ndarray, params: ModelParams) -> np.ndarray:
    """Argmax class indices; ties break toward the lowest index."""
    return np.argmax(forward_batch(clips, params)["probabilities"], axis=1)


def predict(clip: np.ndarray, params: ModelParams) -> int:
    return int(np.argmax(forward(clip, params).probabilities))
