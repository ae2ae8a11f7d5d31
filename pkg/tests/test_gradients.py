"""Finite-difference spot checks of the analytic backward pass.

The acceptance suite runs the exhaustive every-entry check; here a seeded
subset of entries per parameter keeps the regular suite fast while still
covering both kernel backends.
"""

import numpy as np
import pytest

from surgact._kernels import available_backends, use_backend
from surgact.model import (
    ModelConfig,
    backward_batch,
    evidential_loss_batch,
    forward_batch,
    init_params,
)


def build_case(dual_head=True, seed=0):
    cfg = ModelConfig(patch_size=4, embed_dim=16, depth=1, n_heads=2,
                      frames=4, height=8, width=8, n_classes=10,
                      dominant_index=3, mlp_hidden=32, dual_head=dual_head)
    params = init_params(cfg, seed=seed)
    rng = np.random.default_rng(seed + 50)
    for k, v in params.tensors.items():
        params.tensors[k] = v + rng.normal(scale=0.05, size=v.shape)
    clips = rng.uniform(size=(2, cfg.frames, cfg.height, cfg.width, 3))
    targets = np.array([3, 7])
    return cfg, params, clips, targets


def loss_of(params, clips, targets, epoch=5):
    out = forward_batch(clips, params)
    return evidential_loss_batch(out["alpha"], targets, epoch=epoch)[0]


def analytic_grads(params, clips, targets, epoch=5):
    out = forward_batch(clips, params, want_cache=True)
    _, d_alpha = evidential_loss_batch(out["alpha"], targets, epoch=epoch)
    return backward_batch(d_alpha, out["cache"], params)


def relative_error(a, b, floor=1e-6):
    return abs(a - b) / max(abs(a), abs(b), floor)


def check_subset(params, grads, clips, targets, entries_per_param=4, seed=1):
    rng = np.random.default_rng(seed)
    h = 1e-5
    worst = 0.0
    for name, arr in params.tensors.items():
        flat = arr.ravel()
        g = grads[name].ravel()
        idxs = rng.choice(flat.size, size=min(entries_per_param, flat.size),
                          replace=False)
        for i in idxs:
            orig = flat[i]
            flat[i] = orig + h
            lp = loss_of(params, clips, targets)
            flat[i] = orig - h
            lm = loss_of(params, clips, targets)
            flat[i] = orig
            fd = (lp - lm) / (2 * h)
            worst = max(worst, relative_error(fd, g[i]))
    return worst


@pytest.mark.parametrize("backend", available_backends())
def test_whole_model_gradients_spot_check(backend):
    cfg, params, clips, targets = build_case()
    with use_backend(backend):
        grads = analytic_grads(params, clips, targets)
        worst = check_subset(params, grads, clips, targets)
    assert worst < 1e-4, f"worst relative error {worst} on backend {backend}"


def test_gradients_with_dual_head_disabled():
    cfg, params, clips, targets = build_case(dual_head=False, seed=2)
    grads = analytic_grads(params, clips, targets)
    assert np.all(grads["imbalance.w"] == 0.0)
    worst = check_subset(params, grads, clips, targets)
    assert worst < 1e-4


def test_gradients_through_kl_annealing():
    cfg, params, clips, targets = build_case(seed=3)
    out = forward_batch(clips, params, want_cache=True)
    _, d_alpha = evidential_loss_batch(out["alpha"], targets, epoch=50)
    grads = backward_batch(d_alpha, out["cache"], params)
    rng = np.random.default_rng(4)
    h = 1e-5
    for name in ("head.w", "imbalance.w", "block0.tattn.wq"):
        flat = params.tensors[name].ravel()
        g = grads[name].ravel()
        for i in rng.choice(flat.size, size=4, replace=False):
            orig = flat[i]
            flat[i] = orig + h
            lp = loss_of(params, clips, targets, epoch=50)
            flat[i] = orig - h
            lm = loss_of(params, clips, targets, epoch=50)
            flat[i] = orig
            fd = (lp - lm) / (2 * h)
            assert relative_error(fd, g[i]) < 1e-4
