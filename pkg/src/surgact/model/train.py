"""SGD with momentum/weight decay and the desk-scale training loop."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import ModelConfig, ModelParams, ShapeMismatch, init_params
from .loss import evidential_loss_batch
from .network import backward_batch, forward_batch


class EmptyDataset(ValueError):
    """Training requires at least one labeled clip."""


@dataclass
class SgdState:
    """Velocity buffers, persistent across steps."""

    velocity: dict[str, np.ndarray] = field(default_factory=dict)


def sgd_step(params: ModelParams, grads: dict[str, np.ndarray], state: SgdState,
             lr: float = 0.005, momentum: float = 0.9,
             weight_decay: float = 0.001) -> ModelParams:
    """v <- momentum*v + grad + wd*param; param <- param - lr*v (in place)."""
    for name, p in params.tensors.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ShapeMismatch(f"grad shape {g.shape} != param shape {p.shape} for {name}")
        v = state.velocity.get(name)
        if v is None:
            v = np.zeros_like(p)
            state.velocity[name] = v
        v *= momentum
        v += g + weight_decay * p
        p -= lr * v
    return params


def evaluate_accuracy(clips: np.ndarray, labels: np.ndarray, params: ModelParams,
                      batch_size: int = 64) -> float:
    correct = 0
    for start in range(0, len(clips), batch_size):
        out = forward_batch(clips[start:start + batch_size], params)
        correct += int((np.argmax(out["probabilities"], axis=1)
                        == labels[start:start + batch_size]).sum())
    return correct / len(clips)


def train_toy(clips: np.ndarray, labels: np.ndarray, config: ModelConfig,
              epochs: int, seed: int = 0, lr: float = 0.005,
              momentum: float = 0.9, weight_decay: float = 0.001,
              batch_size: int = 16, anneal_epochs: int = 10):
    """Train from seeded random init; fully deterministic for a fixed seed.

    Returns (params, history) where history holds one dict per epoch with
    the mean loss and training accuracy. Loss is not guaranteed monotone.
    """
    clips = np.asarray(clips, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if len(clips) == 0:
        raise EmptyDataset("no training clips")
    if len(clips) != len(labels):
        raise ValueError("clips and labels differ in length")
    if labels.min() < 0 or labels.max() >= config.n_classes:
        raise ValueError("labels out of range for config.n_classes")

    rng = np.random.default_rng(seed)
    params = init_params(config, seed=seed)
    state = SgdState()
    history: list[dict] = []
    n = len(clips)

    for epoch in range(epochs):
        order = rng.permutation(n)
        losses = []
        correct = 0
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            out = forward_batch(clips[idx], params, want_cache=True)
            loss, d_alpha = evidential_loss_batch(
                out["alpha"], labels[idx], epoch=epoch, anneal_epochs=anneal_epochs)
            grads = backward_batch(d_alpha, out["cache"], params)
            sgd_step(params, grads, state, lr=lr, momentum=momentum,
                     weight_decay=weight_decay)
            losses.append(loss)
            correct += int((np.argmax(out["probabilities"], axis=1) == labels[idx]).sum())
        history.append({
            "epoch": epoch,
            "loss": float(np.mean(losses)),
            "train_accuracy": correct / n,
        })
    return params, history
