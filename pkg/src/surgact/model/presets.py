"""Pinned desk-scale benchmark setups (data seeds, configs, train settings).

These are the exact settings the acceptance suite runs; the CLI exposes
them so results are reproducible outside the tests.
"""

from __future__ import annotations

from .config import ModelConfig
from .synthetic import make_motion_dataset, train_test_split


def toy_benchmark():
    """Balanced 3-class motion benchmark: 600 clips, 32x32, T=8."""
    clips, labels = make_motion_dataset(600, seed=11, size=32, frames=8,
                                        noise=0.10, contrast=0.8)
    x_tr, y_tr, x_te, y_te = train_test_split(clips, labels, 0.25, seed=12)
    config = ModelConfig(patch_size=8, embed_dim=32, depth=2, n_heads=4,
                         frames=8, height=32, width=32, n_classes=3,
                         dominant_index=0, mlp_hidden=64)
    train_kwargs = dict(epochs=20, seed=7, lr=0.02, batch_size=16)
    return (x_tr, y_tr, x_te, y_te), config, train_kwargs


def imbalance_benchmark(dual_head: bool):
    """20:1 imbalanced 3-class benchmark; dominant class is index 0."""
    x_tr, y_tr = make_motion_dataset(1100, seed=21, size=32, frames=8,
                                     class_weights=(20, 1, 1),
                                     noise=0.10, contrast=0.8)
    x_te, y_te = make_motion_dataset(450, seed=22, size=32, frames=8,
                                     class_weights=(1, 1, 1),
                                     noise=0.10, contrast=0.8)
    config = ModelConfig(patch_size=8, embed_dim=32, depth=1, n_heads=4,
                         frames=8, height=32, width=32, n_classes=3,
                         dominant_index=0, mlp_hidden=64, dual_head=dual_head)
    train_kwargs = dict(epochs=20, seed=7, lr=0.02, batch_size=16)
    return (x_tr, y_tr, x_te, y_te), config, train_kwargs
