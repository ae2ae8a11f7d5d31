"""Synthetic motion clips for desk-scale training and benchmarks.

Three classes defined by their temporal signature on a noisy background:

- ``TRANSLATING`` (0): a bright square drifting across frames,
- ``BLINKING`` (1): a stationary square toggling visibility,
- ``STATIC`` (2): pure noise, constant over time.

Clips are (T, H, W, 3) float arrays in [0, 1].
"""

from __future__ import annotations

import numpy as np

TRANSLATING, BLINKING, STATIC = 0, 1, 2
CLASS_NAMES = ("translating_square", "blinking_square", "static_noise")


def _paint_square(frame: np.ndarray, top: int, left: int, side: int,
                  color: np.ndarray) -> None:
    h, w, _ = frame.shape
    top = int(np.clip(top, 0, h - side))
    left = int(np.clip(left, 0, w - side))
    frame[top:top + side, left:left + side] = color


def make_clip(label: int, rng: np.random.Generator, size: int = 32,
              frames: int = 8, noise: float = 0.10,
              contrast: float = 0.8) -> np.ndarray:
    base = rng.uniform(0.0, noise, size=(size, size, 3))
    clip = np.repeat(base[None], frames, axis=0)

    if label == STATIC:
        return np.clip(clip, 0.0, 1.0)

    side = int(rng.integers(size // 5, size // 3 + 1))
    color = np.full(3, contrast) + rng.uniform(-0.1, 0.1, size=3)
    top = int(rng.integers(0, size - side + 1))
    left = int(rng.integers(0, size - side + 1))

    if label == TRANSLATING:
        vel = rng.integers(-2, 3, size=2)
        while vel[0] == 0 and vel[1] == 0:
            vel = rng.integers(-2, 3, size=2)
        for t in range(frames):
            _paint_square(clip[t], top + t * int(vel[0]), left + t * int(vel[1]),
                          side, color)
    elif label == BLINKING:
        phase = int(rng.integers(0, 2))
        for t in range(frames):
            if (t + phase) % 2 == 0:
                _paint_square(clip[t], top, left, side, color)
    else:
        raise ValueError(f"unknown label {label}")
    return np.clip(clip, 0.0, 1.0)


def make_motion_dataset(n_clips: int, seed: int = 0, size: int = 32,
                        frames: int = 8, class_weights=(1.0, 1.0, 1.0),
                        noise: float = 0.10, contrast: float = 0.8):
    """Seeded dataset with class frequencies proportional to class_weights."""
    rng = np.random.default_rng(seed)
    weights = np.asarray(class_weights, dtype=np.float64)
    probs = weights / weights.sum()
    labels = rng.choice(len(probs), size=n_clips, p=probs)
    clips = np.stack([
        make_clip(int(y), rng, size=size, frames=frames, noise=noise,
                  contrast=contrast)
        for y in labels
    ])
    return clips, labels.astype(np.int64)


def train_test_split(clips: np.ndarray, labels: np.ndarray, test_fraction: float,
                     seed: int = 0):
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(clips))
    n_test = int(round(len(clips) * test_fraction))
    test, train = order[:n_test], order[n_test:]
    return clips[train], labels[train], clips[test], labels[test]
