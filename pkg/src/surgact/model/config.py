"""Model configuration, parameter initialization, and checkpoint IO."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

CHECKPOINT_VERSION = 1


class ShapeMismatch(ValueError):
    """Array shapes inconsistent with the model configuration."""


@dataclass(frozen=True)
class ModelConfig:
    patch_size: int
    embed_dim: int
    depth: int
    n_heads: int
    frames: int
    height: int
    width: int
    n_classes: int = 10
    dominant_index: int = 3  # Dissection under the fixed integer coding
    mlp_hidden: int = 0  # 0 -> 4 * embed_dim
    dual_head: bool = True

    def __post_init__(self):
        if self.patch_size < 1:
            raise ValueError("patch_size must be >= 1")
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if self.embed_dim % self.n_heads != 0:
            raise ValueError("embed_dim must be divisible by n_heads")
        if self.height % self.patch_size or self.width % self.patch_size:
            raise ValueError("height and width must be divisible by patch_size")
        if not (0 <= self.dominant_index < self.n_classes):
            raise ValueError("dominant_index out of range")

    @property
    def n_patches(self) -> int:
        return (self.height // self.patch_size) * (self.width // self.patch_size)

    @property
    def seq_len(self) -> int:
        return self.n_patches * self.frames + 1

    @property
    def head_dim(self) -> int:
        return self.embed_dim // self.n_heads

    @property
    def hidden_dim(self) -> int:
        return self.mlp_hidden if self.mlp_hidden else 4 * self.embed_dim

    @property
    def patch_dim(self) -> int:
        return self.patch_size * self.patch_size * 3


@dataclass
class ModelParams:
    """Named parameter arrays plus the config they were built for."""

    config: ModelConfig
    tensors: dict[str, np.ndarray] = field(default_factory=dict)

    def __getitem__(self, key: str) -> np.ndarray:
        return self.tensors[key]

    def keys(self):
        return self.tensors.keys()

    def copy(self) -> "ModelParams":
        return ModelParams(self.config, {k: v.copy() for k, v in self.tensors.items()})

    def check_finite(self) -> None:
        for name, arr in self.tensors.items():
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite values in parameter {name!r}")


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_params(config: ModelConfig, seed: int = 0) -> ModelParams:
    """Seeded scaled-uniform initialization.

    The imbalance head starts at exactly (w_p, w_c) = (1, 1): zero weights
    and zero bias ahead of the squashing onto (0, 2).
    """
    rng = np.random.default_rng(seed)
    D, K = config.embed_dim, config.n_classes
    Hm = config.hidden_dim
    t: dict[str, np.ndarray] = {}

    t["embed.proj"] = _glorot(rng, config.patch_dim, D).T  # (D, patch_dim)
    t["embed.cls"] = rng.uniform(-0.02, 0.02, size=D)
    t["embed.pos"] = rng.uniform(-0.02, 0.02, size=(config.seq_len, D))

    for l in range(config.depth):
        p = f"block{l}"
        for ln in ("ln1", "ln2", "ln3"):
            t[f"{p}.{ln}.g"] = np.ones(D)
            t[f"{p}.{ln}.b"] = np.zeros(D)
        for stage in ("tattn", "sattn"):
            for w in ("wq", "wk", "wv", "wo"):
                t[f"{p}.{stage}.{w}"] = _glorot(rng, D, D)
            for b in ("bq", "bv", "bo"):  # no key bias (cancels in softmax)
                t[f"{p}.{stage}.{b}"] = np.zeros(D)
        t[f"{p}.mlp.w1"] = _glorot(rng, D, Hm)
        t[f"{p}.mlp.b1"] = np.zeros(Hm)
        t[f"{p}.mlp.w2"] = _glorot(rng, Hm, D)
        t[f"{p}.mlp.b2"] = np.zeros(D)

    t["final_ln.g"] = np.ones(D)
    t["final_ln.b"] = np.zeros(D)
    t["head.w"] = _glorot(rng, D, K)
    t["head.b"] = np.zeros(K)
    t["imbalance.w"] = np.zeros((D, 2))
    t["imbalance.b"] = np.zeros(2)
    return ModelParams(config, t)


def save_checkpoint(params: ModelParams, path: str | Path) -> None:
    """Self-describing .npz: config JSON, version, and named arrays."""
    meta = {"version": CHECKPOINT_VERSION, "config": asdict(params.config)}
    np.savez(
        path,
        __meta__=np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8),
        **params.tensors,
    )


def load_checkpoint(path: str | Path) -> ModelParams:
    with np.load(path) as data:
        meta = json.loads(bytes(data["__meta__"]).decode("utf-8"))
        if meta.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version: {meta.get('version')}")
        config = ModelConfig(**meta["config"])
        tensors = {k: data[k] for k in data.files if k != "__meta__"}
    return ModelParams(config, tensors)
