"""Divided space-time attention classifier with dual-head output."""

from .config import (
    CHECKPOINT_VERSION,
    ModelConfig,
    ModelParams,
    ShapeMismatch,
    init_params,
    load_checkpoint,
    save_checkpoint,
)
from .layers import ComparisonCounter
from .loss import InvalidAlpha, evidential_loss, evidential_loss_batch
from .network import (
    DirichletOutput,
    NonFiniteActivation,
    adjust_evidence,
    backward_batch,
    forward,
    forward_batch,
    imbalance_head,
    predict,
    predict_batch,
)
from .train import EmptyDataset, SgdState, evaluate_accuracy, sgd_step, train_toy

__all__ = [
    "CHECKPOINT_VERSION",
    "ComparisonCounter",
    "DirichletOutput",
    "EmptyDataset",
    "InvalidAlpha",
    "ModelConfig",
    "ModelParams",
    "NonFiniteActivation",
    "SgdState",
    "ShapeMismatch",
    "adjust_evidence",
    "backward_batch",
    "evaluate_accuracy",
    "evidential_loss",
    "evidential_loss_batch",
    "forward",
    "forward_batch",
    "imbalance_head",
    "init_params",
    "load_checkpoint",
    "predict",
    "predict_batch",
    "save_checkpoint",
    "sgd_step",
    "train_toy",
]
