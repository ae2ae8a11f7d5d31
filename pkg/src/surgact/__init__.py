"""Surgical action analytics toolkit.

Subpackages and modules:

- ``taxonomy``: the closed action taxonomy and surgery types.
- ``dataset``: clip records, manifests, validity checks, frame sampling,
  video-level fold splits.
- ``model``: divided space-time attention classifier with a dual-head
  imbalance stage, evidential loss, and an SGD trainer.
- ``metrics``: one-vs-all ROC/AUROC, Youden thresholds, corrected
  sensitivity/specificity, confusion matrices, bootstrap CIs.
- ``agreement``: two-rater agreement statistics (observed agreement,
  Cohen's kappa, Pearson r on coded labels, Gwet's AC1).
- ``skill``: action barcodes, multiple-attempt and idle-state factors,
  SVG rendering.
- ``planning``: sliding-window next-action planning harness with a
  pluggable chat endpoint, deterministic mocks, and accuracy metrics.
- ``cli``: the ``surgact`` command-line entry point.
"""

__version__ = "0.1.0"
