"""One-vs-all evaluation: ROC curves, AUROC, Youden thresholds, corrected
sensitivity/specificity, confusion matrices, bootstrap CIs, group tables.

Conventions (fixed and relied on by the tests):

- "predicted positive" means score >= threshold;
- Youden ties break toward the smallest maximizing threshold (which
  favors sensitivity under the >= convention);
- AUROC is the trapezoid over (1 - specificity, sensitivity), equal to
  the Mann-Whitney statistic with half credit for ties;
- confidence intervals are nonparametric percentile bootstrap over
  samples, resample i drawing its generator from (seed, i).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .taxonomy import ACTION_INDEX, TRAINABLE_ACTIONS, ActionClass, parse_action


class DegenerateClass(ValueError):
    """A class with no positive or no negative samples."""


class LengthMismatch(ValueError):
    pass


class EmptyData(ValueError):
    pass


class UnknownGroupKey(ValueError):
    pass


ROW_SUM_TOL = 1e-6


@dataclass
class ScoreMatrix:
    """Per-sample class probabilities plus ground-truth labels."""

    probs: np.ndarray  # (n, K), rows sum to 1
    labels: np.ndarray  # (n,) int class indices
    group: list[str] | None = None
    fold: np.ndarray | None = None
    sample_ids: list[str] | None = None

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.probs.ndim != 2 or len(self.probs) != len(self.labels):
            raise LengthMismatch("probs and labels row counts differ")
        if len(self.probs) and np.abs(self.probs.sum(axis=1) - 1.0).max() > ROW_SUM_TOL:
            raise ValueError(f"probability rows must sum to 1 within {ROW_SUM_TOL}")
        if self.group is not None and len(self.group) != len(self.labels):
            raise LengthMismatch("group length differs from labels")
        if self.fold is not None and len(self.fold) != len(self.labels):
            raise LengthMismatch("fold length differs from labels")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def n_classes(self) -> int:
        return self.probs.shape[1]

    def take(self, indices: np.ndarray) -> "ScoreMatrix":
        return ScoreMatrix(
            probs=self.probs[indices],
            labels=self.labels[indices],
            group=[self.group[i] for i in indices] if self.group is not None else None,
            fold=self.fold[indices] if self.fold is not None else None,
            sample_ids=[self.sample_ids[i] for i in indices]
            if self.sample_ids is not None else None,
        )


@dataclass
class RocCurve:
    """Operating points ordered by increasing threshold."""

    thresholds: np.ndarray
    sensitivity: np.ndarray
    specificity: np.ndarray

    def points(self):
        return list(zip(self.thresholds, self.sensitivity, self.specificity))


@dataclass
class MetricWithCI:
    point: float
    ci_low: float
    ci_high: float
    n_resamples: int
    seed: int
    degenerate: bool = False  # percentile bounds failed to bracket the point


def _class_index(class_k) -> int:
    if isinstance(class_k, ActionClass):
        return ACTION_INDEX[class_k]
    return int(class_k)


def roc_curve_ova(scores: ScoreMatrix, class_k) -> RocCurve:
    """One-vs-all ROC for one class over all unique score thresholds.

    Thresholds are the sorted unique scores for the class plus sentinels
    0, 1, and +inf, so the sweep always spans the (0,0) and (1,1) corners
    of the ROC plane.
    """
    k = _class_index(class_k)
    s = scores.probs[:, k]
    pos = scores.labels == k
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise DegenerateClass(f"class {k} has {n_pos} positives and {n_neg} negatives")

    thresholds = np.unique(np.concatenate([s, [0.0, 1.0, np.inf]]))
    sens = np.empty(len(thresholds))
    spec = np.empty(len(thresholds))
    for i, tau in enumerate(thresholds):
        pred = s >= tau
        sens[i] = (pred & pos).sum() / n_pos
        spec[i] = (~pred & ~pos).sum() / n_neg
    return RocCurve(thresholds=thresholds, sensitivity=sens, specificity=spec)


def auroc(curve: RocCurve) -> float:
    """Trapezoidal area over (1 - specificity, sensitivity)."""
    x = 1.0 - curve.specificity  # decreasing with threshold
    y = curve.sensitivity
    area = 0.0
    for i in range(len(x) - 1):
        area += (x[i] - x[i + 1]) * (y[i] + y[i + 1]) / 2.0
    return float(area)


def mann_whitney_auroc(pos_scores: np.ndarray, neg_scores: np.ndarray) -> float:
    """Pairwise comparison statistic with half credit for ties (test oracle)."""
    pos = np.asarray(pos_scores)[:, None]
    neg = np.asarray(neg_scores)[None, :]
    wins = (pos > neg).sum() + 0.5 * (pos == neg).sum()
    return float(wins / (pos.size * neg.size))


def youden_threshold(curve: RocCurve) -> tuple[float, float]:
    """(tau, J): J = max(sens + spec - 1), tau = smallest maximizer."""
    j = curve.sensitivity + curve.specificity - 1.0
    best = float(j.max())
    tau = float(curve.thresholds[np.flatnonzero(j >= best - 1e-15)[0]])
    return tau, best


def corrected_sens_spec(scores: ScoreMatrix, thresholds: Sequence[float]):
    """Per-class (sensitivity, specificity) at the class-specific thresholds."""
    K = scores.n_classes
    if len(thresholds) != K:
        raise LengthMismatch(f"need {K} thresholds, got {len(thresholds)}")
    out = []
    for k in range(K):
        pos = scores.labels == k
        n_pos, n_neg = int(pos.sum()), int((~pos).sum())
        if n_pos == 0 or n_neg == 0:
            raise DegenerateClass(f"class {k} has {n_pos} positives and {n_neg} negatives")
        pred = scores.probs[:, k] >= thresholds[k]
        tp = int((pred & pos).sum())
        tn = int((~pred & ~pos).sum())
        out.append((tp / n_pos, tn / n_neg))
    return out


def confusion_matrix(preds: Sequence[int], labels: Sequence[int],
                     n_classes: int = 10) -> np.ndarray:
    """counts[i, j] = # samples with label i predicted as j."""
    preds = np.asarray(preds, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if len(preds) != len(labels):
        raise LengthMismatch("preds and labels differ in length")
    mat = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(mat, (labels, preds), 1)
    return mat


def aggregate_folds(matrices: Sequence[np.ndarray]) -> np.ndarray:
    if not len(matrices):
        raise EmptyData("no matrices to aggregate")
    return np.sum(np.stack(matrices), axis=0)


def bootstrap_ci(statistic: Callable[[ScoreMatrix], float], scores: ScoreMatrix,
                 n_resamples: int = 1000, seed: int = 0) -> MetricWithCI:
    """Percentile bootstrap over samples, deterministic per (seed, i)."""
    if len(scores) == 0:
        raise EmptyData("cannot bootstrap an empty score matrix")
    point = float(statistic(scores))
    values = _bootstrap_values(statistic, scores, n_resamples, seed)
    lo, hi = np.percentile(values, [2.5, 97.5])
    return MetricWithCI(
        point=point, ci_low=float(lo), ci_high=float(hi),
        n_resamples=n_resamples, seed=seed,
        degenerate=not (lo <= point <= hi),
    )


def _bootstrap_values(statistic, scores: ScoreMatrix, n_resamples: int,
                      seed: int) -> np.ndarray:
    n = len(scores)
    values = np.empty(n_resamples)
    for i in range(n_resamples):
        rng = np.random.default_rng((seed, i))
        values[i] = statistic(scores.take(rng.integers(0, n, size=n)))
    return values


def groupwise(statistic: Callable[[ScoreMatrix], float], scores: ScoreMatrix,
              key: str = "surgery", n_resamples: int = 1000,
              seed: int = 0) -> dict[str, MetricWithCI]:
    """Per-group statistic with CIs plus an unweighted macro-average row.

    ``key`` is "surgery" (the group column) or "action" (the label). The
    macro row averages per-group resample values index-by-index, so its
    CI is the percentile band of the mean of group statistics.
    """
    if key == "surgery":
        if scores.group is None:
            raise UnknownGroupKey("score matrix has no surgery group column")
        group_of = np.asarray(scores.group)
    elif key == "action":
        group_of = np.asarray([TRAINABLE_ACTIONS[i].value if i < len(TRAINABLE_ACTIONS)
                               else str(i) for i in scores.labels])
    else:
        raise UnknownGroupKey(f"unknown group key {key!r}")

    table: dict[str, MetricWithCI] = {}
    resample_stack = []
    points = []
    for name in sorted(set(group_of)):
        subset = scores.take(np.flatnonzero(group_of == name))
        entry = bootstrap_ci(statistic, subset, n_resamples=n_resamples, seed=seed)
        table[name] = entry
        points.append(entry.point)
        resample_stack.append(_bootstrap_values(statistic, subset, n_resamples, seed))
    macro_values = np.mean(np.stack(resample_stack), axis=0)
    lo, hi = np.percentile(macro_values, [2.5, 97.5])
    macro_point = float(np.mean(points))
    table["macro"] = MetricWithCI(
        point=macro_point, ci_low=float(lo), ci_high=float(hi),
        n_resamples=n_resamples, seed=seed,
        degenerate=not (lo <= macro_point <= hi),
    )
    return table


# ---------------------------------------------------------------------------
# serialization

SCORES_FIELDS = ("sample_id", "label", "group", "fold")


def save_scores(scores: ScoreMatrix, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(len(scores)):
            row = {
                "sample_id": scores.sample_ids[i] if scores.sample_ids else str(i),
                "label": int(scores.labels[i]),
                "group": scores.group[i] if scores.group else "",
                "fold": int(scores.fold[i]) if scores.fold is not None else -1,
            }
            row.update({f"p{k}": float(scores.probs[i, k])
                        for k in range(scores.n_classes)})
            fh.write(json.dumps(row) + "\n")


def load_scores(path: str | Path) -> ScoreMatrix:
    rows, labels, groups, folds, ids = [], [], [], [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            data = json.loads(line)
            k = 0
            while f"p{k}" in data:
                k += 1
            rows.append([float(data[f"p{j}"]) for j in range(k)])
            label = data["label"]
            if isinstance(label, str) and not label.lstrip("-").isdigit():
                label = ACTION_INDEX[parse_action(label)]
            labels.append(int(label))
            groups.append(str(data.get("group", "")))
            folds.append(int(data.get("fold", -1)))
            ids.append(str(data.get("sample_id", len(ids))))
    has_group = any(groups)
    return ScoreMatrix(
        probs=np.array(rows), labels=np.array(labels),
        group=groups if has_group else None,
        fold=np.array(folds) if any(f >= 0 for f in folds) else None,
        sample_ids=ids,
    )


#: Column order of the per-class evaluation report (stable contract).
REPORT_COLUMNS = (
    "class", "auroc", "auroc_ci_low", "auroc_ci_high", "youden_j", "tau",
    "sensitivity", "sens_ci_low", "sens_ci_high",
    "specificity", "spec_ci_low", "spec_ci_high",
)


def evaluation_report(scores: ScoreMatrix, n_resamples: int = 1000,
                      seed: int = 0, class_names: Sequence[str] | None = None):
    """Per-class AUROC/Youden/corrected metrics with bootstrap CIs.

    Returns (rows, thresholds); rows end with an unweighted macro row.
    """
    K = scores.n_classes
    if class_names is None:
        class_names = [TRAINABLE_ACTIONS[k].value if K == len(TRAINABLE_ACTIONS)
                       else f"class{k}" for k in range(K)]
    taus = []
    rows = []
    for k in range(K):
        curve = roc_curve_ova(scores, k)
        tau, j = youden_threshold(curve)
        taus.append(tau)

        def auroc_stat(sm, k=k):
            return auroc(roc_curve_ova(sm, k))

        def sens_stat(sm, k=k, tau=tau):
            pos = sm.labels == k
            pred = sm.probs[:, k] >= tau
            return (pred & pos).sum() / max(int(pos.sum()), 1)

        def spec_stat(sm, k=k, tau=tau):
            neg = sm.labels != k
            pred = sm.probs[:, k] < tau
            return (pred & neg).sum() / max(int(neg.sum()), 1)

        a = bootstrap_ci(auroc_stat, scores, n_resamples, seed)
        se = bootstrap_ci(sens_stat, scores, n_resamples, seed)
        sp = bootstrap_ci(spec_stat, scores, n_resamples, seed)
        rows.append({
            "class": class_names[k],
            "auroc": a.point, "auroc_ci_low": a.ci_low, "auroc_ci_high": a.ci_high,
            "youden_j": j, "tau": tau,
            "sensitivity": se.point, "sens_ci_low": se.ci_low, "sens_ci_high": se.ci_high,
            "specificity": sp.point, "spec_ci_low": sp.ci_low, "spec_ci_high": sp.ci_high,
        })
    macro = {"class": "macro"}
    for col in REPORT_COLUMNS[1:]:
        macro[col] = float(np.mean([r[col] for r in rows]))
    rows.append(macro)
    return rows, taus


def write_report_csv(rows: list[dict], path: str | Path,
                     columns: Sequence[str] = REPORT_COLUMNS) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns))
        writer.writeheader()
        for row in rows:
            writer.writerow({c: row.get(c, "") for c in columns})
