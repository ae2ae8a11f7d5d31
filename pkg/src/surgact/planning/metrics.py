"""Strict/relaxed, local/global top-k accuracy and surgeon-match rates.

Local accuracy pools all samples; global accuracy averages per-context
means, weighting every context equally. Strict requires the next action
in the top-k predictions; relaxed accepts either of the next two actions
(at a context tail, where no second next action exists, relaxed falls
back to strict for that sample).
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

from ..taxonomy import ActionClass
from .log import EmptyLog, LogEntry, PredictionLog


class AlignmentError(ValueError):
    pass


def _hit(entry: LogEntry, k: int, relaxed: bool) -> bool:
    preds = [p.action for p in entry.response.predictions[:k]]
    accepted = {entry.sample.ground_truth_next}
    if relaxed and entry.sample.ground_truth_next2 is not None:
        accepted.add(entry.sample.ground_truth_next2)
    return any(p in accepted for p in preds)


def _local(log: PredictionLog, k: int, relaxed: bool) -> float:
    entries = log.ordered()
    if not entries:
        raise EmptyLog("prediction log is empty")
    return sum(_hit(e, k, relaxed) for e in entries) / len(entries)


def _global(log: PredictionLog, k: int, relaxed: bool) -> float:
    grouped = log.by_context()
    if not grouped:
        raise EmptyLog("prediction log is empty")
    per_context = [
        sum(_hit(e, k, relaxed) for e in entries) / len(entries)
        for entries in grouped.values()
    ]
    return sum(per_context) / len(per_context)


def s_local_acc(log: PredictionLog, k: int) -> float:
    return _local(log, k, relaxed=False)


def s_global_acc(log: PredictionLog, k: int) -> float:
    return _global(log, k, relaxed=False)


def r_local_acc(log: PredictionLog, k: int) -> float:
    return _local(log, k, relaxed=True)


def r_global_acc(log: PredictionLog, k: int) -> float:
    return _global(log, k, relaxed=True)


#: Row order of the planning metrics table (stable contract).
TABLE_ROWS = ("strict_local", "strict_global", "relaxed_local", "relaxed_global")


def metrics_table(log: PredictionLog, ks: Sequence[int] = (1, 2, 3)) -> dict[str, list[float]]:
    fns = {"strict_local": s_local_acc, "strict_global": s_global_acc,
           "relaxed_local": r_local_acc, "relaxed_global": r_global_acc}
    return {row: [fns[row](log, k) for k in ks] for row in TABLE_ROWS}


def write_metrics_csv(table: dict[str, list[float]], path: str | Path,
                      ks: Sequence[int] = (1, 2, 3)) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric"] + [f"top{k}" for k in ks])
        for row in TABLE_ROWS:
            writer.writerow([row] + [f"{v:.6f}" for v in table[row]])


def surgeon_match_metrics(log: PredictionLog,
                          surgeon_choices: dict[tuple[str, int], Sequence[ActionClass]]):
    """(top1_match, top1_any_match, top3_inclusion) against surgeon picks.

    ``surgeon_choices`` maps (context_id, t) to an ordered list of up to
    three actions; every log entry must have aligned choices.
    """
    entries = log.ordered()
    if not entries:
        raise EmptyLog("prediction log is empty")
    top1 = top1_any = top3 = 0
    for entry in entries:
        choices = surgeon_choices.get(entry.key)
        if not choices:
            raise AlignmentError(f"no surgeon choices for sample {entry.key}")
        if len(choices) > 3:
            raise AlignmentError(f"more than 3 surgeon choices for {entry.key}")
        preds = [p.action for p in entry.response.predictions[:3]]
        if not preds:
            raise AlignmentError(f"log entry {entry.key} has no predictions")
        surgeon_set = set(choices)
        top1 += preds[0] == choices[0]
        top1_any += preds[0] in surgeon_set
        top3 += bool(surgeon_set & set(preds))
    n = len(entries)
    return top1 / n, top1_any / n, top3 / n
