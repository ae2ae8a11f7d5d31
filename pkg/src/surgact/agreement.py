"""Two-rater agreement statistics on categorical label vectors.

Implements observed agreement, Cohen's kappa, the Pearson correlation on
integer-coded labels (fixed alphabetical coding from the taxonomy), and
Gwet's AC1 with pooled category prevalence. Band interpretation follows
the Landis-Koch benchmarks, applied to kappa rounded half-to-even at two
decimal places so that every value falls in exactly one band.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .taxonomy import ACTION_INDEX, ActionClass, parse_action


class DegenerateMarginals(ValueError):
    """Chance agreement is 1; kappa is undefined."""


class ZeroVariance(ValueError):
    """A coded label vector is constant; correlation is undefined."""


class DegeneratePe(ValueError):
    """AC1 chance agreement is 1; the coefficient is undefined."""


@dataclass
class RatingPair:
    """Aligned label pairs (rater A, rater B) for the same items."""

    items: list[tuple]

    def __post_init__(self):
        if len(self.items) < 1:
            raise ValueError("rating pair needs at least one item")

    @property
    def n(self) -> int:
        return len(self.items)

    def column(self, which: int) -> list:
        return [item[which] for item in self.items]


def observed_agreement(pair: RatingPair) -> float:
    """Fraction of items where both raters chose the same label."""
    agree = sum(1 for a, b in pair.items if a == b)
    return agree / pair.n


def cohen_kappa(pair: RatingPair) -> float:
    """kappa = (P_o - P_e) / (1 - P_e), P_e from the raters' marginals."""
    p_o = observed_agreement(pair)
    n = pair.n
    marg_a = Counter(pair.column(0))
    marg_b = Counter(pair.column(1))
    p_e = sum(marg_a[c] / n * marg_b[c] / n for c in set(marg_a) | set(marg_b))
    if abs(1.0 - p_e) < 1e-15:
        raise DegenerateMarginals("expected agreement is 1; kappa undefined")
    return (p_o - p_e) / (1.0 - p_e)


def _code(labels: Sequence, coding: dict | None) -> np.ndarray:
    if coding is None:
        coding = ACTION_INDEX
    return np.array([coding[lab] if not isinstance(lab, (int, np.integer)) else int(lab)
                     for lab in labels], dtype=np.float64)


def pearson_corr(pair: RatingPair, coding: dict | None = None) -> float:
    """Product-moment correlation on integer-coded labels."""
    x = _code(pair.column(0), coding)
    y = _code(pair.column(1), coding)
    dx = x - x.mean()
    dy = y - y.mean()
    sx = np.sqrt((dx * dx).sum())
    sy = np.sqrt((dy * dy).sum())
    if sx == 0.0 or sy == 0.0:
        raise ZeroVariance("a coded label vector has zero variance")
    return float((dx * dy).sum() / (sx * sy))


def gwet_ac1(pair: RatingPair, canonical: bool = False,
             categories: Sequence | None = None) -> float:
    """AC1 = (P_o - P_e) / (1 - P_e) with P_e = sum_j pi_j (1 - pi_j).

    pi_j is the category prevalence pooled over both raters. With
    ``canonical=True`` the chance term carries the standard 1/(k-1)
    factor over k categories (identical to the default when k = 2).
    """
    p_o = observed_agreement(pair)
    n = pair.n
    pooled = Counter(pair.column(0)) + Counter(pair.column(1))
    cats = list(categories) if categories is not None else sorted(pooled, key=str)
    k = len(cats)
    pi = np.array([pooled[c] / (2 * n) for c in cats])
    p_e = float((pi * (1.0 - pi)).sum())
    if canonical:
        if k < 2:
            raise DegeneratePe("canonical AC1 needs at least two categories")
        p_e /= (k - 1)
    if abs(1.0 - p_e) < 1e-15:
        raise DegeneratePe("AC1 chance agreement is 1; coefficient undefined")
    return (p_o - p_e) / (1.0 - p_e)


def interpret_kappa(kappa: float) -> str:
    """Band label for a kappa value (rounded half-to-even at 2 dp)."""
    if not np.isfinite(kappa):
        raise ValueError("kappa must be finite")
    cents = int(round(round(float(kappa), 2) * 100))
    if cents < 0:
        return "poor"
    if cents <= 20:
        return "slight"
    if cents <= 40:
        return "fair"
    if cents <= 60:
        return "moderate"
    if cents <= 80:
        return "substantial"
    return "almost perfect"


def agreement_report(pair: RatingPair) -> str:
    """Structured text block with every coefficient and its band."""
    p_o = observed_agreement(pair)
    kappa = cohen_kappa(pair)
    r = pearson_corr(pair)
    ac1 = gwet_ac1(pair)
    ac1_canon = gwet_ac1(pair, canonical=True)
    lines = [
        f"items: {pair.n}",
        f"observed_agreement: {p_o:.4f}",
        f"cohen_kappa: {kappa:.4f}",
        f"kappa_band: {interpret_kappa(kappa)}",
        f"pearson_r: {r:.4f}",
        f"gwet_ac1: {ac1:.4f}",
        f"gwet_ac1_canonical: {ac1_canon:.4f}",
        f"ac1_band: {interpret_kappa(ac1)}",
    ]
    return "\n".join(lines)


def load_rating_pairs(path: str | Path) -> RatingPair:
    """CSV with header clip_id,rater_a,rater_b (actions by name)."""
    items: list[tuple[ActionClass, ActionClass]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            items.append((
                parse_action(row["rater_a"], allow_non_action=True),
                parse_action(row["rater_b"], allow_non_action=True),
            ))
    return RatingPair(items=items)


def save_rating_pairs(pair: RatingPair, path: str | Path,
                      clip_ids: Sequence[str] | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["clip_id", "rater_a", "rater_b"])
        for i, (a, b) in enumerate(pair.items):
            cid = clip_ids[i] if clip_ids else f"clip_{i:06d}"
            writer.writerow([cid, str(a), str(b)])
