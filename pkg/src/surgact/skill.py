"""Action barcodes and the two skill factors derived from them.

A barcode tiles a procedure's timeline with non-overlapping action
segments; uncovered spans become explicit ``NonAction`` gaps. Skill
factors: the multiple-attempt count (identical consecutive actions in the
gap-free sequence; a run of length r contributes r-1) and the idle-state
proportion (non-action time over total duration).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

from .taxonomy import ActionClass, parse_action


class OverlapError(ValueError):
    pass


class OutOfRange(ValueError):
    pass


class ZeroDuration(ValueError):
    pass


class MissingColor(KeyError):
    pass


@dataclass
class TimelineSegment:
    action: ActionClass
    start_s: float
    end_s: float

    def __post_init__(self):
        if self.end_s <= self.start_s:
            raise ValueError(f"segment end {self.end_s} must exceed start {self.start_s}")

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


@dataclass
class ActionBarcode:
    """Time-ordered segments tiling [0, total_duration_s]."""

    segments: list[TimelineSegment]
    total_duration_s: float


@dataclass
class SkillReport:
    multiple_attempts: int
    idle_proportion: float
    duration_s: float
    per_action_seconds: dict[ActionClass, float]


def build_barcode(segments: Sequence[TimelineSegment],
                  total_duration_s: float) -> ActionBarcode:
    """Sort, validate, and fill gaps with NonAction segments."""
    if total_duration_s <= 0:
        raise ZeroDuration("total duration must be positive")
    ordered = sorted(segments, key=lambda s: s.start_s)
    filled: list[TimelineSegment] = []
    cursor = 0.0
    for seg in ordered:
        if seg.start_s < 0 or seg.end_s > total_duration_s:
            raise OutOfRange(
                f"segment [{seg.start_s}, {seg.end_s}] outside [0, {total_duration_s}]")
        if seg.start_s < cursor - 1e-9:
            raise OverlapError(f"segment starting at {seg.start_s} overlaps previous")
        if seg.start_s > cursor + 1e-9:
            filled.append(TimelineSegment(ActionClass.NON_ACTION, cursor, seg.start_s))
        filled.append(seg)
        cursor = seg.end_s
    if cursor < total_duration_s - 1e-9:
        filled.append(TimelineSegment(ActionClass.NON_ACTION, cursor, total_duration_s))
    return ActionBarcode(segments=filled, total_duration_s=total_duration_s)


def count_multiple_attempts(barcode: ActionBarcode, rule: str = "repeats") -> int:
    """Count repeated identical actions in the gap-free sequence.

    ``repeats`` (default): a run of r identical actions counts r-1
    attempts. ``runs``: each run longer than one counts once.
    """
    actions = [s.action for s in barcode.segments
               if s.action is not ActionClass.NON_ACTION]
    if rule == "repeats":
        return sum(1 for prev, cur in zip(actions, actions[1:]) if prev == cur)
    if rule == "runs":
        count = 0
        in_run = False
        for prev, cur in zip(actions, actions[1:]):
            if prev == cur:
                if not in_run:
                    count += 1
                    in_run = True
            else:
                in_run = False
        return count
    raise ValueError(f"unknown counting rule {rule!r}")


def idle_proportion(barcode: ActionBarcode) -> float:
    """(total - active time) / total."""
    if barcode.total_duration_s <= 0:
        raise ZeroDuration("total duration must be positive")
    active = sum(s.duration_s for s in barcode.segments
                 if s.action is not ActionClass.NON_ACTION)
    return (barcode.total_duration_s - active) / barcode.total_duration_s


def per_action_seconds(barcode: ActionBarcode) -> dict[ActionClass, float]:
    totals: dict[ActionClass, float] = {}
    for seg in barcode.segments:
        if seg.action is ActionClass.NON_ACTION:
            continue
        totals[seg.action] = totals.get(seg.action, 0.0) + seg.duration_s
    return totals


def skill_report(barcode: ActionBarcode, rule: str = "repeats") -> SkillReport:
    return SkillReport(
        multiple_attempts=count_multiple_attempts(barcode, rule=rule),
        idle_proportion=idle_proportion(barcode),
        duration_s=barcode.total_duration_s,
        per_action_seconds=per_action_seconds(barcode),
    )


#: Default color assignments; NonAction renders as the neutral background.
DEFAULT_PALETTE: dict[ActionClass, str] = {
    ActionClass.ASPIRATION: "#4daf4a",
    ActionClass.CLIPPING: "#e41a1c",
    ActionClass.COAGULATION: "#ff7f00",
    ActionClass.DISSECTION: "#377eb8",
    ActionClass.KNOT_TYING: "#984ea3",
    ActionClass.NEEDLE_GRASPING: "#a65628",
    ActionClass.NEEDLE_PUNCTURE: "#f781bf",
    ActionClass.PACKAGING: "#999999",
    ActionClass.SUTURE_PULLING: "#dede00",
    ActionClass.TISSUE_RETRACTION: "#66c2a5",
    ActionClass.NON_ACTION: "#e8e8e8",
}

_CANVAS_W = 1000.0
_BAR_X = 10.0
_BAR_Y = 20.0
_BAR_H = 60.0
_LEGEND_ROW = 18.0


def render_barcode_svg(barcode: ActionBarcode,
                       palette: dict[ActionClass, str] | None = None) -> str:
    """Standalone SVG: one rect per segment, widths proportional to
    durations; NonAction drawn as neutral background; legend embedded."""
    palette = DEFAULT_PALETTE if palette is None else palette
    actions_present = sorted({s.action for s in barcode.segments}, key=lambda a: a.value)
    for action in actions_present:
        if action not in palette:
            raise MissingColor(f"palette has no color for {action.value}")

    plot_w = _CANVAS_W - 2 * _BAR_X
    legend_actions = [a for a in actions_present if a is not ActionClass.NON_ACTION]
    height = _BAR_Y + _BAR_H + 20 + _LEGEND_ROW * (len(legend_actions) + 1) + 10

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_CANVAS_W:.0f}" '
        f'height="{height:.0f}" viewBox="0 0 {_CANVAS_W:.0f} {height:.0f}">',
        f'<rect x="{_BAR_X}" y="{_BAR_Y}" width="{plot_w:.4f}" height="{_BAR_H}" '
        f'fill="{palette.get(ActionClass.NON_ACTION, "#e8e8e8")}" class="background"/>',
    ]
    for seg in barcode.segments:
        if seg.action is ActionClass.NON_ACTION:
            continue  # gaps show through the background
        x = _BAR_X + seg.start_s / barcode.total_duration_s * plot_w
        w = seg.duration_s / barcode.total_duration_s * plot_w
        parts.append(
            f'<rect x="{x:.4f}" y="{_BAR_Y}" width="{w:.4f}" height="{_BAR_H}" '
            f'fill="{palette[seg.action]}" class="segment" '
            f'data-action="{escape(seg.action.value)}"/>'
        )
    y = _BAR_Y + _BAR_H + 30
    parts.append(f'<text x="{_BAR_X}" y="{y:.1f}" font-size="12">legend:</text>')
    for action in legend_actions + [ActionClass.NON_ACTION]:
        y += _LEGEND_ROW
        label = "idle (non-action)" if action is ActionClass.NON_ACTION else action.value
        parts.append(
            f'<rect x="{_BAR_X}" y="{y - 10:.1f}" width="12" height="12" '
            f'fill="{palette[action]}" class="legend"/>'
        )
        parts.append(
            f'<text x="{_BAR_X + 18:.1f}" y="{y:.1f}" font-size="12">{escape(label)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)


def load_segments(path: str | Path) -> tuple[list[TimelineSegment], float]:
    """Line-delimited segment records (manifest schema, NonAction allowed).

    Returns (segments, total_duration) where the total is the max end
    unless a meta line ``{"total_duration_s": ...}`` provides one.
    """
    segments: list[TimelineSegment] = []
    total = None
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            data = json.loads(line)
            if "total_duration_s" in data and "action" not in data:
                total = float(data["total_duration_s"])
                continue
            segments.append(TimelineSegment(
                action=parse_action(str(data["action"]), allow_non_action=True),
                start_s=float(data["start_s"]),
                end_s=float(data["end_s"]),
            ))
    if total is None:
        total = max((s.end_s for s in segments), default=0.0)
    return segments, total
