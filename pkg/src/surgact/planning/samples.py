"""Sliding-window construction of one-moment planning samples.

A context is a recognized clip-action sequence from one procedure. Each
sample carries a five-clip history window (four distant actions plus the
near clip-action pair), the current frame reference, and the next one or
two ground-truth actions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from ..taxonomy import ActionClass, parse_action

WINDOW = 5


@dataclass(frozen=True)
class ClipEntry:
    clip_id: str
    action: ActionClass


@dataclass
class ContextSequence:
    context_id: str
    surgery_type: str
    clips: list[ClipEntry]

    def __post_init__(self):
        if len(self.clips) < 1:
            raise ValueError("a context needs at least one clip")

    @property
    def n(self) -> int:
        return len(self.clips)


@dataclass(frozen=True)
class PlanningSample:
    context_id: str
    surgery_type: str
    t: int  # one-based position of the near clip within the context
    distant: tuple[ActionClass, ...]  # a_{t-4} .. a_{t-1}
    near_clip_id: str
    near_action: ActionClass
    current_frame: str
    ground_truth_next: ActionClass
    ground_truth_next2: ActionClass | None

    @property
    def ref(self) -> str:
        return f"{self.context_id}/{self.t}"


def make_samples(context: ContextSequence, window: int = WINDOW) -> list[PlanningSample]:
    """Exactly max(0, n - window) samples, shifting one clip at a time."""
    samples: list[PlanningSample] = []
    clips = context.clips
    for j in range(max(0, context.n - window)):
        hist = clips[j:j + window]
        near = hist[-1]
        nxt = clips[j + window]
        nxt2 = clips[j + window + 1] if j + window + 1 < context.n else None
        samples.append(PlanningSample(
            context_id=context.context_id,
            surgery_type=context.surgery_type,
            t=j + window,
            distant=tuple(c.action for c in hist[:-1]),
            near_clip_id=near.clip_id,
            near_action=near.action,
            current_frame=f"{near.clip_id}#last",
            ground_truth_next=nxt.action,
            ground_truth_next2=nxt2.action if nxt2 else None,
        ))
    return samples


def save_contexts(contexts: list[ContextSequence], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ctx in contexts:
            fh.write(json.dumps({
                "context_id": ctx.context_id,
                "surgery_type": ctx.surgery_type,
                "clips": [{"clip_id": c.clip_id, "action": c.action.value}
                          for c in ctx.clips],
            }) + "\n")


def load_contexts(path: str | Path) -> list[ContextSequence]:
    contexts = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            data = json.loads(line)
            contexts.append(ContextSequence(
                context_id=str(data["context_id"]),
                surgery_type=str(data["surgery_type"]),
                clips=[ClipEntry(str(c["clip_id"]), parse_action(str(c["action"])))
                       for c in data["clips"]],
            ))
    return contexts
