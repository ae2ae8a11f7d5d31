"""Clip manifests, the clip-validity protocol, frame sampling, fold splits.

Manifests are stored as line-delimited JSON, one record per line, with an
optional leading meta line ``{"schema_version": ...}``. Timestamps are
seconds with at least millisecond precision.
"""

from __future__ import annotations

import json
import random
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .taxonomy import ActionClass, parse_action

MIN_CLIP_SECONDS = 2.0
MAX_CLIP_SECONDS = 40.0

FRAME_INTERVAL = 4
RETAINED_FRAMES = 16
WINDOW_FRAMES = FRAME_INTERVAL * RETAINED_FRAMES  # 64

SCHEMA_VERSION = 1


class MalformedRecord(ValueError):
    """A clip record with impossible timing or frame rate."""


class ClipTooShort(ValueError):
    """Fewer than two frames at 1 fps; no sampling plan exists."""


class TooFewVideos(ValueError):
    """Not enough distinct videos to populate every fold."""


class ViolationCode(str, Enum):
    DURATION_OUT_OF_RANGE = "DurationOutOfRange"
    TOO_SHORT_ACTION = "TooShortAction"
    ILLEGAL_CO_OCCURRENCE = "IllegalCoOccurrence"


@dataclass
class ClipRecord:
    clip_id: str
    video_id: str
    surgery_type: str
    action: ActionClass
    start_s: float
    end_s: float
    fps_native: float = 25.0
    co_occurring_retraction: bool = False
    source: str = ""

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


@dataclass
class Manifest:
    records: list[ClipRecord] = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION

    def validate(self) -> None:
        """Enforce manifest-level invariants.

        Raises ValueError on duplicate clip ids or a video id mapped to
        more than one surgery type.
        """
        seen_clip: set[str] = set()
        surgery_of: dict[str, str] = {}
        for rec in self.records:
            if rec.clip_id in seen_clip:
                raise ValueError(f"duplicate clip_id: {rec.clip_id}")
            seen_clip.add(rec.clip_id)
            prev = surgery_of.setdefault(rec.video_id, rec.surgery_type)
            if prev != rec.surgery_type:
                raise ValueError(
                    f"video {rec.video_id} mapped to surgery types "
                    f"{prev!r} and {rec.surgery_type!r}"
                )

    def video_ids(self) -> list[str]:
        return sorted({r.video_id for r in self.records})


@dataclass
class FoldAssignment:
    fold_of_video: dict[str, int]
    seed: int

    def fold_of_clip(self, record: ClipRecord) -> int:
        return self.fold_of_video[record.video_id]


@dataclass
class FrameIndexPlan:
    """16 one-based frame indices into the 1 fps stream of a clip."""

    indices: list[int]
    mode: str  # "train" | "infer"


def validate_clip(record: ClipRecord) -> list[ViolationCode]:
    """Check a record against the machine-checkable clip criteria.

    Returns every violated criterion; an empty list means the clip is
    valid. Field centering is a manual review flag and is not checked
    here.

    Raises:
        MalformedRecord: ``end_s <= start_s`` or a non-positive frame rate.
    """
    if record.end_s <= record.start_s:
        raise MalformedRecord(
            f"{record.clip_id}: end_s ({record.end_s}) must exceed start_s ({record.start_s})"
        )
    if record.fps_native <= 0:
        raise MalformedRecord(f"{record.clip_id}: fps_native must be positive")

    violations: list[ViolationCode] = []
    duration = record.duration_s
    if not (MIN_CLIP_SECONDS <= duration <= MAX_CLIP_SECONDS):
        violations.append(ViolationCode.DURATION_OUT_OF_RANGE)
    if duration < MIN_CLIP_SECONDS:
        violations.append(ViolationCode.TOO_SHORT_ACTION)
    if record.co_occurring_retraction and record.action is ActionClass.TISSUE_RETRACTION:
        violations.append(ViolationCode.ILLEGAL_CO_OCCURRENCE)
    return violations


def plan_frame_indices(n_frames_1fps: int, mode: str, seed: int = 0) -> FrameIndexPlan:
    """Pick the 16 stride-4 frame indices for a clip at 1 fps.

    Clips shorter than 64 frames are looped cyclically to a 64-frame
    sequence which is then sampled every 4th frame from position 1. For
    longer clips a 64-frame window is chosen (seeded-random start in
    train mode, centered in infer mode) and stride-4 sampled. Indices are
    one-based positions in the original 1 fps stream.
    """
    if mode not in ("train", "infer"):
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    n = int(n_frames_1fps)
    if n < 2:
        raise ClipTooShort(f"need at least 2 frames at 1 fps, got {n}")

    if n < WINDOW_FRAMES:
        positions = range(1, WINDOW_FRAMES + 1, FRAME_INTERVAL)
        indices = [(pos - 1) % n + 1 for pos in positions]
    else:
        if mode == "train":
            start = random.Random(seed).randint(1, n - WINDOW_FRAMES + 1)
        else:
            start = (n - WINDOW_FRAMES) // 2 + 1
        indices = list(range(start, start + WINDOW_FRAMES, FRAME_INTERVAL))
    return FrameIndexPlan(indices=indices, mode=mode)


def split_folds(manifest: Manifest, k: int = 10, seed: int = 0) -> FoldAssignment:
    """Assign whole videos to k folds: seeded shuffle, then round-robin.

    All clips of a video land in the same fold. No stratification by
    class or surgery type.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    manifest.validate()
    videos = manifest.video_ids()
    if len(videos) < k:
        raise TooFewVideos(f"{len(videos)} videos cannot fill {k} folds")
    rng = random.Random(seed)
    rng.shuffle(videos)
    return FoldAssignment(fold_of_video={v: i % k for i, v in enumerate(videos)}, seed=seed)


def class_histogram(manifest: Manifest) -> dict[tuple[ActionClass, str], int]:
    """Exact clip counts per (action, surgery_type)."""
    return dict(Counter((r.action, r.surgery_type) for r in manifest.records))


def action_totals(histogram: dict[tuple[ActionClass, str], int]) -> dict[ActionClass, int]:
    totals: Counter = Counter()
    for (action, _surgery), count in histogram.items():
        totals[action] += count
    return dict(totals)


# ---------------------------------------------------------------------------
# serialization


def record_to_dict(record: ClipRecord) -> dict:
    return {
        "clip_id": record.clip_id,
        "video_id": record.video_id,
        "surgery_type": record.surgery_type,
        "action": record.action.value,
        "start_s": record.start_s,
        "end_s": record.end_s,
        "fps_native": record.fps_native,
        "co_occurring_retraction": record.co_occurring_retraction,
        "source": record.source,
    }


def record_from_dict(data: dict, allow_non_action: bool = False) -> ClipRecord:
    return ClipRecord(
        clip_id=str(data["clip_id"]),
        video_id=str(data["video_id"]),
        surgery_type=str(data["surgery_type"]),
        action=parse_action(str(data["action"]), allow_non_action=allow_non_action),
        start_s=float(data["start_s"]),
        end_s=float(data["end_s"]),
        fps_native=float(data.get("fps_native", 25.0)),
        co_occurring_retraction=bool(data.get("co_occurring_retraction", False)),
        source=str(data.get("source", "")),
    )


def save_manifest(manifest: Manifest, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"schema_version": manifest.schema_version}) + "\n")
        for rec in manifest.records:
            fh.write(json.dumps(record_to_dict(rec)) + "\n")


def load_manifest(path: str | Path, allow_non_action: bool = False) -> Manifest:
    records: list[ClipRecord] = []
    schema_version = SCHEMA_VERSION
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            data = json.loads(line)
            if "clip_id" not in data:
                schema_version = int(data.get("schema_version", SCHEMA_VERSION))
                continue
            records.append(record_from_dict(data, allow_non_action=allow_non_action))
    manifest = Manifest(records=records, schema_version=schema_version)
    manifest.validate()
    return manifest


def save_folds(assignment: FoldAssignment, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"seed": assignment.seed, "folds": assignment.fold_of_video}, fh, indent=2)
        fh.write("\n")


def load_folds(path: str | Path) -> FoldAssignment:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return FoldAssignment(
        fold_of_video={str(k): int(v) for k, v in data["folds"].items()},
        seed=int(data["seed"]),
    )
