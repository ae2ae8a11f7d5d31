"""Prediction logs: one scored entry per (context_id, t), plus run metadata."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..taxonomy import parse_action
from .client import AgentResponse, Prediction
from .samples import PlanningSample


class EmptyLog(ValueError):
    pass


@dataclass
class LogEntry:
    sample: PlanningSample
    response: AgentResponse
    transcript: list = field(default_factory=list)

    @property
    def key(self) -> tuple[str, int]:
        return (self.sample.context_id, self.sample.t)


@dataclass
class PredictionLog:
    metadata: dict = field(default_factory=dict)
    entries: dict[tuple[str, int], LogEntry] = field(default_factory=dict)

    def add(self, entry: LogEntry) -> None:
        if entry.key in self.entries:
            raise ValueError(f"duplicate log entry for {entry.key}")
        self.entries[entry.key] = entry

    def ordered(self) -> list[LogEntry]:
        return [self.entries[k] for k in sorted(self.entries)]

    def by_context(self) -> dict[str, list[LogEntry]]:
        grouped: dict[str, list[LogEntry]] = {}
        for entry in self.ordered():
            grouped.setdefault(entry.sample.context_id, []).append(entry)
        return grouped

    def __len__(self) -> int:
        return len(self.entries)


def save_log(log: PredictionLog, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"metadata": log.metadata}) + "\n")
        for entry in log.ordered():
            s = entry.sample
            fh.write(json.dumps({
                "context_id": s.context_id,
                "surgery_type": s.surgery_type,
                "t": s.t,
                "distant": [a.value for a in s.distant],
                "near_clip_id": s.near_clip_id,
                "near_action": s.near_action.value,
                "current_frame": s.current_frame,
                "ground_truth_next": s.ground_truth_next.value,
                "ground_truth_next2": s.ground_truth_next2.value
                if s.ground_truth_next2 else None,
                "response": {
                    "scene_understanding": entry.response.scene_understanding,
                    "progress_judgment": entry.response.progress_judgment,
                    "safety_considerations": entry.response.safety_considerations,
                    "predictions": [{"action": p.action.value, "rationale": p.rationale}
                                    for p in entry.response.predictions],
                },
                "transcript": entry.transcript,
            }) + "\n")


def load_log(path: str | Path) -> PredictionLog:
    log = PredictionLog()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            data = json.loads(line)
            if "metadata" in data and "context_id" not in data:
                log.metadata = data["metadata"]
                continue
            sample = PlanningSample(
                context_id=str(data["context_id"]),
                surgery_type=str(data.get("surgery_type", "")),
                t=int(data["t"]),
                distant=tuple(parse_action(a) for a in data["distant"]),
                near_clip_id=str(data["near_clip_id"]),
                near_action=parse_action(str(data["near_action"])),
                current_frame=str(data["current_frame"]),
                ground_truth_next=parse_action(str(data["ground_truth_next"])),
                ground_truth_next2=parse_action(str(data["ground_truth_next2"]))
                if data.get("ground_truth_next2") else None,
            )
            resp = data["response"]
            response = AgentResponse(
                scene_understanding=str(resp.get("scene_understanding", "")),
                progress_judgment=str(resp.get("progress_judgment", "")),
                safety_considerations=str(resp.get("safety_considerations", "")),
                predictions=[Prediction(parse_action(str(p["action"])),
                                        str(p.get("rationale", "")))
                             for p in resp["predictions"]],
            )
            log.add(LogEntry(sample=sample, response=response,
                             transcript=data.get("transcript", [])))
    return log
