"""Deterministic prompt assembly for the planning agent.

The system prompt carries the per-procedure knowledge base (surgical
process, safety protocol, action descriptions). The user turn lists the
distant history as text, attaches K uniformly sampled frames of the near
clip plus the current frame, issues the five standing queries, and pins
the machine-parseable output schema. Identical inputs produce
byte-identical bundles.
"""

from __future__ import annotations

import base64
import hashlib
import struct
import zlib
from dataclasses import dataclass, field
from typing import Callable

from ..taxonomy import TRAINABLE_ACTIONS, ActionClass
from .samples import PlanningSample


class UnknownProcedure(KeyError):
    pass


@dataclass
class ProcedureKnowledge:
    surgical_process: str
    safety_protocol: str
    action_descriptions: str


_ACTION_NOTES = "\n".join(
    f"- {a.value}: {desc}" for a, desc in [
        (ActionClass.ASPIRATION, "suctioning fluid or debris to keep the field clear"),
        (ActionClass.CLIPPING, "applying clips to occlude a vessel or duct"),
        (ActionClass.COAGULATION, "delivering energy to stop bleeding and seal tissue"),
        (ActionClass.DISSECTION, "separating tissue planes to expose target anatomy"),
        (ActionClass.KNOT_TYING, "looping and securing suture material"),
        (ActionClass.NEEDLE_GRASPING, "moving to and seizing the needle with the instrument"),
        (ActionClass.NEEDLE_PUNCTURE, "driving the needle through tissue at the chosen angle"),
        (ActionClass.PACKAGING, "bagging tissue or material to avoid contamination"),
        (ActionClass.SUTURE_PULLING, "drawing the suture through after needle passage"),
        (ActionClass.TISSUE_RETRACTION, "holding tissue aside for exposure and access"),
    ]
)

DEFAULT_KNOWLEDGE_BASE: dict[str, ProcedureKnowledge] = {
    "cholecystectomy": ProcedureKnowledge(
        surgical_process=(
            "Expose the hepatocystic triangle, clear it of fat and fibrous "
            "tissue until the cystic duct and cystic artery are seen entering "
            "the gallbladder, then occlude and divide them before freeing the "
            "gallbladder from its liver bed and bagging it for extraction."),
        safety_protocol=(
            "Do not clip or divide any structure until the target anatomy is "
            "conclusively identified; keep traction gentle, control bleeding "
            "promptly, and prefer further exposure over early division when "
            "the view is uncertain."),
        action_descriptions=_ACTION_NOTES,
    ),
    "nephrectomy": ProcedureKnowledge(
        surgical_process=(
            "After resection of the renal lesion, close the cortical defect "
            "by cycling needle grasping, needle puncture through the renal "
            "capsule, and suture pulling until the parenchyma is approximated."),
        safety_protocol=(
            "Protect residual renal tissue: avoid repeated punctures at one "
            "site, keep suture tension even to prevent tearing, and watch "
            "for bleeding between passes."),
        action_descriptions=_ACTION_NOTES,
    ),
    "gastrectomy": ProcedureKnowledge(
        surgical_process=(
            "Mobilize the stomach by dissecting along the greater and lesser "
            "curvatures, control feeding vessels, and prepare the resection "
            "margins."),
        safety_protocol=(
            "Identify vascular pedicles before energy use and keep adjacent "
            "organs protected during retraction."),
        action_descriptions=_ACTION_NOTES,
    ),
    "hysterectomy": ProcedureKnowledge(
        surgical_process=(
            "Develop pelvic exposure, secure the uterine vessels, and free "
            "the uterus progressively from its attachments."),
        safety_protocol=(
            "Confirm the course of the ureters before any clipping or energy "
            "application near the pedicles."),
        action_descriptions=_ACTION_NOTES,
    ),
    "prostatectomy": ProcedureKnowledge(
        surgical_process=(
            "Expose the prostate, control the dorsal vascular complex with "
            "sutures, divide the urethra, and reconstruct with anastomotic "
            "suturing: grasp the needle, drive it through tissue, and pull "
            "the suture to approximate."),
        safety_protocol=(
            "Maintain hemostasis around the vascular complex and avoid "
            "traction injury to the sphincter during suturing."),
        action_descriptions=_ACTION_NOTES,
    ),
    "intestinal_resection": ProcedureKnowledge(
        surgical_process=(
            "Mobilize the bowel segment, divide its mesentery with energy, "
            "resect, and restore continuity."),
        safety_protocol=(
            "Preserve perfusion of the remaining bowel and verify hemostasis "
            "of mesenteric vessels before closing."),
        action_descriptions=_ACTION_NOTES,
    ),
}

USER_QUERIES: tuple[str, ...] = (
    "Summarize the scene understanding.",
    "Summarize the progress judgment.",
    "List the safety considerations.",
    "What should be the next action?",
    "Name the other two most plausible next actions.",
)

RESPONSE_FORMAT_INSTRUCTION = (
    "Answer with a single JSON object having exactly these fields: "
    '"scene_understanding" (string), "progress_judgment" (string), '
    '"safety_considerations" (string), and "predictions" (array of 1 to 3 '
    'objects, each {"action": <one of: ' +
    ", ".join(a.value for a in TRAINABLE_ACTIONS) +
    '>, "rationale": string}), ordered from most to least likely.'
)


@dataclass
class PromptBundle:
    system_prompt: str
    user_text: str
    queries: tuple[str, ...]
    attachments: list[tuple[str, str]] = field(default_factory=list)  # (label, b64 png)

    def to_messages(self) -> list[dict]:
        content: list[dict] = [{"type": "text", "text": self.user_text}]
        for label, data in self.attachments:
            content.append({"type": "image", "label": label, "data_b64": data})
        return [
            {"role": "system", "content": self.system_prompt},
            {"role": "user", "content": content},
        ]


def _png_bytes(rgb: tuple[int, int, int], size: int = 8) -> bytes:
    """Minimal valid RGB PNG of one solid color (stdlib only)."""
    def chunk(tag: bytes, data: bytes) -> bytes:
        body = tag + data
        return struct.pack(">I", len(data)) + body + struct.pack(">I", zlib.crc32(body))

    header = struct.pack(">IIBBBBB", size, size, 8, 2, 0, 0, 0)
    raw = (b"\x00" + bytes(rgb) * size) * size
    return (b"\x89PNG\r\n\x1a\n" + chunk(b"IHDR", header)
            + chunk(b"IDAT", zlib.compress(raw)) + chunk(b"IEND", b""))


def synthetic_frame_provider(frame_ref: str) -> bytes:
    """Deterministic placeholder frame derived from the reference string."""
    digest = hashlib.sha256(frame_ref.encode("utf-8")).digest()
    return _png_bytes((digest[0], digest[1], digest[2]))


def assemble_prompts(sample: PlanningSample,
                     knowledge_base: dict[str, ProcedureKnowledge] | None = None,
                     k_frames: int = 4,
                     frame_provider: Callable[[str], bytes] = synthetic_frame_provider,
                     ) -> PromptBundle:
    """Build the full prompt bundle for one planning sample."""
    kb = DEFAULT_KNOWLEDGE_BASE if knowledge_base is None else knowledge_base
    if sample.surgery_type not in kb:
        raise UnknownProcedure(f"no knowledge base entry for {sample.surgery_type!r}")
    know = kb[sample.surgery_type]

    system_prompt = (
        f"You are a surgical assistant specializing in {sample.surgery_type}.\n\n"
        f"Surgical process:\n{know.surgical_process}\n\n"
        f"Safety protocol:\n{know.safety_protocol}\n\n"
        f"Action descriptions:\n{know.action_descriptions}"
    )

    distant_text = ", ".join(a.value for a in sample.distant)
    lines = [
        f"Recognized distant history (oldest first): {distant_text}.",
        f"Most recent clip: recognized action {sample.near_action.value}; "
        f"{k_frames} frames of this clip are attached, labeled "
        f"'{sample.near_action.value}'.",
        "The current observation frame is attached last.",
        "",
    ]
    lines += [f"{i + 1}. {q}" for i, q in enumerate(USER_QUERIES)]
    lines += ["", RESPONSE_FORMAT_INSTRUCTION]

    attachments = []
    for i in range(k_frames):
        ref = f"{sample.near_clip_id}#frame{i + 1}of{k_frames}"
        attachments.append((
            f"{sample.near_action.value} (frame {i + 1}/{k_frames})",
            base64.b64encode(frame_provider(ref)).decode("ascii"),
        ))
    attachments.append((
        "current observation",
        base64.b64encode(frame_provider(sample.current_frame)).decode("ascii"),
    ))
    return PromptBundle(
        system_prompt=system_prompt,
        user_text="\n".join(lines),
        queries=USER_QUERIES,
        attachments=attachments,
    )
