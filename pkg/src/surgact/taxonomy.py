"""Closed taxonomy of basic surgical actions and surgery types.

The ten trainable actions are the classifier's label space. ``NonAction``
is a sentinel for idle timeline gaps in skill analysis and never appears
as a classifier target.
"""

from __future__ import annotations

from enum import Enum


class UnknownAction(ValueError):
    """An action name that cannot be resolved against the taxonomy."""


class ActionClass(str, Enum):
    ASPIRATION = "Aspiration"
    CLIPPING = "Clipping"
    COAGULATION = "Coagulation"
    DISSECTION = "Dissection"
    KNOT_TYING = "KnotTying"
    NEEDLE_GRASPING = "NeedleGrasping"
    NEEDLE_PUNCTURE = "NeedlePuncture"
    PACKAGING = "Packaging"
    SUTURE_PULLING = "SuturePulling"
    TISSUE_RETRACTION = "TissueRetraction"
    NON_ACTION = "NonAction"

    def __str__(self) -> str:  # serialize as the canonical name
        return self.value


#: The ten trainable classes in fixed alphabetical order. This order also
#: defines the integer coding used for label vectors and score matrices.
TRAINABLE_ACTIONS: tuple[ActionClass, ...] = tuple(
    a for a in ActionClass if a is not ActionClass.NON_ACTION
)

N_CLASSES = len(TRAINABLE_ACTIONS)

#: Fixed integer coding: alphabetical over the ten trainable classes,
#: with NonAction appended last (index 10).
ACTION_INDEX: dict[ActionClass, int] = {a: i for i, a in enumerate(TRAINABLE_ACTIONS)}
ACTION_INDEX[ActionClass.NON_ACTION] = N_CLASSES

SURGERY_TYPES: tuple[str, ...] = (
    "cholecystectomy",
    "gastrectomy",
    "hysterectomy",
    "intestinal_resection",
    "nephrectomy",
    "prostatectomy",
)


def _normalize(name: str) -> str:
    return " ".join(name.replace("-", " ").replace("_", " ").lower().split())


#: Frozen synonym table for parsing free-text action names. Unknown
#: synonyms fail loudly; there is no fuzzy matching. Stapling is a distinct
#: maneuver and deliberately has no entry (it must never map to Clipping).
SYNONYMS: dict[str, ActionClass] = {
    "vessel clipping": ActionClass.CLIPPING,
    "knot tying": ActionClass.KNOT_TYING,
    "suturing pulling": ActionClass.SUTURE_PULLING,
    "idle": ActionClass.NON_ACTION,
    "non action": ActionClass.NON_ACTION,
}

_LOOKUP: dict[str, ActionClass] = {_normalize(a.value): a for a in ActionClass}
_LOOKUP.update({_normalize(k): v for k, v in SYNONYMS.items()})


def parse_action(name: str, allow_non_action: bool = False) -> ActionClass:
    """Resolve a free-text action name against the taxonomy.

    Matching is case-insensitive and ignores hyphen/underscore/space
    differences, plus the frozen ``SYNONYMS`` table.

    Raises:
        UnknownAction: the name resolves to nothing, or to ``NonAction``
            when ``allow_non_action`` is false.
    """
    action = _LOOKUP.get(_normalize(name))
    if action is None:
        raise UnknownAction(f"unknown action name: {name!r}")
    if action is ActionClass.NON_ACTION and not allow_non_action:
        raise UnknownAction("NonAction is not a valid action here")
    return action


def action_of_index(index: int) -> ActionClass:
    """Inverse of the fixed integer coding (trainable classes only)."""
    return TRAINABLE_ACTIONS[index]
