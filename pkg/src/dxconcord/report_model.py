"""Diagnoses, reports, cases, and the replayable physician correction log."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from enum import Enum

from .errors import (
    ActionError,
    ConcordanceWarning,
    DuplicateAdd,
    EmptyPrimary,
    InvariantError,
    UnknownTarget,
)
from .similarity import normalize_label

log = logging.getLogger(__name__)

MAX_DIFFERENTIALS = 10
EXPECTED_AI_DIFFERENTIALS = 3


class Source(str, Enum):
    AI_SNAPSHOT = "ai_snapshot"
    PHYSICIAN_FINAL = "physician_final"


class ActionKind(str, Enum):
    VALIDATE = "validate"
    REMOVE = "remove"
    ADD = "add"
    REFINE = "refine"


class Slot(str, Enum):
    PRIMARY = "primary"
    DIFFERENTIAL = "differential"


def _warn(message: str) -> None:
    log.warning(message)
    warnings.warn(message, ConcordanceWarning, stacklevel=3)


@dataclass(frozen=True)
class Diagnosis:
    raw: str
    label: str

    @classmethod
    def from_raw(cls, raw: str) -> "Diagnosis":
        return cls(raw=raw, label=normalize_label(raw))

    def __post_init__(self):
        if self.label != normalize_label(self.label):
            raise InvariantError(f"label {self.label!r} is not normalized")


@dataclass(frozen=True)
class DiagnosticReport:
    primary: Diagnosis
    differentials: tuple[Diagnosis, ...] = ()
    source: Source = Source.AI_SNAPSHOT

    def __post_init__(self):
        object.__setattr__(self, "differentials", tuple(self.differentials))
        object.__setattr__(self, "source", Source(self.source))
        labels = [d.label for d in self.differentials]
        if len(set(labels)) != len(labels):
            raise InvariantError(f"duplicate differential labels in {labels}")
        if self.primary.label in labels:
            raise InvariantError(f"primary {self.primary.label!r} also listed as a differential")
        if len(labels) > MAX_DIFFERENTIALS:
            raise InvariantError(f"{len(labels)} differentials exceeds the limit of {MAX_DIFFERENTIALS}")

    @classmethod
    def from_raw(cls, primary: str, differentials=(), source=Source.AI_SNAPSHOT) -> "DiagnosticReport":
        """Build a report from raw strings, collapsing normalized duplicates with a warning."""
        prim = Diagnosis.from_raw(primary)
        kept: list[Diagnosis] = []
        seen: set[str] = set()
        for raw in differentials:
            d = Diagnosis.from_raw(raw)
            if d.label in seen:
                _warn(f"differential {raw!r} duplicates {d.label!r} after normalization; collapsed")
                continue
            seen.add(d.label)
            kept.append(d)
        report = cls(prim, tuple(kept), Source(source))
        if report.source is Source.AI_SNAPSHOT and len(kept) != EXPECTED_AI_DIFFERENTIALS:
            _warn(f"AI snapshot for {prim.label!r} has {len(kept)} differentials, expected {EXPECTED_AI_DIFFERENTIALS}")
        return report

    @property
    def differential_labels(self) -> tuple[str, ...]:
        return tuple(d.label for d in self.differentials)

    def labels_equal(self, other: "DiagnosticReport") -> bool:
        """Label-level equality: same primary and same differential set (order ignored)."""
        return self.primary.label == other.primary.label and set(self.differential_labels) == set(
            other.differential_labels
        )

    def to_dict(self) -> dict:
        return {"primary": self.primary.raw, "differentials": [d.raw for d in self.differentials]}


@dataclass(frozen=True)
class ValidationAction:
    kind: ActionKind
    slot: Slot = Slot.DIFFERENTIAL
    target_label: str | None = None
    value: Diagnosis | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ActionKind(self.kind))
        object.__setattr__(self, "slot", Slot(self.slot))
        if self.target_label is not None:
            object.__setattr__(self, "target_label", normalize_label(self.target_label))
        if self.kind in (ActionKind.REMOVE, ActionKind.REFINE) and self.target_label is None:
            raise ActionError(f"{self.kind.value} requires target_label")
        if self.kind in (ActionKind.ADD, ActionKind.REFINE) and self.value is None:
            raise ActionError(f"{self.kind.value} requires value")

    @classmethod
    def from_dict(cls, d: dict) -> "ValidationAction":
        value = d.get("value")
        return cls(
            kind=d["kind"],
            slot=d.get("slot", "differential"),
            target_label=d.get("target_label"),
            value=None if value is None else Diagnosis.from_raw(value),
        )

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value, "slot": self.slot.value}
        if self.target_label is not None:
            out["target_label"] = self.target_label
        if self.value is not None:
            out["value"] = self.value.raw
        return out


# Shorthand constructors used by synthesis and tests.
def validate() -> ValidationAction:
    return ValidationAction(ActionKind.VALIDATE, Slot.PRIMARY)


def remove(target: str, slot=Slot.DIFFERENTIAL) -> ValidationAction:
    return ValidationAction(ActionKind.REMOVE, slot, target_label=target)


def add(value: str, slot=Slot.DIFFERENTIAL) -> ValidationAction:
    return ValidationAction(ActionKind.ADD, slot, value=Diagnosis.from_raw(value))


def refine(target: str, value: str, slot=Slot.DIFFERENTIAL) -> ValidationAction:
    return ValidationAction(ActionKind.REFINE, slot, target_label=target, value=Diagnosis.from_raw(value))


@dataclass(frozen=True)
class CaseRecord:
    case_id: str
    physician_id: str
    r0: DiagnosticReport
    r1: DiagnosticReport
    actions: tuple[ValidationAction, ...] | None = None
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.actions is not None:
            object.__setattr__(self, "actions", tuple(self.actions))
        if self.r0.source is not Source.AI_SNAPSHOT:
            raise InvariantError(f"case {self.case_id}: r0 must be an ai_snapshot report")
        if self.r1.source is not Source.PHYSICIAN_FINAL:
            raise InvariantError(f"case {self.case_id}: r1 must be a physician_final report")

    def replay(self) -> DiagnosticReport:
        return apply_actions(self.r0, self.actions or ())

    def replay_consistent(self) -> bool:
        return self.actions is None or self.replay().labels_equal(self.r1)


@dataclass(frozen=True)
class DiffDecomposition:
    additions: frozenset
    removals: frozenset
    unchanged: frozenset


def consideration_set(report: DiagnosticReport) -> frozenset:
    return frozenset((report.primary.label, *report.differential_labels))


def apply_actions(r0: DiagnosticReport, actions) -> DiagnosticReport:
    """Replay a correction log on ``r0`` in list order and return the resulting report.

    ``r0`` is never modified. The primary slot may be emptied mid-sequence
    (remove then add), but must be filled when the sequence ends.
    """
    primary: Diagnosis | None = r0.primary
    diffs: list[Diagnosis] = list(r0.differentials)

    for n, act in enumerate(actions):
        where = f"action {n} ({act.kind.value} {act.slot.value})"
        if act.kind is ActionKind.VALIDATE:
            if act.target_label is not None:
                present = (primary is not None and primary.label == act.target_label) if act.slot is Slot.PRIMARY else any(
                    d.label == act.target_label for d in diffs
                )
                if not present:
                    raise UnknownTarget(f"{where}: {act.target_label!r} not present")
            continue

        if act.slot is Slot.PRIMARY:
            if act.kind is ActionKind.ADD:
                if primary is not None:
                    if primary.label == act.value.label:
                        raise DuplicateAdd(f"{where}: {act.value.label!r} is already the primary")
                    raise ActionError(f"{where}: primary slot already occupied by {primary.label!r}")
                primary = act.value
            else:
                if primary is None or primary.label != act.target_label:
                    raise UnknownTarget(f"{where}: primary is not {act.target_label!r}")
                primary = act.value if act.kind is ActionKind.REFINE else None
            continue

        idx = next((i for i, d in enumerate(diffs) if d.label == act.target_label), None)
        if act.kind is ActionKind.ADD:
            if any(d.label == act.value.label for d in diffs):
                raise DuplicateAdd(f"{where}: {act.value.label!r} already a differential")
            diffs.append(act.value)
        elif idx is None:
            raise UnknownTarget(f"{where}: {act.target_label!r} not among differentials")
        elif act.kind is ActionKind.REMOVE:
            del diffs[idx]
        else:
            if act.value.label != act.target_label and any(d.label == act.value.label for d in diffs):
                raise DuplicateAdd(f"{where}: {act.value.label!r} already a differential")
            diffs[idx] = act.value

    if primary is None:
        raise EmptyPrimary("action sequence leaves the report without a primary diagnosis")
    return DiagnosticReport(primary, tuple(diffs), Source.PHYSICIAN_FINAL)


def diff_reports(r0: DiagnosticReport, r1: DiagnosticReport) -> DiffDecomposition:
    d0 = set(r0.differential_labels)
    d1 = set(r1.differential_labels)
    return DiffDecomposition(
        additions=frozenset(d1 - d0),
        removals=frozenset(d0 - d1),
        unchanged=frozenset(d0 & d1),
    )
