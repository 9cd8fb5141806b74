"""Case-file IO and the append-only, hash-chained snapshot ledger.

Ledger format: one canonical-JSON object per line with the fields ``seq``,
``record_kind``, ``case_id``, ``payload``, ``content_hash`` and ``prev_hash``.
``payload`` is itself a canonical-JSON string that repeats the record's
``case_id`` and ``record_kind``; ``content_hash`` is its SHA-256 hex digest, and ``prev_hash`` is SHA-256 over the previous record's
``content_hash + prev_hash`` (64 zeros for the first record).

The ledger keeps raw, pre-normalization diagnosis strings so the stored
snapshot is exactly what the model emitted.
"""

from __future__ import annotations

import fcntl
import hashlib
import json
import os
import unicodedata
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

from .errors import (
    ActionError,
    ChainBroken,
    CorruptRecord,
    DuplicateSnapshot,
    InvariantError,
    OrderViolation,
    ReplayMismatch,
    SchemaError,
)
from .report_model import CaseRecord, DiagnosticReport, Source, ValidationAction

GENESIS_HASH = "0" * 64
SNAPSHOT_R0 = "snapshot_r0"
ACTION_LOG = "action_log"
FINAL_R1 = "final_r1"
RECORD_KINDS = (SNAPSHOT_R0, ACTION_LOG, FINAL_R1)
RECORD_FIELDS = ("case_id", "content_hash", "payload", "prev_hash", "record_kind", "seq")


# ---------------------------------------------------------------------------
# canonical JSON
# ---------------------------------------------------------------------------


def _nfc(obj):
    if isinstance(obj, str):
        return unicodedata.normalize("NFC", obj)
    if isinstance(obj, dict):
        return {_nfc(k): _nfc(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_nfc(v) for v in obj]
    if isinstance(obj, float):
        raise TypeError("floats are not allowed in canonical payloads")
    return obj


def canonical_json(obj) -> str:
    """Sorted keys, NFC strings, no insignificant whitespace, no floats."""
    return json.dumps(_nfc(obj), sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def sha256_hex(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def chain_hash(content_hash: str, prev_hash: str) -> str:
    return sha256_hex(content_hash + prev_hash)


# ---------------------------------------------------------------------------
# case schema
# ---------------------------------------------------------------------------


def _require(d, key, kind, where, optional=False):
    if key not in d:
        if optional:
            return None
        raise SchemaError(f"{where}: missing field {key!r}")
    v = d[key]
    if not isinstance(v, kind):
        raise SchemaError(f"{where}: field {key!r} must be {getattr(kind, '__name__', kind)}")
    return v


def _report_from_dict(d, source, where) -> DiagnosticReport:
    if not isinstance(d, dict):
        raise SchemaError(f"{where}: report must be an object")
    primary = _require(d, "primary", str, where)
    diffs = _require(d, "differentials", list, where)
    if not all(isinstance(x, str) for x in diffs):
        raise SchemaError(f"{where}: differentials must be strings")
    return DiagnosticReport.from_raw(primary, diffs, source)


def case_from_dict(d, where="case", line=None, check_replay=True) -> CaseRecord:
    """Validate one case object against the case schema and build a CaseRecord."""
    try:
        if not isinstance(d, dict):
            raise SchemaError(f"{where}: case must be an object")
        case_id = _require(d, "case_id", str, where)
        physician_id = _require(d, "physician_id", str, where)
        r0 = _report_from_dict(d.get("r0"), Source.AI_SNAPSHOT, f"{where} r0")
        r1 = _report_from_dict(d.get("r1"), Source.PHYSICIAN_FINAL, f"{where} r1")
        raw_actions = _require(d, "actions", list, where, optional=True)
        actions = None
        if raw_actions is not None:
            actions = []
            for i, a in enumerate(raw_actions):
                if not isinstance(a, dict) or not isinstance(a.get("kind"), str):
                    raise SchemaError(f"{where}: action {i} must be an object with a string 'kind'")
                for key in ("slot", "target_label", "value"):
                    if a.get(key) is not None and not isinstance(a[key], str):
                        raise SchemaError(f"{where}: action {i} field {key!r} must be a string")
                try:
                    actions.append(ValidationAction.from_dict(a))
                except (ValueError, ActionError) as exc:
                    raise SchemaError(f"{where}: action {i}: {exc}") from exc
    except SchemaError as exc:
        if line is not None and exc.line is None:
            raise SchemaError(str(exc), line=line) from exc
        raise

    meta = {k: v for k, v in d.items() if k not in ("case_id", "physician_id", "r0", "r1", "actions")}
    case = CaseRecord(case_id, physician_id, r0, r1, None if actions is None else tuple(actions), meta)
    if check_replay and actions is not None:
        try:
            ok = case.replay_consistent()
        except (ActionError, InvariantError) as exc:
            raise ReplayMismatch(f"case {case_id}: action log cannot be replayed: {exc}") from exc
        if not ok:
            raise ReplayMismatch(f"case {case_id}: replaying the action log does not reproduce r1")
    return case


def case_to_dict(case: CaseRecord) -> dict:
    d = {
        "case_id": case.case_id,
        "physician_id": case.physician_id,
        "r0": case.r0.to_dict(),
        "r1": case.r1.to_dict(),
    }
    if case.actions is not None:
        d["actions"] = [a.to_dict() for a in case.actions]
    d.update(case.metadata)
    return d


def dump_cases(cases) -> str:
    """Cases as canonical JSON lines, input order preserved."""
    return "".join(canonical_json(case_to_dict(c)) + "\n" for c in cases)


def write_cases(cases, path) -> None:
    Path(path).write_text(dump_cases(cases), encoding="utf-8")


def _check_unique(cases) -> list[CaseRecord]:
    seen = set()
    for c in cases:
        if c.case_id in seen:
            raise InvariantError(f"duplicate case_id {c.case_id!r}")
        seen.add(c.case_id)
    return cases


def parse_cases(text: str) -> list[CaseRecord]:
    """Parse a cohort given as a JSON array of cases or one case object per line."""
    stripped = text.lstrip()
    if stripped.startswith("["):
        try:
            items = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"malformed JSON: {exc.msg}", line=exc.lineno) from exc
        return _check_unique([case_from_dict(d, f"case[{i}]") for i, d in enumerate(items)])

    cases = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"malformed JSON: {exc.msg}", line=lineno) from exc
        cases.append(case_from_dict(d, f"case on line {lineno}", line=lineno))
    return _check_unique(cases)


def is_ledger(path) -> bool:
    with open(path, "rb") as fh:
        first = fh.readline()
    try:
        d = json.loads(first)
    except (json.JSONDecodeError, UnicodeDecodeError):
        return False
    return isinstance(d, dict) and "content_hash" in d and "prev_hash" in d


def load_cohort(path) -> list[CaseRecord]:
    """Load and fully validate a cohort from a case file or a ledger."""
    path = Path(path)
    if path.stat().st_size and is_ledger(path):
        return Ledger(path).cases()
    return parse_cases(path.read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# ledger
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LedgerRecord:
    seq: int
    record_kind: str
    case_id: str
    payload: str
    content_hash: str
    prev_hash: str

    def to_line(self) -> str:
        return canonical_json(
            {
                "seq": self.seq,
                "record_kind": self.record_kind,
                "case_id": self.case_id,
                "payload": self.payload,
                "content_hash": self.content_hash,
                "prev_hash": self.prev_hash,
            }
        )

    @property
    def link_hash(self) -> str:
        return chain_hash(self.content_hash, self.prev_hash)

    def data(self) -> dict:
        return json.loads(self.payload)


@dataclass(frozen=True)
class VerificationReport:
    valid: bool
    n_records: int
    first_bad_seq: int | None = None
    reason: str = ""

    def __bool__(self):
        return self.valid


def _parse_line(raw: bytes, seq: int) -> LedgerRecord:
    try:
        text = raw.decode("utf-8")
        d = json.loads(text)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptRecord(f"unparseable ledger line: {exc}", seq=seq) from exc
    if not isinstance(d, dict) or tuple(sorted(d)) != RECORD_FIELDS:
        raise CorruptRecord("ledger line does not have the record fields", seq=seq)
    types = {"seq": int, "record_kind": str, "case_id": str, "payload": str, "content_hash": str, "prev_hash": str}
    for k, t in types.items():
        if not isinstance(d[k], t) or isinstance(d[k], bool):
            raise CorruptRecord(f"field {k!r} has the wrong type", seq=seq)
    return LedgerRecord(**d)


def _split_lines(data: bytes) -> list[bytes]:
    if not data:
        return []
    lines = data.split(b"\n")
    if lines[-1] != b"":
        raise CorruptRecord("last ledger line is truncated (no newline terminator)", seq=len(lines) - 1)
    return lines[:-1]


class _OrderTracker:
    _rank = {SNAPSHOT_R0: 0, ACTION_LOG: 1, FINAL_R1: 2}

    def __init__(self):
        self.stage: dict[str, int] = {}

    def check(self, kind: str, case_id: str) -> None:
        if kind not in self._rank:
            raise OrderViolation(f"unknown record kind {kind!r}")
        rank = self._rank[kind]
        last = self.stage.get(case_id)
        if kind == SNAPSHOT_R0 and last is not None:
            raise DuplicateSnapshot(f"case {case_id!r} already has an R0 snapshot")
        if last is None and kind != SNAPSHOT_R0:
            raise OrderViolation(f"{kind} for case {case_id!r} precedes its R0 snapshot")
        if last is not None and rank <= last:
            raise OrderViolation(f"{kind} for case {case_id!r} is out of order")

    def commit(self, kind: str, case_id: str) -> None:
        self.stage[case_id] = self._rank[kind]


def _payload_matches(rec: LedgerRecord) -> bool:
    try:
        data = json.loads(rec.payload)
    except json.JSONDecodeError:
        return False
    return isinstance(data, dict) and data.get("case_id") == rec.case_id and data.get("record_kind") == rec.record_kind


def verify_chain(ledger) -> VerificationReport:
    """Recompute every digest and link; report the first divergent record.

    Raises ``CorruptRecord`` (carrying ``seq``) when a line cannot be parsed.
    """
    path = ledger.path if isinstance(ledger, Ledger) else Path(ledger)
    lines = _split_lines(path.read_bytes())
    prev = GENESIS_HASH
    order = _OrderTracker()
    for i, raw in enumerate(lines):
        rec = _parse_line(raw, i)

        def bad(reason, i=i):
            return VerificationReport(False, len(lines), i, reason)

        if rec.to_line().encode("utf-8") != raw:
            return bad("record bytes are not in canonical form")
        if rec.seq != i:
            return bad(f"seq {rec.seq} found at position {i}")
        if sha256_hex(rec.payload) != rec.content_hash:
            return bad("content_hash does not match payload")
        if rec.prev_hash != prev:
            return bad("prev_hash does not link to the previous record")
        if not _payload_matches(rec):
            return bad("payload does not name this record's case_id and record_kind")
        try:
            order.check(rec.record_kind, rec.case_id)
        except (OrderViolation, DuplicateSnapshot) as exc:
            return bad(str(exc))
        order.commit(rec.record_kind, rec.case_id)
        prev = rec.link_hash
    return VerificationReport(True, len(lines))


@contextmanager
def _locked(path: Path):
    with open(path, "ab") as fh:
        fcntl.flock(fh, fcntl.LOCK_EX)
        try:
            yield fh
        finally:
            fcntl.flock(fh, fcntl.LOCK_UN)


class Ledger:
    """Append-only ledger file. One writer at a time (flock); readers are free."""

    def __init__(self, path):
        self.path = Path(path)
        self.path.touch(exist_ok=True)

    def records(self) -> list[LedgerRecord]:
        return [_parse_line(raw, i) for i, raw in enumerate(_split_lines(self.path.read_bytes()))]

    def __len__(self):
        return len(self.records())

    def append(self, record_kind: str, case_id: str, payload) -> LedgerRecord:
        if isinstance(payload, str):
            payload = json.loads(payload)
        # case_id and record_kind ride inside the hashed payload so they are tamper-evident
        payload = canonical_json({**payload, "case_id": case_id, "record_kind": record_kind})
        with _locked(self.path) as fh:
            existing = self.records()
            order = _OrderTracker()
            for rec in existing:
                order.commit(rec.record_kind, rec.case_id)
            order.check(record_kind, case_id)
            prev = existing[-1].link_hash if existing else GENESIS_HASH
            rec = LedgerRecord(len(existing), record_kind, case_id, payload, sha256_hex(payload), prev)
            fh.write((rec.to_line() + "\n").encode("utf-8"))
            fh.flush()
            os.fsync(fh.fileno())
        return rec

    def append_case(self, case: CaseRecord) -> list[LedgerRecord]:
        d = case_to_dict(case)
        out = [
            self.append(
                SNAPSHOT_R0,
                case.case_id,
                {"case_id": case.case_id, "physician_id": case.physician_id, "r0": d["r0"]},
            )
        ]
        if case.actions is not None:
            out.append(self.append(ACTION_LOG, case.case_id, {"case_id": case.case_id, "actions": d["actions"]}))
        out.append(self.append(FINAL_R1, case.case_id, {"case_id": case.case_id, "r1": d["r1"]}))
        return out

    def verify(self) -> VerificationReport:
        return verify_chain(self)

    def cases(self, verify: bool = True, check_replay: bool = True) -> list[CaseRecord]:
        """Reassemble complete cases (snapshot plus final report) in ledger order."""
        if verify:
            report = self.verify()
            if not report:
                raise ChainBroken(f"ledger chain broken at record {report.first_bad_seq}: {report.reason}", report.first_bad_seq)
        parts: dict[str, dict] = {}
        for rec in self.records():
            data = rec.data()
            entry = parts.setdefault(rec.case_id, {"case_id": rec.case_id})
            if rec.record_kind == SNAPSHOT_R0:
                entry["physician_id"] = data["physician_id"]
                entry["r0"] = data["r0"]
            elif rec.record_kind == ACTION_LOG:
                entry["actions"] = data["actions"]
            else:
                entry["r1"] = data["r1"]
        complete = [d for d in parts.values() if "r1" in d]
        return _check_unique(
            [case_from_dict(d, f"ledger case {d['case_id']}", check_replay=check_replay) for d in complete]
        )


def append(ledger, record_kind: str, case_id: str, payload) -> LedgerRecord:
    if not isinstance(ledger, Ledger):
        ledger = Ledger(ledger)
    return ledger.append(record_kind, case_id, payload)
