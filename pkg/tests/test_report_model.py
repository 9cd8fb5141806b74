import warnings

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dxconcord.errors import ActionError, ConcordanceWarning, DuplicateAdd, EmptyPrimary, InvariantError, UnknownTarget
from dxconcord.report_model import (
    DiagnosticReport,
    Slot,
    Source,
    add,
    apply_actions,
    consideration_set,
    diff_reports,
    refine,
    remove,
    validate,
)
from dxconcord.snapshot_store import canonical_json


def report(primary, diffs=(), source=Source.AI_SNAPSHOT):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConcordanceWarning)
        return DiagnosticReport.from_raw(primary, diffs, source)


def test_consideration_set():
    assert consideration_set(report("eczema", ["tinea", "psoriasis"])) == {"eczema", "tinea", "psoriasis"}
    assert consideration_set(report("melanoma")) == {"melanoma"}
    assert len(consideration_set(report("a", ["b", "c"]))) == 3


def test_primary_in_differentials_rejected():
    with pytest.raises(InvariantError):
        report("Eczema", ["eczema ", "tinea"])


def test_duplicates_collapse_with_warning():
    with pytest.warns(ConcordanceWarning, match="collapsed"):
        r = DiagnosticReport.from_raw("a", ["Tinea", "tinea", "b", "c"])
    assert r.differential_labels == ("tinea", "b", "c")


def test_ai_snapshot_differential_count_warning():
    with pytest.warns(ConcordanceWarning, match="expected 3"):
        DiagnosticReport.from_raw("a", ["b"])
    with warnings.catch_warnings():
        warnings.simplefilter("error", ConcordanceWarning)
        DiagnosticReport.from_raw("a", ["b"], Source.PHYSICIAN_FINAL)


def test_too_many_differentials():
    with pytest.raises(InvariantError):
        report("a", [f"d{i}" for i in range(11)])


def test_validate_is_identity():
    r0 = report("a", ["b", "c", "d"])
    assert apply_actions(r0, [validate()]).labels_equal(r0)


def test_remove_differential():
    r1 = apply_actions(report("x", ["a", "b", "c"]), [remove("b")])
    assert r1.differential_labels == ("a", "c")


def test_refine_and_add():
    r0 = report("psoriasis", ["eczema", "tinea", "lichen planus"])
    r1 = apply_actions(r0, [refine("psoriasis", "Plaque psoriasis", Slot.PRIMARY), refine("tinea", "tinea corporis"), add("pityriasis rosea")])
    assert r1.primary.label == "plaque psoriasis"
    assert r1.differential_labels == ("eczema", "tinea corporis", "lichen planus", "pityriasis rosea")
    assert r1.source is Source.PHYSICIAN_FINAL


def test_demotion_expressed_as_refine_plus_add():
    r0 = report("a", ["b", "c", "d"])
    r1 = apply_actions(r0, [remove("b"), refine("a", "b", Slot.PRIMARY), add("a")])
    assert r1.primary.label == "b" and set(r1.differential_labels) == {"a", "c", "d"}


def test_action_errors():
    r0 = report("a", ["b", "c", "d"])
    with pytest.raises(UnknownTarget):
        apply_actions(r0, [remove("zzz")])
    with pytest.raises(UnknownTarget):
        apply_actions(r0, [refine("zzz", "y", Slot.PRIMARY)])
    with pytest.raises(DuplicateAdd):
        apply_actions(r0, [add("c")])
    with pytest.raises(EmptyPrimary):
        apply_actions(r0, [remove("a", Slot.PRIMARY)])
    with pytest.raises(ActionError):
        apply_actions(r0, [add("q", Slot.PRIMARY)])
    with pytest.raises(InvariantError):
        apply_actions(r0, [add("a")])


def test_primary_can_be_emptied_and_refilled():
    r1 = apply_actions(report("a", ["b", "c", "d"]), [remove("a", Slot.PRIMARY), add("e", Slot.PRIMARY)])
    assert r1.primary.label == "e"


def test_fixture_case_07_replays(fixture_cases):
    case = next(c for c in fixture_cases if c.case_id == "C07")
    assert case.actions and len(case.actions) == 3
    assert case.replay().labels_equal(case.r1)


def test_r0_never_mutated(fixture_cases):
    for case in fixture_cases:
        before = canonical_json(case.r0.to_dict())
        case.replay()
        diff_reports(case.r0, case.r1)
        assert canonical_json(case.r0.to_dict()) == before


@pytest.mark.parametrize(
    "d0, d1, add_, rem, same",
    [
        (["a", "b"], ["b", "c"], {"c"}, {"a"}, {"b"}),
        (["a", "b"], ["a", "b"], set(), set(), {"a", "b"}),
        (["a", "b", "c"], [], set(), {"a", "b", "c"}, set()),
    ],
)
def test_diff_reports(d0, d1, add_, rem, same):
    d = diff_reports(report("p", d0), report("p", d1, Source.PHYSICIAN_FINAL))
    assert (d.additions, d.removals, d.unchanged) == (add_, rem, same)


label_sets = st.lists(st.sampled_from("abcdefgh"), unique=True, max_size=6)


@given(label_sets, label_sets)
def test_diff_conservation(d0, d1):
    d = diff_reports(report("zz", d0), report("zz", d1, Source.PHYSICIAN_FINAL))
    assert len(d.removals) + len(d.unchanged) == len(d0)
    assert len(d.additions) + len(d.unchanged) == len(d1)
    assert not (d.additions & d.removals or d.additions & d.unchanged or d.removals & d.unchanged)


@given(st.lists(st.integers(0, 3), max_size=6))
def test_validate_insertions_do_not_change_result(positions):
    r0 = report("a", ["b", "c", "d"])
    base = [remove("b"), add("e"), refine("c", "f")]
    actions = list(base)
    for pos in sorted(positions, reverse=True):
        actions.insert(pos, validate())
    assert apply_actions(r0, actions).labels_equal(apply_actions(r0, base))
