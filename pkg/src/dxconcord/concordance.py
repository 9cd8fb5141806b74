"""Per-case concordance indicators across the four agreement levels."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .report_model import CaseRecord, DiagnosticReport, DiffDecomposition, consideration_set, diff_reports
from .similarity import SimilarityConfig, similarity


class Classification(str, Enum):
    EXACT = "exact"
    SIMILAR = "similar"
    CROSS_CATEGORY = "cross_category"
    DIFFERENTIAL_ONLY = "differential_only"
    DIVERGENT = "divergent"


@dataclass(frozen=True, order=True)
class MatchedPair:
    r0_label: str
    r1_label: str
    score: float


@dataclass(frozen=True)
class CaseConcordance:
    case_id: str
    physician_id: str
    m_exact: int
    m_similar: int
    cc_p_to_d: int
    cc_d_to_p: int
    overlap: int
    matched_pairs: frozenset
    acm: int
    classification: Classification
    diff: DiffDecomposition
    # auxiliary diagnostic, not a headline metric: overlap counted by similarity instead of equality
    similar_overlap: int = 0

    @property
    def cross_category(self) -> int:
        return int(self.cc_p_to_d or self.cc_d_to_p)


def exact_primary_match(r0: DiagnosticReport, r1: DiagnosticReport) -> int:
    return int(r0.primary.label == r1.primary.label)


def similar_primary_match(r0: DiagnosticReport, r1: DiagnosticReport, cfg=SimilarityConfig()) -> int:
    """1 when primaries clear tau without being equal; exact matches score 0 here."""
    if exact_primary_match(r0, r1):
        return 0
    return int(similarity(r0.primary.label, r1.primary.label, cfg.algorithm) >= cfg.tau)


def differential_overlap(r0: DiagnosticReport, r1: DiagnosticReport) -> int:
    return len(set(r0.differential_labels) & set(r1.differential_labels))


def _primary_in(label: str, others, cfg: SimilarityConfig) -> int:
    if label in others:
        return 1
    return int(any(similarity(label, d, cfg.algorithm) >= cfg.tau for d in others))


def cross_category_p_to_d(r0: DiagnosticReport, r1: DiagnosticReport, cfg=SimilarityConfig()) -> int:
    return _primary_in(r0.primary.label, r1.differential_labels, cfg)


def cross_category_d_to_p(r0: DiagnosticReport, r1: DiagnosticReport, cfg=SimilarityConfig()) -> int:
    return _primary_in(r1.primary.label, r0.differential_labels, cfg)


def matched_pairs(r0: DiagnosticReport, r1: DiagnosticReport, cfg=SimilarityConfig()) -> frozenset:
    out = set()
    for a in consideration_set(r0):
        for b in consideration_set(r1):
            s = similarity(a, b, cfg.algorithm)
            if s >= cfg.tau:
                out.add(MatchedPair(a, b, s))
    return frozenset(out)


def _similar_overlap(r0: DiagnosticReport, r1: DiagnosticReport, cfg: SimilarityConfig) -> int:
    return sum(
        1 for a in r0.differential_labels if any(similarity(a, b, cfg.algorithm) >= cfg.tau for b in r1.differential_labels)
    )


def analyze_case(case: CaseRecord, cfg=SimilarityConfig()) -> CaseConcordance:
    r0, r1 = case.r0, case.r1
    m_exact = exact_primary_match(r0, r1)
    m_similar = similar_primary_match(r0, r1, cfg)
    p_to_d = cross_category_p_to_d(r0, r1, cfg)
    d_to_p = cross_category_d_to_p(r0, r1, cfg)
    pairs = matched_pairs(r0, r1, cfg)
    acm = int(bool(pairs))

    if m_exact:
        cls = Classification.EXACT
    elif m_similar:
        cls = Classification.SIMILAR
    elif p_to_d or d_to_p:
        cls = Classification.CROSS_CATEGORY
    elif acm:
        cls = Classification.DIFFERENTIAL_ONLY
    else:
        cls = Classification.DIVERGENT

    return CaseConcordance(
        case_id=case.case_id,
        physician_id=case.physician_id,
        m_exact=m_exact,
        m_similar=m_similar,
        cc_p_to_d=p_to_d,
        cc_d_to_p=d_to_p,
        overlap=differential_overlap(r0, r1),
        matched_pairs=pairs,
        acm=acm,
        classification=cls,
        diff=diff_reports(r0, r1),
        similar_overlap=_similar_overlap(r0, r1, cfg),
    )


def analyze_cohort(cases, cfg=SimilarityConfig(), workers: int = 1) -> list[CaseConcordance]:
    """Analyze every case; results come back ordered by case_id regardless of ``workers``."""
    ordered = sorted(cases, key=lambda c: c.case_id)
    if workers <= 1:
        return [analyze_case(c, cfg) for c in ordered]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda c: analyze_case(c, cfg), ordered))
