"""Expert-AI diagnostic concordance: compare immutable AI report snapshots with
physician-validated reports at four levels of agreement."""

__version__ = "0.1.0"

from .concordance import CaseConcordance, Classification, analyze_case, analyze_cohort, matched_pairs
from .report_model import (
    CaseRecord,
    Diagnosis,
    DiagnosticReport,
    DiffDecomposition,
    ValidationAction,
    apply_actions,
    consideration_set,
    diff_reports,
)
from .similarity import SimilarityConfig, is_similar, normalize_label, similarity
from .snapshot_store import Ledger, load_cohort, verify_chain
from .statistics import (
    CohortMetrics,
    ConfidenceInterval,
    Proportion,
    check_monotonicity,
    clopper_pearson_ci,
    cohort_metrics,
    interpret,
    standard_error,
    wald_ci,
    wilson_ci,
)
