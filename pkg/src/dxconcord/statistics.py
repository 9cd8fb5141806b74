"""Cohort rates, binomial confidence intervals, agreement bands, and strata."""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction

from scipy import stats as _st

from .concordance import CaseConcordance, Classification
from .errors import EmptyCohort, InvariantError

WALD = "wald"
WILSON = "wilson"
CLOPPER_PEARSON = "clopper_pearson"
CI_METHODS = (WALD, WILSON, CLOPPER_PEARSON)

METRICS = ("pmr", "amr", "ccr", "cross_category_rate", "divergent_rate", "pct_any_overlap")


class DegenerateIntervalWarning(UserWarning):
    """A normal-approximation interval collapsed to zero width."""


@dataclass(frozen=True)
class Proportion:
    successes: int
    trials: int

    def __post_init__(self):
        if self.trials < 1 or not 0 <= self.successes <= self.trials:
            raise InvariantError(f"invalid proportion {self.successes}/{self.trials}")

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.successes, self.trials)

    @property
    def value(self) -> float:
        return self.successes / self.trials

    def __str__(self):
        return f"{self.successes}/{self.trials}"


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    method: str
    level: float = 0.95

    def contains(self, p: float) -> bool:
        return self.lower <= p <= self.upper


def z_value(level: float = 0.95) -> float:
    if level == 0.95:
        return 1.96
    return float(_st.norm.ppf(0.5 + level / 2.0))


def standard_error(p: Proportion) -> float:
    v = p.value
    return math.sqrt(v * (1.0 - v) / p.trials)


def _clamp(x: float) -> float:
    return min(1.0, max(0.0, x))


def wald_ci(p: Proportion, level: float = 0.95) -> ConfidenceInterval:
    half = z_value(level) * standard_error(p)
    if half == 0.0:
        warnings.warn(f"Wald interval for {p} has zero width", DegenerateIntervalWarning, stacklevel=2)
    return ConfidenceInterval(_clamp(p.value - half), _clamp(p.value + half), WALD, level)


def wilson_ci(p: Proportion, level: float = 0.95) -> ConfidenceInterval:
    z = z_value(level)
    n = p.trials
    v = p.value
    denom = 1.0 + z * z / n
    center = (v + z * z / (2 * n)) / denom
    half = z * math.sqrt(v * (1.0 - v) / n + z * z / (4 * n * n)) / denom
    lo, hi = _clamp(center - half), _clamp(center + half)
    # guard rounding at the boundaries so lower <= p <= upper holds exactly
    return ConfidenceInterval(min(lo, v), max(hi, v), WILSON, level)


def clopper_pearson_ci(p: Proportion, level: float = 0.95) -> ConfidenceInterval:
    alpha = round(1.0 - level, 12)  # 1 - 0.95 is not 0.05 in binary
    m, n = p.successes, p.trials
    if m == n:
        lower = (alpha / 2.0) ** (1.0 / n)
    elif m == 0:
        lower = 0.0
    else:
        lower = float(_st.beta.ppf(alpha / 2.0, m, n - m + 1))
    if m == 0:
        upper = 1.0 - (alpha / 2.0) ** (1.0 / n)
    elif m == n:
        upper = 1.0
    else:
        upper = float(_st.beta.ppf(1.0 - alpha / 2.0, m + 1, n - m))
    return ConfidenceInterval(lower, upper, CLOPPER_PEARSON, level)


_CI_FUNCS = {WALD: wald_ci, WILSON: wilson_ci, CLOPPER_PEARSON: clopper_pearson_ci}


def confidence_interval(p: Proportion, method: str = WILSON, level: float = 0.95) -> ConfidenceInterval:
    try:
        fn = _CI_FUNCS[method]
    except KeyError:
        raise ValueError(f"unknown CI method {method!r}") from None
    return fn(p, level)


def headline_interval(p: Proportion, level: float = 0.95, method: str | None = None) -> ConfidenceInterval:
    """Default reported interval: exact at 0 or n successes, Wilson elsewhere."""
    if method is None:
        method = CLOPPER_PEARSON if p.successes in (0, p.trials) else WILSON
    return confidence_interval(p, method, level)


EXCELLENT = "Excellent"
SUBSTANTIAL = "Substantial"
MODERATE = "Moderate"
FAIR_POOR = "Fair/Poor"


def interpret(rate: float) -> str:
    if rate >= 0.80:
        return EXCELLENT
    if rate >= 0.60:
        return SUBSTANTIAL
    if rate >= 0.40:
        return MODERATE
    return FAIR_POOR


def format_pct(x, places: int = 1) -> str:
    """Percentage string rounded half-up; accepts a Fraction, Proportion, or float."""
    if isinstance(x, Proportion):
        x = x.fraction
    if isinstance(x, Fraction):
        d = Decimal(x.numerator * 100) / Decimal(x.denominator)
    else:
        d = Decimal(x) * 100
    q = Decimal(1).scaleb(-places)
    return f"{d.quantize(q, rounding=ROUND_HALF_UP)}%"


@dataclass
class CohortMetrics:
    n: int
    pmr: Proportion
    amr: Proportion
    ccr: Proportion
    cross_category_rate: Proportion
    divergent_rate: Proportion
    pct_any_overlap: Proportion
    total_overlap: int
    mean_overlap: float
    classification_counts: dict
    kappa_like: float
    kappa_like_caveat: str = (
        "observed any-match agreement (equals CCR); no chance-agreement model is applied"
    )
    level: float = 0.95
    intervals: dict = field(default_factory=dict)
    headline: dict = field(default_factory=dict)
    interpretation: dict = field(default_factory=dict)
    per_stratum: dict = field(default_factory=dict)

    def proportion(self, name: str) -> Proportion:
        return getattr(self, name)

    def to_dict(self) -> dict:
        out = {"n": self.n, "level": self.level}
        for name in METRICS:
            p = self.proportion(name)
            entry = {"successes": p.successes, "trials": p.trials, "value": p.value}
            if name in self.intervals:
                entry["intervals"] = {
                    m: {"lower": ci.lower, "upper": ci.upper} for m, ci in self.intervals[name].items()
                }
            if name in self.headline:
                ci = self.headline[name]
                entry["headline_interval"] = {"method": ci.method, "lower": ci.lower, "upper": ci.upper}
            if name in self.interpretation:
                entry["interpretation"] = self.interpretation[name]
            out[name] = entry
        out["total_overlap"] = self.total_overlap
        out["mean_overlap"] = self.mean_overlap
        out["classification_counts"] = dict(sorted(self.classification_counts.items()))
        out["kappa_like"] = {"value": self.kappa_like, "caveat": self.kappa_like_caveat}
        out["per_stratum"] = {k: v.to_dict() for k, v in sorted(self.per_stratum.items())}
        return out


def cohort_metrics(
    results,
    level: float = 0.95,
    ci_method: str | None = None,
    with_intervals: bool = True,
    stratify: bool = True,
) -> CohortMetrics:
    """Aggregate per-case concordance into cohort rates.

    ``with_intervals=False`` skips interval computation; the tau sweeps in the
    property tests call this thousands of times.
    """
    results = sorted(results, key=lambda r: r.case_id)
    n = len(results)
    if n == 0:
        raise EmptyCohort("cannot aggregate an empty cohort")

    counts = Counter(r.classification.value for r in results)
    exact = sum(r.m_exact for r in results)
    adjusted = sum(r.m_exact + r.m_similar for r in results)
    any_match = sum(r.acm for r in results)
    total_overlap = sum(r.overlap for r in results)
    ccr = Proportion(any_match, n)

    m = CohortMetrics(
        n=n,
        pmr=Proportion(exact, n),
        amr=Proportion(adjusted, n),
        ccr=ccr,
        cross_category_rate=Proportion(counts.get(Classification.CROSS_CATEGORY.value, 0), n),
        divergent_rate=Proportion(n - any_match, n),
        pct_any_overlap=Proportion(sum(1 for r in results if r.overlap >= 1), n),
        total_overlap=total_overlap,
        mean_overlap=total_overlap / n,
        classification_counts={c.value: counts.get(c.value, 0) for c in Classification},
        kappa_like=ccr.value,
        level=level,
    )
    if with_intervals:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateIntervalWarning)
            for name in METRICS:
                p = m.proportion(name)
                m.intervals[name] = {meth: confidence_interval(p, meth, level) for meth in CI_METHODS}
                m.headline[name] = headline_interval(p, level, ci_method)
    for name in ("pmr", "amr", "ccr"):
        m.interpretation[name] = interpret(m.proportion(name).value)

    if stratify:
        groups: dict[str, list[CaseConcordance]] = {}
        for r in results:
            groups.setdefault(r.physician_id, []).append(r)
        m.per_stratum = {
            pid: cohort_metrics(rs, level, ci_method, with_intervals, stratify=False) for pid, rs in sorted(groups.items())
        }
    return m


@dataclass(frozen=True)
class MonotonicityCheck:
    ok: bool
    message: str

    def __bool__(self):
        return self.ok


def check_monotonicity(m: CohortMetrics) -> MonotonicityCheck:
    # compare exact fractions so equal rates never trip on float noise
    pmr, amr, ccr = m.pmr.fraction, m.amr.fraction, m.ccr.fraction
    ok = pmr <= amr <= ccr
    relation = f"PMR {m.pmr} <= AMR {m.amr} <= CCR {m.ccr}"
    return MonotonicityCheck(ok, relation if ok else f"violated: {relation}")
