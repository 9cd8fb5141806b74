import warnings
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dxconcord.errors import EmptyCohort, InvariantError
from dxconcord.statistics import (
    CLOPPER_PEARSON,
    WILSON,
    DegenerateIntervalWarning,
    Proportion,
    check_monotonicity,
    clopper_pearson_ci,
    cohort_metrics,
    format_pct,
    headline_interval,
    interpret,
    standard_error,
    wald_ci,
    wilson_ci,
)
from oracles import clopper_pearson_bisect, wilson_closed_form


def test_proportion_is_exact():
    p = Proportion(15, 21)
    assert p.fraction == Fraction(5, 7)
    with pytest.raises(InvariantError):
        Proportion(3, 2)
    with pytest.raises(InvariantError):
        Proportion(0, 0)


def test_standard_error():
    # direct evaluation: sqrt((15/21)(6/21)/21) = 0.098580794...
    assert standard_error(Proportion(15, 21)) == pytest.approx(0.0986, abs=5e-5)
    assert standard_error(Proportion(0, 9)) == 0.0
    assert standard_error(Proportion(25, 50)) == pytest.approx(0.0707, abs=1e-4)
    assert standard_error(Proportion(1, 2)) == pytest.approx((0.25 / 2) ** 0.5)


def test_standard_error_half_at_n25():
    # p = 0.5 is not representable as m/25; use the closed form at the value
    assert (0.5 * 0.5 / 25) ** 0.5 == pytest.approx(0.1)


def test_wald():
    ci = wald_ci(Proportion(15, 21))
    assert (ci.lower, ci.upper) == pytest.approx((0.521, 0.908), abs=5e-4)
    with pytest.warns(DegenerateIntervalWarning):
        ci = wald_ci(Proportion(21, 21))
    assert (ci.lower, ci.upper) == (1.0, 1.0)
    with pytest.warns(DegenerateIntervalWarning):
        assert wald_ci(Proportion(0, 10)).upper == 0.0


def test_wilson_examples():
    ci = wilson_ci(Proportion(21, 21))
    assert ci.lower == pytest.approx(0.845, abs=5e-4) and ci.upper == 1.0
    ci = wilson_ci(Proportion(0, 21))
    assert ci.lower == 0.0 and ci.upper == pytest.approx(0.155, abs=5e-4)


def test_wilson_approaches_wald():
    p = Proportion(500_000, 1_000_000)
    w, n = wilson_ci(p), wald_ci(p)
    assert abs(w.lower - n.lower) < 1e-4 and abs(w.upper - n.upper) < 1e-4


def test_clopper_pearson_examples():
    ci = clopper_pearson_ci(Proportion(21, 21))
    assert ci.lower == pytest.approx(0.8389, abs=5e-5) and ci.upper == 1.0
    ci = clopper_pearson_ci(Proportion(0, 21))
    assert ci.lower == 0.0 and ci.upper == pytest.approx(0.161, abs=5e-4)
    assert clopper_pearson_ci(Proportion(1, 1)).lower == pytest.approx(0.025)


def test_clopper_pearson_boundary_identity():
    from scipy.stats import beta

    for n in (1, 5, 21, 100):
        closed = clopper_pearson_ci(Proportion(n, n)).lower
        assert closed == 0.025 ** (1 / n)
        assert abs(closed - beta.ppf(0.025, n, 1)) < 1e-9


@given(st.integers(1, 60).flatmap(lambda n: st.tuples(st.integers(0, n), st.just(n))))
def test_intervals_against_oracles(mn):
    m, n = mn
    lo, hi = wilson_closed_form(m, n)
    w = wilson_ci(Proportion(m, n))
    assert w.lower == pytest.approx(lo, abs=1e-12) and w.upper == pytest.approx(hi, abs=1e-12)
    lo, hi = clopper_pearson_bisect(m, n)
    cp = clopper_pearson_ci(Proportion(m, n))
    assert cp.lower == pytest.approx(lo, abs=1e-9) and cp.upper == pytest.approx(hi, abs=1e-9)


@given(st.integers(1, 80).flatmap(lambda n: st.tuples(st.integers(0, n), st.just(n))), st.sampled_from([0.8, 0.9, 0.95, 0.99]))
def test_intervals_bracket_estimate(mn, level):
    p = Proportion(*mn)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateIntervalWarning)
        for ci in (wald_ci(p, level), wilson_ci(p, level), clopper_pearson_ci(p, level)):
            assert 0.0 <= ci.lower <= p.value <= ci.upper <= 1.0


def test_headline_method_selection():
    assert headline_interval(Proportion(21, 21)).method == CLOPPER_PEARSON
    assert headline_interval(Proportion(0, 21)).method == CLOPPER_PEARSON
    assert headline_interval(Proportion(15, 21)).method == WILSON
    assert headline_interval(Proportion(15, 21), method="wald").method == "wald"


@pytest.mark.parametrize(
    "rate, band",
    [(1.0, "Excellent"), (0.80, "Excellent"), (0.714, "Substantial"), (0.60, "Substantial"), (0.40, "Moderate"), (0.3999, "Fair/Poor"), (0.0, "Fair/Poor")],
)
def test_interpret(rate, band):
    assert interpret(rate) == band


@pytest.mark.parametrize(
    "value, text",
    [(Proportion(15, 21), "71.4%"), (Proportion(5, 21), "23.8%"), (Proportion(21, 21), "100.0%"), (Fraction(1, 8), "12.5%"), (0.8389023847809204, "83.9%"), (0.00049, "0.0%")],
)
def test_format_pct_half_up(value, text):
    assert format_pct(value) == text


def test_format_pct_rounds_half_up_exactly():
    assert format_pct(Fraction(1, 16), 2) == "6.25%"
    assert format_pct(Fraction(1, 16), 1) == "6.3%"


def test_fixture_metrics(fixture_results):
    m = cohort_metrics(fixture_results)
    assert (m.pmr.successes, m.amr.successes, m.ccr.successes, m.cross_category_rate.successes) == (15, 15, 21, 5)
    assert m.divergent_rate.successes == 0
    assert m.total_overlap == 37 and m.pct_any_overlap.successes == 16
    assert m.kappa_like == 1.0 and "chance" in m.kappa_like_caveat
    p1, p2 = m.per_stratum["physician-1"], m.per_stratum["physician-2"]
    assert (p1.pmr.successes, p1.n, p1.ccr.successes) == (13, 16, 16)
    assert (p2.pmr.successes, p2.n, p2.ccr.successes) == (2, 5, 5)
    assert m.interpretation == {"pmr": "Substantial", "amr": "Substantial", "ccr": "Excellent"}
    assert check_monotonicity(m)


def test_strata_sum_to_combined(fixture_results):
    m = cohort_metrics(fixture_results)
    for name in ("pmr", "amr", "ccr", "cross_category_rate", "divergent_rate", "pct_any_overlap"):
        assert sum(s.proportion(name).successes for s in m.per_stratum.values()) == m.proportion(name).successes


def test_empty_cohort():
    with pytest.raises(EmptyCohort):
        cohort_metrics([])


def test_monotonicity_violation_reported(fixture_results):
    m = cohort_metrics(fixture_results)
    m.amr = Proportion(10, 21)
    check = check_monotonicity(m)
    assert not check and "violated" in check.message
