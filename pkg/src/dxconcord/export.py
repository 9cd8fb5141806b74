"""Per-case CSV, cohort summary JSON, plot-data TSV, and the rendered summary table."""

from __future__ import annotations

import csv
import io
import json

from .concordance import CaseConcordance
from .statistics import CohortMetrics, MonotonicityCheck, format_pct

CASE_COLUMNS = (
    "case_id",
    "physician_id",
    "m_exact",
    "m_similar",
    "cc_p_to_d",
    "cc_d_to_p",
    "cc_either",
    "classification",
    "acm",
    "overlap",
    "similar_overlap_aux",
    "n_matched_pairs",
    "matched_pairs",
    "additions",
    "removals",
    "unchanged",
)

PLOT_COLUMNS = (
    "case_id",
    "physician_id",
    "r0_differentials",
    "r1_differentials",
    "added",
    "removed",
    "unchanged",
    "added_fraction",
    "removed_fraction",
    "unchanged_fraction",
)


def config_header(config: dict) -> str:
    return "# config: " + json.dumps(config, sort_keys=True, separators=(",", ":"))


def _join(labels) -> str:
    return ";".join(sorted(labels))


def case_rows(results) -> list[dict]:
    rows = []
    for r in sorted(results, key=lambda r: r.case_id):
        pairs = sorted(r.matched_pairs)
        rows.append(
            {
                "case_id": r.case_id,
                "physician_id": r.physician_id,
                "m_exact": r.m_exact,
                "m_similar": r.m_similar,
                "cc_p_to_d": r.cc_p_to_d,
                "cc_d_to_p": r.cc_d_to_p,
                "cc_either": r.cross_category,
                "classification": r.classification.value,
                "acm": r.acm,
                "overlap": r.overlap,
                "similar_overlap_aux": r.similar_overlap,
                "n_matched_pairs": len(pairs),
                "matched_pairs": ";".join(f"{p.r0_label}|{p.r1_label}|{p.score:.6f}" for p in pairs),
                "additions": _join(r.diff.additions),
                "removals": _join(r.diff.removals),
                "unchanged": _join(r.diff.unchanged),
            }
        )
    return rows


def _table(rows, columns, config, delimiter) -> str:
    buf = io.StringIO()
    buf.write(config_header(config) + "\n")
    w = csv.DictWriter(buf, fieldnames=columns, delimiter=delimiter, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def case_csv(results, config: dict) -> str:
    return _table(case_rows(results), CASE_COLUMNS, config, ",")


def _frac(part, whole) -> str:
    return f"{part / whole:.6f}" if whole else "0.000000"


def plot_tsv(results, config: dict) -> str:
    """Added/removed/unchanged differential counts per case plus an ``ALL`` row."""
    rows = []
    totals = [0, 0, 0, 0, 0]
    for r in sorted(results, key=lambda r: r.case_id):
        a, rm, u = len(r.diff.additions), len(r.diff.removals), len(r.diff.unchanged)
        n0, n1 = rm + u, a + u
        whole = a + rm + u
        rows.append(
            {
                "case_id": r.case_id,
                "physician_id": r.physician_id,
                "r0_differentials": n0,
                "r1_differentials": n1,
                "added": a,
                "removed": rm,
                "unchanged": u,
                "added_fraction": _frac(a, whole),
                "removed_fraction": _frac(rm, whole),
                "unchanged_fraction": _frac(u, whole),
            }
        )
        for i, v in enumerate((n0, n1, a, rm, u)):
            totals[i] += v
    n0, n1, a, rm, u = totals
    whole = a + rm + u
    rows.append(
        {
            "case_id": "ALL",
            "physician_id": "",
            "r0_differentials": n0,
            "r1_differentials": n1,
            "added": a,
            "removed": rm,
            "unchanged": u,
            "added_fraction": _frac(a, whole),
            "removed_fraction": _frac(rm, whole),
            "unchanged_fraction": _frac(u, whole),
        }
    )
    return _table(rows, PLOT_COLUMNS, config, "\t")


def summary_json(metrics: CohortMetrics, check: MonotonicityCheck, config: dict) -> str:
    doc = {
        "config": config,
        "metrics": metrics.to_dict(),
        "monotonicity": {"ok": check.ok, "detail": check.message},
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _ci_text(ci) -> str:
    return f"[{format_pct(ci.lower)}, {format_pct(ci.upper)}]"


def render_table(metrics: CohortMetrics, config: dict) -> str:
    """Plain-text summary with one column per physician plus a combined column."""
    columns = [(pid, m) for pid, m in sorted(metrics.per_stratum.items())] + [("Combined", metrics)]

    def count(m, name, with_pct):
        p = m.proportion(name)
        return f"{p} ({format_pct(p)})" if with_pct else str(p)

    rows = [
        ("Exact Primary Matches", [count(m, "pmr", c == "Combined") for c, m in columns]),
        ("Similarity-Adjusted", [count(m, "amr", c == "Combined") for c, m in columns]),
        ("Cross-Category Cases", [count(m, "cross_category_rate", c == "Combined") for c, m in columns]),
        ("Cases with Any Match", [str(m.ccr) for _, m in columns]),
        ("CCR (%)", [format_pct(m.ccr)[:-1] for _, m in columns]),
        (f"{round(metrics.level * 100):d}% CI (CCR)", [_ci_text(m.headline["ccr"]) if m.headline else "--" for _, m in columns]),
        ("kappa-like (Comprehensive)*", [f"{m.kappa_like:.3f}" for _, m in columns]),
        ("Interpretation (CCR)", [m.interpretation["ccr"] for _, m in columns]),
    ]
    head = ["Metric"] + [c for c, _ in columns]
    widths = [max(len(head[0]), *(len(r[0]) for r in rows))]
    for i in range(len(columns)):
        widths.append(max(len(head[i + 1]), *(len(r[1][i]) for r in rows)))

    def fmt(cells):
        return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()

    lines = [
        config_header(config),
        f"Diagnostic Concordance Summary (N={metrics.n})",
        fmt(head),
        fmt(["-" * w for w in widths]),
    ]
    lines += [fmt([name, *cells]) for name, cells in rows]
    ci = metrics.headline.get("ccr")
    if ci is not None:
        lines.append(f"CCR interval method: {ci.method}")
    lines.append(f"* {metrics.kappa_like_caveat}")
    return "\n".join(lines) + "\n"
