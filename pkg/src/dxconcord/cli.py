"""Command-line entry point: ``dxconcord {ingest,analyze,verify,replay,synth,fixture}``.

Exit codes:
    0  success
    2  usage error
    3  schema error (malformed JSON, missing or mistyped field)
    4  invariant error (report rules, duplicate case ids, strict-mode warnings)
    5  ledger chain breach or corrupt record
    6  replay mismatch
    7  internal-consistency failure (PMR <= AMR <= CCR violated)
    8  ledger ordering error (duplicate snapshot, out-of-order record)
    9  invalid configuration (tau out of range, bad synthesis settings)
    10 empty cohort
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from importlib import resources
from pathlib import Path

from . import __version__
from .concordance import analyze_cohort
from .errors import (
    ChainBroken,
    ConcordanceWarning,
    ConfigError,
    CorruptRecord,
    EmptyCohort,
    InvariantError,
    LedgerError,
    MonotonicityViolation,
    ReplayMismatch,
    SchemaError,
)
from .export import case_csv, plot_tsv, render_table, summary_json
from .similarity import ALGORITHMS, DEFAULT_TAU, SimilarityConfig
from .snapshot_store import Ledger, load_cohort, parse_cases, verify_chain, write_cases
from .statistics import CI_METHODS, check_monotonicity, cohort_metrics
from .synthesis import PerturbationConfig, generate_cohort

log = logging.getLogger("dxconcord")

EXIT_OK = 0
EXIT_SCHEMA = 3
EXIT_INVARIANT = 4
EXIT_CHAIN = 5
EXIT_REPLAY = 6
EXIT_INTERNAL = 7
EXIT_ORDER = 8
EXIT_CONFIG = 9
EXIT_EMPTY = 10

FORMATS = ("csv", "json", "tsv")


def fixture_path() -> Path:
    """Path of the bundled 21-case fixture cohort."""
    return Path(str(resources.files("dxconcord") / "data" / "table1_fixture.jsonl"))


def _formats(value: str) -> tuple[str, ...]:
    out = tuple(v.strip() for v in value.split(",") if v.strip())
    bad = [v for v in out if v not in FORMATS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown format(s): {', '.join(bad)}")
    return out


def cmd_ingest(args) -> int:
    cases = parse_cases(Path(args.case_file).read_text(encoding="utf-8"))
    ledger = Ledger(args.ledger)
    size = ledger.path.stat().st_size
    try:
        for case in cases:
            ledger.append_case(case)
    except LedgerError:
        # roll back every record this command wrote
        with open(ledger.path, "r+b") as fh:
            fh.truncate(size)
        raise
    print(f"ingested {len(cases)} cases into {ledger.path} ({len(ledger)} records)")
    return EXIT_OK


def run_config(args) -> dict:
    return {
        "version": __version__,
        "inputs": [str(p) for p in args.inputs],
        "tau": args.tau,
        "algorithm": args.algorithm,
        "level": args.level,
        "ci_method": args.ci_method or "auto",
        "formats": list(args.format),
        "strict": bool(args.strict),
    }


def cmd_analyze(args) -> int:
    cfg = SimilarityConfig(args.tau, args.algorithm)
    if not 0.0 < args.level < 1.0:
        raise ConfigError(f"level must lie in (0, 1), got {args.level}")
    cases = []
    for path in args.inputs:
        cases.extend(load_cohort(path))
    ids = [c.case_id for c in cases]
    if len(set(ids)) != len(ids):
        raise InvariantError("duplicate case_id across inputs")
    if not cases:
        raise EmptyCohort("no cases to analyze")

    results = analyze_cohort(cases, cfg, workers=args.workers)
    metrics = cohort_metrics(results, level=args.level, ci_method=args.ci_method)
    check = check_monotonicity(metrics)
    config = run_config(args)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    table = render_table(metrics, config)
    (out / "table.txt").write_text(table, encoding="utf-8")
    if "csv" in args.format:
        (out / "cases.csv").write_text(case_csv(results, config), encoding="utf-8")
    if "json" in args.format:
        (out / "summary.json").write_text(summary_json(metrics, check, config), encoding="utf-8")
    if "tsv" in args.format:
        (out / "plot.tsv").write_text(plot_tsv(results, config), encoding="utf-8")
    print(table, end="")
    if not check:
        raise MonotonicityViolation(check.message)
    return EXIT_OK


def cmd_verify(args) -> int:
    report = verify_chain(args.ledger)
    if not report:
        print(f"INVALID: record {report.first_bad_seq}: {report.reason}")
        return EXIT_CHAIN
    print(f"valid: {report.n_records} records")
    return EXIT_OK


def cmd_replay(args) -> int:
    path = Path(args.ledger)
    report = verify_chain(path)
    if not report:
        raise ChainBroken(f"ledger chain broken at record {report.first_bad_seq}: {report.reason}", report.first_bad_seq)
    cases = Ledger(path).cases(check_replay=False)
    logged = [c for c in cases if c.actions is not None]
    bad = []
    for c in logged:
        try:
            ok = c.replay_consistent()
        except Exception as exc:  # any action error is a replay failure
            log.debug("replay of %s raised %s", c.case_id, exc)
            ok = False
        if not ok:
            bad.append(c.case_id)
    print(f"{len(logged) - len(bad)}/{len(logged)} consistent")
    for cid in bad:
        print(f"MISMATCH {cid}")
    return EXIT_REPLAY if bad else EXIT_OK


def cmd_synth(args) -> int:
    cfg = PerturbationConfig(
        seed=args.seed,
        n_cases=args.n_cases,
        p_exact=args.p_exact,
        p_lexical=args.p_lexical,
        p_reprioritize=args.p_reprioritize,
        p_replace=args.p_replace,
        p_remove=args.p_remove,
        p_add=args.p_add,
        n_physicians=args.physicians,
    )
    cases = generate_cohort(cfg)
    write_cases(cases, args.out)
    print(f"seed={cfg.seed} wrote {len(cases)} cases to {args.out}")
    return EXIT_OK


def cmd_fixture(args) -> int:
    data = fixture_path().read_text(encoding="utf-8")
    if args.out:
        Path(args.out).write_text(data, encoding="utf-8")
    else:
        sys.stdout.write(data)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dxconcord", description="Expert-AI diagnostic concordance analysis")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="append cases to a hash-chained ledger")
    p.add_argument("case_file")
    p.add_argument("ledger")
    p.add_argument("--strict", action="store_true", help="treat data warnings as errors")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("analyze", help="compute concordance metrics and write reports")
    p.add_argument("inputs", nargs="+", help="case files (JSON array or JSON lines) or ledgers")
    p.add_argument("--tau", type=float, default=DEFAULT_TAU)
    p.add_argument("--algorithm", choices=ALGORITHMS, default=ALGORITHMS[0])
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--ci-method", choices=CI_METHODS, default=None, help="override the headline interval method")
    p.add_argument("--out", default="dxconcord-out")
    p.add_argument("--format", type=_formats, default=FORMATS, help="comma list of csv,json,tsv")
    p.add_argument("--strict", action="store_true", help="treat data warnings as errors")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify", help="check ledger hashes and links")
    p.add_argument("ledger")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("replay", help="replay stored action logs against stored R1")
    p.add_argument("ledger")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("synth", help="generate a seeded synthetic cohort")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n-cases", type=int, default=21)
    p.add_argument("--out", required=True)
    p.add_argument("--p-exact", type=float, default=0.70)
    p.add_argument("--p-lexical", type=float, default=0.05)
    p.add_argument("--p-reprioritize", type=float, default=0.20)
    p.add_argument("--p-replace", type=float, default=0.05)
    p.add_argument("--p-remove", type=float, default=0.15)
    p.add_argument("--p-add", type=float, default=0.15)
    p.add_argument("--physicians", type=int, default=2)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fixture", help="write the bundled 21-case fixture cohort")
    p.add_argument("--out")
    p.set_defaults(func=cmd_fixture)
    return parser


_EXIT_FOR = (
    (SchemaError, EXIT_SCHEMA),
    (ReplayMismatch, EXIT_REPLAY),
    (ChainBroken, EXIT_CHAIN),
    (CorruptRecord, EXIT_CHAIN),
    (LedgerError, EXIT_ORDER),
    (ConfigError, EXIT_CONFIG),
    (EmptyCohort, EXIT_EMPTY),
    (MonotonicityViolation, EXIT_INTERNAL),
    (InvariantError, EXIT_INVARIANT),
    (ConcordanceWarning, EXIT_INVARIANT),
)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    with warnings.catch_warnings():
        if getattr(args, "strict", False):
            warnings.simplefilter("error", ConcordanceWarning)
        else:
            warnings.simplefilter("ignore", ConcordanceWarning)
        try:
            return args.func(args)
        except tuple(e for e, _ in _EXIT_FOR) as exc:
            code = next(c for e, c in _EXIT_FOR if isinstance(exc, e))
            print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
            return code


if __name__ == "__main__":
    sys.exit(main())
