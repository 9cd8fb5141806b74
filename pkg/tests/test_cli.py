import csv
import json
import subprocess
import sys

import pytest

from dxconcord import cli


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture
def ledger(tmp_path, fixture_file):
    path = tmp_path / "ledger.jsonl"
    assert run("ingest", fixture_file, path) == 0
    return path


def test_ingest_verify_replay(ledger, capsys):
    assert run("verify", ledger) == 0
    assert "valid: 63 records" in capsys.readouterr().out
    assert run("replay", ledger) == 0
    assert "21/21 consistent" in capsys.readouterr().out


def test_reingest_is_rejected_and_rolled_back(ledger, fixture_file):
    before = ledger.read_bytes()
    assert run("ingest", fixture_file, ledger) == cli.EXIT_ORDER
    assert ledger.read_bytes() == before


def test_tampered_ledger(ledger, capsys):
    lines = ledger.read_bytes().split(b"\n")
    lines[10] = lines[10].replace(b"validate", b"validatE", 1)
    assert lines[10].count(b"validatE") == 1
    ledger.write_bytes(b"\n".join(lines))
    assert run("verify", ledger) == cli.EXIT_CHAIN
    assert "record 10" in capsys.readouterr().out
    assert run("replay", ledger) == cli.EXIT_CHAIN
    assert run("analyze", ledger, "--out", ledger.parent / "o") == cli.EXIT_CHAIN


def test_analyze_fixture_outputs(tmp_path, fixture_file, capsys):
    out = tmp_path / "o"
    assert run("analyze", fixture_file, "--out", out) == 0
    table = capsys.readouterr().out
    assert "15/21 (71.4%)" in table and "5/21 (23.8%)" in table and "[83.9%, 100.0%]" in table
    assert sorted(p.name for p in out.iterdir()) == ["cases.csv", "plot.tsv", "summary.json", "table.txt"]
    summary = json.loads((out / "summary.json").read_text())
    assert summary["metrics"]["ccr"]["successes"] == 21
    assert summary["config"]["tau"] == 0.6


def test_format_subset(tmp_path, fixture_file):
    out = tmp_path / "o"
    assert run("analyze", fixture_file, "--out", out, "--format", "json") == 0
    assert sorted(p.name for p in out.iterdir()) == ["summary.json", "table.txt"]


def test_combined_column_recomputed_from_csv(tmp_path, fixture_file):
    out = tmp_path / "o"
    run("analyze", fixture_file, "--out", out, "--tau", "0.5")
    text = (out / "cases.csv").read_text().splitlines()
    rows = list(csv.DictReader(line for line in text if not line.startswith("#")))
    n = len(rows)
    exact = sum(int(r["m_exact"]) for r in rows)
    adjusted = sum(int(r["m_exact"]) + int(r["m_similar"]) for r in rows)
    cross = sum(r["classification"] == "cross_category" for r in rows)
    anym = sum(int(r["acm"]) for r in rows)
    table = (out / "table.txt").read_text()
    combined = {line[:27].strip(): line[-17:].strip() for line in table.splitlines() if line[:1].isalpha()}
    assert combined["Exact Primary Matches"].startswith(f"{exact}/{n} ")
    assert combined["Similarity-Adjusted"].startswith(f"{adjusted}/{n} ")
    assert combined["Cross-Category Cases"].startswith(f"{cross}/{n} ")
    assert combined["Cases with Any Match"] == f"{anym}/{n}"


def test_analyze_is_deterministic(tmp_path, fixture_file):
    a, b = tmp_path / "a", tmp_path / "b"
    run("analyze", fixture_file, "--out", a)
    run("analyze", fixture_file, "--out", b, "--workers", "4")
    for name in ("table.txt", "cases.csv", "summary.json", "plot.tsv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_config_errors(tmp_path, fixture_file):
    for bad in (["--tau", "1.01"], ["--tau", "-0.1"], ["--level", "1.2"]):
        assert run("analyze", fixture_file, "--out", tmp_path / "o", *bad) == cli.EXIT_CONFIG
    assert run("synth", "--seed", "1", "--out", tmp_path / "s.jsonl", "--p-exact", "0.9") == cli.EXIT_CONFIG


def test_usage_error(fixture_file, tmp_path):
    with pytest.raises(SystemExit) as info:
        run("analyze", fixture_file, "--format", "xml")
    assert info.value.code == 2


def test_schema_error_reports_line(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    good = {"case_id": "a", "physician_id": "p", "r0": {"primary": "x", "differentials": []}, "r1": {"primary": "x", "differentials": []}}
    bad.write_text(json.dumps(good) + "\n" + '{"case_id": "b",\n')
    assert run("analyze", bad, "--out", tmp_path / "o") == cli.EXIT_SCHEMA
    assert "line 2" in capsys.readouterr().err


def test_invariant_and_replay_exit_codes(tmp_path):
    base = {"case_id": "a", "physician_id": "p", "r0": {"primary": "x", "differentials": ["y"]}, "r1": {"primary": "x", "differentials": ["y"]}}
    f = tmp_path / "c.json"
    f.write_text(json.dumps([dict(base, r1={"primary": "y", "differentials": ["y"]})]))
    assert run("analyze", f, "--out", tmp_path / "o") == cli.EXIT_INVARIANT
    f.write_text(json.dumps([dict(base, actions=[{"kind": "add", "slot": "differential", "value": "z"}])]))
    assert run("analyze", f, "--out", tmp_path / "o") == cli.EXIT_REPLAY
    f.write_text("[]")
    assert run("analyze", f, "--out", tmp_path / "o") == cli.EXIT_EMPTY


def test_strict_mode_escalates_warnings(tmp_path):
    f = tmp_path / "c.json"
    case = {"case_id": "a", "physician_id": "p", "r0": {"primary": "x", "differentials": ["y"]}, "r1": {"primary": "x", "differentials": ["y"]}}
    f.write_text(json.dumps([case]))
    assert run("analyze", f, "--out", tmp_path / "o") == 0
    assert run("analyze", f, "--out", tmp_path / "o", "--strict") == cli.EXIT_INVARIANT


def test_synth_is_reproducible(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert run("synth", "--seed", "42", "--n-cases", "50", "--out", a) == 0
    assert run("synth", "--seed", "42", "--n-cases", "50", "--out", b) == 0
    assert a.read_bytes() == b.read_bytes()
    assert run("analyze", a, "--out", tmp_path / "o") == 0


def test_identity_cohort_is_excellent(tmp_path, capsys):
    f = tmp_path / "id.jsonl"
    args = ["--p-exact", "1", "--p-lexical", "0", "--p-reprioritize", "0", "--p-replace", "0", "--p-remove", "0", "--p-add", "0"]
    run("synth", "--seed", "3", "--n-cases", "30", "--out", f, *args)
    capsys.readouterr()
    run("analyze", f, "--out", tmp_path / "o")
    table = capsys.readouterr().out
    assert "30/30 (100.0%)" in table and "Excellent" in table


def test_fixture_command(tmp_path, fixture_file):
    out = tmp_path / "f.jsonl"
    assert run("fixture", "--out", out) == 0
    assert out.read_bytes() == fixture_file.read_bytes()


def test_console_script_entry():
    proc = subprocess.run([sys.executable, "-m", "dxconcord.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip().startswith("dxconcord ")
