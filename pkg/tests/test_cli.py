"""CLI exit codes, output surfaces, and the documented subcommand set."""

from __future__ import annotations

import json

import pytest

from mbsr.cli import main

CSV_TEXT = """id,name,statement,rationale,verification_method,verification_approach,comments
REQ-001,Telemetry,"When in science mode, the Orbiter shall transmit telemetry at no less than 2 kbps.",ops need,Test,end to end,fine
REQ-002,Margin,The rover shall provide adequate margin within 5 min.,policy,Analysis,budget,TBD value
"""


@pytest.fixture()
def project_path(tmp_path):
    path = tmp_path / "proj.json"
    assert main(["--project", str(path), "init", str(path), "--name", "demo"]) == 0
    return path


def run(project_path, *argv):
    return main(["--project", str(project_path), *argv])


def test_init_refuses_overwrite(project_path, capsys):
    assert run(project_path, "init", str(project_path)) == 2
    assert "exists" in capsys.readouterr().err


def test_lint_clean_project_exit_zero(project_path, capsys):
    assert run(project_path, "lint") == 0
    assert "linted 0" in capsys.readouterr().out


def test_import_then_lint_reports_failure(project_path, tmp_path, capsys):
    csv_path = tmp_path / "reqs.csv"
    csv_path.write_text(CSV_TEXT, encoding="utf-8")
    assert run(project_path, "import", str(csv_path)) == 0
    capsys.readouterr()
    code = run(project_path, "lint")
    out = capsys.readouterr().out
    assert code == 1
    assert "REQ-002" in out and "R7" in out and "text[" in out and "adequate" in out


def test_lint_json_output(project_path, tmp_path, capsys):
    csv_path = tmp_path / "reqs.csv"
    csv_path.write_text(CSV_TEXT, encoding="utf-8")
    run(project_path, "import", str(csv_path))
    capsys.readouterr()
    code = main(["--project", str(project_path), "--json", "lint"])
    payload = json.loads(capsys.readouterr().out)
    assert code == 1
    assert payload["command"] == "lint"
    assert any(r["entity"] == "REQ-002" and r["verdicts"]["R7"] == "fail"
               for r in payload["reports"])


def test_lint_single_entity(project_path, tmp_path, capsys):
    csv_path = tmp_path / "reqs.csv"
    csv_path.write_text(CSV_TEXT, encoding="utf-8")
    run(project_path, "import", str(csv_path))
    capsys.readouterr()
    assert run(project_path, "lint", "--entity", "REQ-001") == 0
    out = capsys.readouterr().out
    assert "REQ-002" not in out
    assert run(project_path, "lint", "--entity", "NOPE-999") == 2


def test_report_markdown_alias(project_path, tmp_path, capsys):
    out_file = tmp_path / "alloc.md"
    assert run(project_path, "report", "allocation-reference", "--format", "md",
               "-o", str(out_file)) == 0
    text = out_file.read_text(encoding="utf-8")
    assert text.startswith("# Allocation reference")
    assert "| 146 |" in text.splitlines()[-1]


def test_report_before_score_exits_two(project_path, capsys):
    assert run(project_path, "report", "characteristic-matrix", "--format", "csv") == 2
    assert "score" in capsys.readouterr().err


def test_score_then_report_and_figure(project_path, tmp_path, capsys):
    csv_path = tmp_path / "reqs.csv"
    csv_path.write_text(CSV_TEXT, encoding="utf-8")
    run(project_path, "import", str(csv_path))
    assert run(project_path, "score") == 1  # REQ-002 violates
    out_file = tmp_path / "matrix.csv"
    fig_file = tmp_path / "matrix.png"
    capsys.readouterr()
    assert run(project_path, "report", "characteristic-matrix", "--format", "csv",
               "-o", str(out_file), "--figure", str(fig_file)) == 0
    assert out_file.exists() and "REQ-001" in out_file.read_text(encoding="utf-8")
    assert fig_file.exists() and fig_file.stat().st_size > 0


def test_attest_flow(project_path, tmp_path, capsys):
    csv_path = tmp_path / "reqs.csv"
    csv_path.write_text(CSV_TEXT, encoding="utf-8")
    run(project_path, "import", str(csv_path))
    assert run(project_path, "attest", "REQ-001", "R31", "pass",
               "--by", "jsw", "--why", "no implementation named") == 0
    assert run(project_path, "attest", "REQ-001", "R7", "pass", "--by", "jsw") == 2


def test_trace_commands(project_path, tmp_path, capsys):
    csv_path = tmp_path / "reqs.csv"
    csv_path.write_text(CSV_TEXT, encoding="utf-8")
    run(project_path, "import", str(csv_path))
    capsys.readouterr()
    assert run(project_path, "trace", "orphans") == 1
    out = capsys.readouterr().out
    assert "REQ-001" in out and "REQ-002" in out
    assert run(project_path, "trace", "coverage") == 0
    assert run(project_path, "trace", "cycles") == 0


def test_lint_strict_treats_warns_as_blocking(project_path, tmp_path, capsys):
    csv_path = tmp_path / "warn.csv"
    csv_path.write_text(
        "id,name,statement\n"
        'REQ-001,Qualifier,"When armed, the rover shall log all faults within 5 s."\n',
        encoding="utf-8")
    run(project_path, "import", str(csv_path))
    capsys.readouterr()
    assert run(project_path, "lint") == 0  # R32 warn is advisory by default
    assert run(project_path, "lint", "--strict") == 1


def test_tbx_command(project_path, tmp_path, capsys):
    csv_path = tmp_path / "reqs.csv"
    csv_path.write_text(CSV_TEXT, encoding="utf-8")
    run(project_path, "import", str(csv_path))
    capsys.readouterr()
    assert run(project_path, "tbx") == 0
    out = capsys.readouterr().out
    assert "TBD: 1" in out


def test_glossary_commands(project_path, capsys):
    assert run(project_path, "glossary", "add", "sample container",
               "--def", "the sealed box") == 0
    capsys.readouterr()
    assert run(project_path, "glossary", "check") == 0
    out = capsys.readouterr().out
    assert "0 undefined candidate(s)" in out


def test_validate_command(project_path, capsys):
    assert run(project_path, "validate") == 0
    assert "consistent" in capsys.readouterr().out


def test_missing_project_file_exits_two(tmp_path, capsys):
    assert main(["--project", str(tmp_path / "nope.json"), "lint"]) == 2
