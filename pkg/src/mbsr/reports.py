"""Checklist-style report emitters: matrix views, metrics, TBX, listings.

Every report is a pure function of (project, scoring state, spec) and
renders deterministically, so rerunning on the same project yields identical
bytes.  Matrix cells use ✓ (satisfied/pass), ✗ (violated/fail), ! (warn),
? (needs review), · (undetermined), and blank for not-applicable.

Reports render to CSV, Markdown, or minimal semantic HTML; matrix, metrics,
and TBX reports can also be drawn to an image file next to the delimited
output.
"""

from __future__ import annotations

import csv
import html as html_lib
import io
import re
from dataclasses import dataclass

from .characteristics import (
    CHARACTERISTIC_IDS,
    REFERENCE_GRAND_TOTAL,
    RULE_IDS,
    ScoreStatus,
    metrics as compute_metrics,
)
from .errors import DanglingEndpoint, NoScoringRun, UnsupportedCombination
from .lexicon import annotate_terms
from .model import Project
from .rules import VerdictStatus, lint
from .storage import tbx_scan

REPORT_KINDS = (
    "characteristic-matrix",
    "rule-matrix",
    "tbx",
    "metrics",
    "listing",
    "allocation-reference",
)
REPORT_FORMATS = ("csv", "markdown", "html")

_SCORE_SYMBOLS = {
    ScoreStatus.SATISFIED: "✓",
    ScoreStatus.VIOLATED: "✗",
    ScoreStatus.UNDETERMINED: "·",
}
_VERDICT_SYMBOLS = {
    VerdictStatus.PASS: "✓",
    VerdictStatus.FAIL: "✗",
    VerdictStatus.WARN: "!",
    VerdictStatus.NEEDS_REVIEW: "?",
    VerdictStatus.NOT_APPLICABLE: "",
}


@dataclass
class ReportSpec:
    kind: str
    format: str = "csv"
    scope: str = "project"


def _scoped_entities(project: Project, scope: str):
    if scope in (None, "", "project"):
        return [project.entities[eid] for eid in sorted(project.entities)]
    container = project.entities.get(scope)
    if container is None:
        raise DanglingEndpoint(f"report scope {scope!r} does not resolve")
    ids = [scope] + [m for m in container.members if m in project.entities]
    return [project.entities[eid] for eid in sorted(ids)]


def _characteristic_matrix_table(project: Project, scope: str):
    if project.scoring is None:
        raise NoScoringRun("run `score` before a characteristic-matrix report")
    status_of = {
        (s.entity_id, s.characteristic_id): s.status
        for s in project.scoring.statuses
    }
    header = ["id", *CHARACTERISTIC_IDS]
    rows = []
    for entity in _scoped_entities(project, scope):
        row = [entity.id]
        for cid in CHARACTERISTIC_IDS:
            status = status_of.get((entity.id, cid))
            row.append(_SCORE_SYMBOLS[status] if status is not None else "")
        rows.append(row)
    return "Characteristic matrix", header, rows


def _rule_matrix_table(project: Project, scope: str):
    header = ["id", *RULE_IDS]
    rows = []
    for entity in _scoped_entities(project, scope):
        report = lint(entity, project)
        verdict_of = {v.rule_id: v.status for v in report.verdicts}
        row = [entity.id]
        for rid in RULE_IDS:
            status = verdict_of.get(rid)
            row.append(_VERDICT_SYMBOLS[status] if status is not None else "")
        rows.append(row)
    return "Rule matrix", header, rows


def _tbx_table(project: Project, scope: str):
    summary = tbx_scan(project, None if scope == "project" else scope)
    header = ["marker", "count"]
    rows = [[marker, str(summary.counts[marker])] for marker in ("TBD", "TBC", "TBR", "TBN")]
    rows.append(["total", str(summary.total)])
    return f"TBX summary ({summary.scope})", header, rows


def _metrics_table(project: Project, scope: str):
    if project.scoring is None:
        raise NoScoringRun("run `score` before a metrics report")
    run = project.scoring
    triage = compute_metrics(project, run)
    header = ["section", "id", "name", "satisfied", "violated", "undetermined"]
    rows = []
    for cid in CHARACTERISTIC_IDS:
        counts = triage.per_characteristic[cid]
        rows.append(["characteristic", cid, project.characteristics[cid].name,
                     str(counts["satisfied"]), str(counts["violated"]),
                     str(counts["undetermined"])])
    for rid in RULE_IDS:
        counts = triage.per_rule[rid]
        warn_bucket = "satisfied" if not run.strict else "undetermined"
        satisfied = counts["pass"] + (counts["warn"] if warn_bucket == "satisfied" else 0)
        undetermined = counts["needs-review"] + (counts["warn"] if warn_bucket != "satisfied" else 0)
        rows.append(["rule", rid, project.rules[rid].name,
                     str(satisfied), str(counts["fail"]), str(undetermined)])
    per_entity: dict[str, dict[str, int]] = {}
    for status in run.statuses:
        bucket = per_entity.setdefault(
            status.entity_id, {"satisfied": 0, "violated": 0, "undetermined": 0})
        bucket[status.status.value] += 1
    for entity_id, _violated in triage.entity_ranking:
        counts = per_entity.get(entity_id, {"satisfied": 0, "violated": 0, "undetermined": 0})
        name = project.entities[entity_id].name if entity_id in project.entities else ""
        rows.append(["entity", entity_id, name, str(counts["satisfied"]),
                     str(counts["violated"]), str(counts["undetermined"])])
    return "Triage metrics", header, rows


def _listing_table(project: Project, scope: str):
    header = ["id", "name", "statement"]
    rows = []
    for entity in _scoped_entities(project, scope):
        rows.append([entity.id, entity.name, annotate_terms(entity.text, project.glossary)])
    return "Requirement listing", header, rows


def _allocation_table(project: Project, scope: str):
    matrix = project.allocation
    header = ["rule", "name", *CHARACTERISTIC_IDS, "total"]
    rows = []
    for rid in RULE_IDS:
        name = project.rules[rid].name if rid in project.rules else ""
        cells = [str(matrix.cell(rid, cid) or "") for cid in CHARACTERISTIC_IDS]
        rows.append([rid, name, *cells, str(matrix.row_total(rid))])
    totals = [str(matrix.column_total(cid)) for cid in CHARACTERISTIC_IDS]
    rows.append(["total", "", *totals, str(matrix.grand_total)])
    return (f"Allocation reference (provenance: {matrix.provenance}, "
            f"grand total {REFERENCE_GRAND_TOTAL})", header, rows)


_TABLES = {
    "characteristic-matrix": _characteristic_matrix_table,
    "rule-matrix": _rule_matrix_table,
    "tbx": _tbx_table,
    "metrics": _metrics_table,
    "listing": _listing_table,
    "allocation-reference": _allocation_table,
}


def _render_csv(title: str, header: list[str], rows: list[list[str]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def _render_markdown(title: str, header: list[str], rows: list[list[str]]) -> str:
    lines = [f"# {title}", ""]
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "|".join(" --- " for _ in header) + "|")
    for row in rows:
        lines.append("| " + " | ".join(cell.replace("|", "\\|") for cell in row) + " |")
    return "\n".join(lines) + "\n"


_UNDERLINE_RE = re.compile(r"_([^_\n]+)_")


def _render_html(title: str, header: list[str], rows: list[list[str]]) -> str:
    out = [
        "<!DOCTYPE html>",
        "<html><head><meta charset=\"utf-8\">",
        f"<title>{html_lib.escape(title)}</title></head><body>",
        f"<h1>{html_lib.escape(title)}</h1>",
        "<table border=\"1\">",
        "<tr>" + "".join(f"<th>{html_lib.escape(h)}</th>" for h in header) + "</tr>",
    ]
    for row in rows:
        cells = []
        for cell in row:
            escaped = html_lib.escape(cell)
            escaped = _UNDERLINE_RE.sub(r"<u>\1</u>", escaped)
            cells.append(f"<td>{escaped}</td>")
        out.append("<tr>" + "".join(cells) + "</tr>")
    out.append("</table></body></html>")
    return "\n".join(out) + "\n"


_RENDERERS = {"csv": _render_csv, "markdown": _render_markdown, "html": _render_html}


def emit_report(project: Project, spec: ReportSpec) -> str:
    """Render one report; deterministic byte-for-byte for fixed inputs."""
    if spec.kind not in REPORT_KINDS:
        raise UnsupportedCombination(f"unknown report kind {spec.kind!r}")
    if spec.format not in REPORT_FORMATS:
        raise UnsupportedCombination(f"unknown report format {spec.format!r}")
    title, header, rows = _TABLES[spec.kind](project, spec.scope)
    return _RENDERERS[spec.format](title, header, rows)


# --- figures ---------------------------------------------------------------

_FIGURE_KINDS = ("characteristic-matrix", "rule-matrix", "tbx", "metrics",
                 "allocation-reference")

_CELL_COLORS = {
    "✓": (0.22, 0.66, 0.32),
    "✗": (0.82, 0.22, 0.20),
    "!": (0.94, 0.72, 0.20),
    "?": (0.45, 0.62, 0.86),
    "·": (0.75, 0.75, 0.75),
    "": (1.0, 1.0, 1.0),
}


def render_figure(project: Project, spec: ReportSpec, path: str) -> None:
    """Draw the report as a figure file alongside the delimited output."""
    if spec.kind not in _FIGURE_KINDS:
        raise UnsupportedCombination(f"no figure rendering for {spec.kind!r}")
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    title, header, rows = _TABLES[spec.kind](project, spec.scope)
    if spec.kind in ("characteristic-matrix", "rule-matrix"):
        columns = header[1:]
        grid = [[_CELL_COLORS.get(cell, (1, 1, 1)) for cell in row[1:]] for row in rows]
        fig, ax = plt.subplots(
            figsize=(max(6, 0.3 * len(columns) + 2), max(3, 0.28 * len(rows) + 1.5)))
        ax.imshow(grid, aspect="auto")
        ax.set_xticks(range(len(columns)), columns, rotation=90, fontsize=7)
        ax.set_yticks(range(len(rows)), [row[0] for row in rows], fontsize=7)
        ax.set_title(title)
    elif spec.kind == "allocation-reference":
        body = rows[:-1]
        counts = [[int(c) if c else 0 for c in row[2:-1]] for row in body]
        fig, ax = plt.subplots(figsize=(8, 10))
        image = ax.imshow(counts, aspect="auto", cmap="Blues")
        ax.set_xticks(range(len(header) - 3), header[2:-1], rotation=90, fontsize=7)
        ax.set_yticks(range(len(body)), [row[0] for row in body], fontsize=7)
        ax.set_title(title)
        fig.colorbar(image, ax=ax, shrink=0.6)
    elif spec.kind == "tbx":
        markers = [row[0] for row in rows[:-1]]
        values = [int(row[1]) for row in rows[:-1]]
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.bar(markers, values, color="#4878a8")
        ax.set_ylabel("occurrences")
        ax.set_title(title)
    else:  # metrics
        char_rows = [row for row in rows if row[0] == "characteristic"]
        labels = [row[1] for row in char_rows]
        satisfied = [int(row[3]) for row in char_rows]
        violated = [int(row[4]) for row in char_rows]
        undetermined = [int(row[5]) for row in char_rows]
        fig, ax = plt.subplots(figsize=(8, 4.5))
        ax.bar(labels, satisfied, label="satisfied", color=_CELL_COLORS["✓"])
        ax.bar(labels, violated, bottom=satisfied, label="violated", color=_CELL_COLORS["✗"])
        bottoms = [s + v for s, v in zip(satisfied, violated)]
        ax.bar(labels, undetermined, bottom=bottoms, label="undetermined",
               color=_CELL_COLORS["·"])
        ax.set_ylabel("entities")
        ax.set_title(title)
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
