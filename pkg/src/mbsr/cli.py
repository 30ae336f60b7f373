"""Command-line surface.

Exit codes: 0 = clean, 1 = fail-severity findings present, 2 = usage, IO, or
schema error.  Pass ``--json`` for machine-readable output on any command.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import characteristics, defaults, reports, rules, storage, trace
from .errors import MbsrError
from .lexicon import GlossaryTerm, multiply_defined_terms, undefined_terms
from .model import Project, ProjectConfig, validate_project
from .rules import VerdictStatus


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mbsr",
        description="Structured-requirements lint, scoring, traceability, and reports.",
    )
    parser.add_argument("--project", "-p", default="project.mbsr.json",
                        help="project file (default: %(default)s)")
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="create a new project file")
    p.add_argument("path")
    p.add_argument("--name", default="untitled")
    p.add_argument("--id-pattern", default=None)

    p = sub.add_parser("import", help="import draft requirements from CSV")
    p.add_argument("csv")

    p = sub.add_parser("lint", help="run the writing rules")
    p.add_argument("--entity", default=None)
    p.add_argument("--strict", action="store_true")

    p = sub.add_parser("attest", help="record a human rule judgment")
    p.add_argument("entity")
    p.add_argument("rule")
    p.add_argument("status", choices=["pass", "fail"])
    p.add_argument("--by", required=True, dest="attestor")
    p.add_argument("--why", default=None, dest="rationale")

    p = sub.add_parser("score", help="score characteristics and write satisfy/violate edges")
    p.add_argument("--strict", action="store_true")

    p = sub.add_parser("trace", help="traceability analyses")
    p.add_argument("analysis", choices=["orphans", "unverified", "cycles", "coverage"])

    p = sub.add_parser("tbx", help="scan for TBD/TBC/TBR/TBN placeholders")
    p.add_argument("--scope", default=None)

    p = sub.add_parser("report", help="emit a report document")
    p.add_argument("kind", choices=list(reports.REPORT_KINDS))
    p.add_argument("--format", default="csv",
                   choices=[*reports.REPORT_FORMATS, "md"])
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--figure", default=None, help="also render a figure image to this path")
    p.add_argument("--scope", default="project")

    p = sub.add_parser("glossary", help="manage and check the glossary")
    glossary_sub = p.add_subparsers(dest="glossary_command", required=True)
    p_add = glossary_sub.add_parser("add")
    p_add.add_argument("term")
    p_add.add_argument("--def", action="append", required=True, dest="definitions")
    p_add.add_argument("--acronym", default=None, dest="expansion")
    glossary_sub.add_parser("check")

    sub.add_parser("validate", help="check project integrity")
    return parser


def _emit(args, payload: dict, human_lines: list[str]) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False))
    else:
        for line in human_lines:
            print(line)


def _load(args) -> Project:
    return storage.load_project(args.project)


def _finding_line(finding: rules.Finding) -> str:
    rid = finding.rule_id or "-"
    start, end = finding.span
    return (f"{finding.entity_id}  {rid} {finding.severity.value}  "
            f"{finding.field}[{start}:{end}]  {finding.message}")


def _finding_dict(finding: rules.Finding) -> dict:
    return {
        "rule": finding.rule_id,
        "entity": finding.entity_id,
        "field": finding.field,
        "span": list(finding.span),
        "message": finding.message,
        "severity": finding.severity.value,
    }


def _cmd_init(args) -> int:
    path = Path(args.path)
    if path.exists():
        raise MbsrError(f"{path} already exists")
    config = ProjectConfig()
    if args.id_pattern:
        config = ProjectConfig(id_pattern=args.id_pattern)
    project = defaults.new_project(name=args.name, config=config)
    storage.save_project(project, path)
    _emit(args, {"command": "init", "path": str(path), "name": args.name},
          [f"created {path}"])
    return 0


def _cmd_import(args) -> int:
    project = _load(args)
    drafts = storage.import_csv(args.csv, project.parse_config())
    created = storage.apply_import(project, drafts)
    storage.save_project(project, args.project)
    lines = [f"imported {len(created)} requirement(s) from {args.csv}"]
    rows = []
    for draft in drafts:
        rows.append({"id": draft.id, "parsed": draft.slots is not None,
                     "findings": draft.findings})
        for message in draft.findings:
            lines.append(f"  {draft.id}: {message}")
    _emit(args, {"command": "import", "imported": len(created), "drafts": rows}, lines)
    return 0


def _cmd_lint(args) -> int:
    project = _load(args)
    strict = args.strict or project.config.strict
    if args.entity is not None:
        if args.entity not in project.entities:
            raise MbsrError(f"entity {args.entity!r} does not resolve")
        entities = [project.entities[args.entity]]
    else:
        entities = [project.entities[eid] for eid in sorted(project.entities)]
    lines = []
    payload_reports = []
    worst = 0
    for entity in entities:
        report = rules.lint(entity, project)
        fails = [v for v in report.verdicts if v.status is VerdictStatus.FAIL]
        warns = [v for v in report.verdicts if v.status is VerdictStatus.WARN]
        if fails or (strict and warns):
            worst = 1
        for finding in report.findings:
            lines.append(_finding_line(finding))
        payload_reports.append({
            "entity": entity.id,
            "verdicts": {v.rule_id: v.status.value for v in report.verdicts},
            "findings": [_finding_dict(f) for f in report.findings],
        })
    summary = f"linted {len(entities)} entit{'y' if len(entities) == 1 else 'ies'}"
    lines.append(summary if worst == 0 else summary + "; fail-severity findings present")
    _emit(args, {"command": "lint", "strict": strict, "reports": payload_reports,
                 "exit_code": worst}, lines)
    return worst


def _cmd_attest(args) -> int:
    project = _load(args)
    verdict = rules.attest(project, args.entity, args.rule, args.status,
                           attestor=args.attestor, rationale=args.rationale)
    storage.save_project(project, args.project)
    _emit(args, {"command": "attest", "entity": verdict.entity_id, "rule": verdict.rule_id,
                 "status": verdict.status.value, "attestor": verdict.attestor},
          [f"attested {verdict.rule_id} {verdict.status.value} on {verdict.entity_id}"])
    return 0


def _cmd_score(args) -> int:
    project = _load(args)
    run = characteristics.run_scoring(project, strict=args.strict or None)
    storage.save_project(project, args.project)
    violated = sum(1 for s in run.statuses if s.status is characteristics.ScoreStatus.VIOLATED)
    satisfied = sum(1 for s in run.statuses if s.status is characteristics.ScoreStatus.SATISFIED)
    undetermined = len(run.statuses) - violated - satisfied
    lines = [
        f"{run.run_id}: {satisfied} satisfied, {violated} violated, "
        f"{undetermined} undetermined (strict={str(run.strict).lower()})",
    ]
    _emit(args, {"command": "score", "run": run.run_id, "strict": run.strict,
                 "satisfied": satisfied, "violated": violated,
                 "undetermined": undetermined}, lines)
    return 1 if violated else 0


def _cmd_trace(args) -> int:
    project = _load(args)
    graph = trace.build_graph(project)
    if args.analysis == "orphans":
        result = trace.orphans(graph)
        _emit(args, {"command": "trace", "analysis": "orphans", "entities": result},
              [*result, f"{len(result)} orphan(s)"])
        return 1 if result else 0
    if args.analysis == "unverified":
        result = trace.unverified(graph)
        _emit(args, {"command": "trace", "analysis": "unverified", "entities": result},
              [*result, f"{len(result)} unverified requirement(s)"])
        return 1 if result else 0
    if args.analysis == "cycles":
        result = trace.cycles(graph)
        lines = [" -> ".join(cycle) for cycle in result]
        lines.append(f"{len(result)} cycle(s)")
        _emit(args, {"command": "trace", "analysis": "cycles", "cycles": result}, lines)
        return 1 if result else 0
    summary = trace.coverage_summary(graph)
    lines = [f"{kind}: {count}" for kind, count in sorted(summary.edge_counts.items())]
    lines.append(f"requirements: {summary.requirements_total}")
    lines.append(f"with parents: {summary.pct_with_parents}%")
    lines.append(f"verified: {summary.pct_verified}%")
    _emit(args, {"command": "trace", "analysis": "coverage",
                 "edge_counts": summary.edge_counts,
                 "requirements_total": summary.requirements_total,
                 "pct_with_parents": summary.pct_with_parents,
                 "pct_verified": summary.pct_verified}, lines)
    return 0


def _cmd_tbx(args) -> int:
    project = _load(args)
    summary = storage.tbx_scan(project, args.scope)
    lines = []
    for hit in summary.hits:
        start, end = hit.span
        lines.append(f"{hit.entity_id}  {hit.field}[{start}:{end}]  {hit.marker}")
    lines.append(", ".join(f"{m}: {summary.counts[m]}" for m in ("TBD", "TBC", "TBR", "TBN"))
                 + f", total: {summary.total}")
    _emit(args, {"command": "tbx", "scope": summary.scope, "counts": summary.counts,
                 "total": summary.total,
                 "hits": [{"entity": h.entity_id, "field": h.field,
                           "span": list(h.span), "marker": h.marker}
                          for h in summary.hits]}, lines)
    return 0


def _cmd_report(args) -> int:
    project = _load(args)
    fmt = "markdown" if args.format == "md" else args.format
    spec = reports.ReportSpec(kind=args.kind, format=fmt, scope=args.scope)
    document = reports.emit_report(project, spec)
    if args.output:
        Path(args.output).write_text(document, encoding="utf-8")
    if args.figure:
        reports.render_figure(project, spec, args.figure)
    if args.json:
        _emit(args, {"command": "report", "kind": args.kind, "format": args.format,
                     "output": args.output, "figure": args.figure,
                     "document": None if args.output else document}, [])
    elif not args.output:
        sys.stdout.write(document)
    else:
        print(f"wrote {args.output}" + (f" and {args.figure}" if args.figure else ""))
    return 0


def _cmd_glossary(args) -> int:
    project = _load(args)
    if args.glossary_command == "add":
        term = args.term
        existing = project.glossary.get(term)
        if existing is not None:
            existing.definitions.extend(args.definitions)
            if args.expansion:
                existing.is_acronym = True
                existing.expansion = args.expansion
        else:
            project.glossary[term] = GlossaryTerm(
                term=term,
                definitions=list(args.definitions),
                is_acronym=args.expansion is not None,
                expansion=args.expansion,
            )
        storage.save_project(project, args.project)
        _emit(args, {"command": "glossary", "action": "add", "term": term},
              [f"defined {term!r} ({len(project.glossary[term].definitions)} definition(s))"])
        return 0
    undefined = undefined_terms(project)
    multiple = multiply_defined_terms(project)
    lines = [f"undefined term candidate: {t}" for t in undefined]
    lines += [f"multiply defined: {t}" for t in multiple]
    lines.append(f"{len(undefined)} undefined candidate(s), {len(multiple)} multiply defined")
    _emit(args, {"command": "glossary", "action": "check", "undefined": undefined,
                 "multiply_defined": multiple}, lines)
    return 0


def _cmd_validate(args) -> int:
    project = _load(args)
    findings = validate_project(project)
    lines = [f"{f.location}: {f.message}" for f in findings]
    lines.append("project is consistent" if not findings
                 else f"{len(findings)} integrity finding(s)")
    _emit(args, {"command": "validate",
                 "findings": [{"location": f.location, "message": f.message}
                              for f in findings]}, lines)
    return 1 if findings else 0


_COMMANDS = {
    "init": _cmd_init,
    "import": _cmd_import,
    "lint": _cmd_lint,
    "attest": _cmd_attest,
    "score": _cmd_score,
    "trace": _cmd_trace,
    "tbx": _cmd_tbx,
    "report": _cmd_report,
    "glossary": _cmd_glossary,
    "validate": _cmd_validate,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except MbsrError as exc:
        if args.json:
            print(json.dumps({"command": args.command, "error": str(exc),
                              "error_type": type(exc).__name__, "exit_code": 2},
                             indent=2, sort_keys=True))
        else:
            print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
