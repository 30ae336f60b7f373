"""Project persistence, CSV requirement intake, and the TBX placeholder scan.

A project saves to one self-contained JSON document (registries embedded) so
it can be reloaded anywhere without sidecar data packs.  Saving a project and
loading it back yields an equal project; saving twice yields identical
bytes.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from . import statement as stmt
from .characteristics import (
    AllocationMatrix,
    CharacteristicDef,
    CharacteristicStatus,
    CharacteristicApplicability,
    Derivation,
    ScoreStatus,
    ScoringRun,
    validate_matrix,
)
from .errors import (
    DanglingEndpoint,
    DuplicateIdInFile,
    MalformedFile,
    MissingHeader,
    NoModal,
    EmptySubject,
    ProjectInvalid,
    SchemaVersionMismatch,
)
from .lexicon import GlossaryTerm, TermLexicon, UnitDef, UnitRegistry, entity_textual_fields
from .model import (
    AttributeDef,
    Entity,
    EntityKind,
    Project,
    ProjectConfig,
    Relationship,
    RelationshipKind,
    set_attribute,
    create_entity,
    validate_project,
)
from .rules import Automation, RuleDef, Verdict, VerdictSource, VerdictStatus
from .characteristics import RuleApplicability
from .defaults import attribute_number_by_name

SCHEMA_VERSION = 1

TBX_RE = re.compile(r"\bTB[CDRN]\b")

CSV_REQUIRED_COLUMNS = ("id", "name", "statement")
CSV_OPTIONAL_COLUMNS = ("rationale", "verification_method", "verification_approach", "comments")


# --- serialization --------------------------------------------------------


def _slots_to_dict(slots: stmt.PatternSlots | None) -> dict | None:
    if slots is None:
        return None
    return {
        "condition": slots.condition,
        "subject": slots.subject,
        "modal": slots.modal,
        "action": slots.action,
        "object": slots.object,
        "constraint": slots.constraint,
    }


def _slots_from_dict(data: dict | None) -> stmt.PatternSlots | None:
    if data is None:
        return None
    return stmt.PatternSlots(
        subject=data["subject"],
        action=data["action"],
        constraint=data["constraint"],
        condition=data.get("condition"),
        object=data.get("object"),
        modal=data.get("modal", stmt.MODAL),
    )


def _verdict_to_dict(verdict: Verdict) -> dict:
    return {
        "rule": verdict.rule_id,
        "entity": verdict.entity_id,
        "status": verdict.status.value,
        "source": verdict.source.value,
        "attestor": verdict.attestor,
        "rationale": verdict.rationale,
        "timestamp": verdict.timestamp,
    }


def _verdict_from_dict(data: dict) -> Verdict:
    return Verdict(
        rule_id=data["rule"],
        entity_id=data["entity"],
        status=VerdictStatus(data["status"]),
        source=VerdictSource(data["source"]),
        attestor=data.get("attestor"),
        rationale=data.get("rationale"),
        timestamp=data.get("timestamp", ""),
    )


def project_to_dict(project: Project) -> dict:
    return {
        "mbsr_schema": SCHEMA_VERSION,
        "meta": {"name": project.name, "created": project.created},
        "config": {
            "id_pattern": project.config.id_pattern,
            "strict": project.config.strict,
            "condition_keywords": list(project.config.condition_keywords),
            "constraint_markers": list(project.config.constraint_markers),
            "range_markers": list(project.config.range_markers),
            "system_of_interest": project.config.system_of_interest,
            "allow_attest_automated": project.config.allow_attest_automated,
            "misspellings": list(project.config.misspellings),
        },
        "registries": {
            "attributes": [
                {
                    "number": a.number,
                    "name": a.name,
                    "group": a.group,
                    "minimum_set": a.minimum_set,
                    "value_kind": a.value_kind,
                    "derived_from_core": a.derived_from_core,
                    "applies_to": a.applies_to,
                }
                for _n, a in sorted(project.attributes.items())
            ],
            "rules": [
                {
                    "id": r.id,
                    "name": r.name,
                    "automation": r.automation.value,
                    "enabled": r.enabled,
                    "applicability": r.applicability.value,
                }
                for r in sorted(project.rules.values(), key=lambda r: int(r.id[1:]))
            ],
            "characteristics": [
                {
                    "id": c.id,
                    "name": c.name,
                    "applicability": c.applicability.value,
                    "derivation": c.derivation.value,
                }
                for c in sorted(project.characteristics.values(), key=lambda c: int(c.id[1:]))
            ],
            "allocation": {
                "provenance": project.allocation.provenance,
                "cells": {
                    rid: {
                        cid: count
                        for (r, cid), count in sorted(project.allocation.cells.items())
                        if r == rid
                    }
                    for rid in sorted({r for r, _c in project.allocation.cells})
                },
            },
        },
        "glossary": [
            {
                "term": g.term,
                "definitions": list(g.definitions),
                "is_acronym": g.is_acronym,
                "expansion": g.expansion,
            }
            for _t, g in sorted(project.glossary.items())
        ],
        "lexicons": {lx.category: list(lx.entries) for lx in project.lexicons.values()},
        "units": {
            "prefixes": {sym: factor for sym, factor in sorted(project.units.prefixes.items())},
            "dimensions": {label: dict(sorted(exps.items()))
                           for label, exps in sorted(project.units.dimension_formulas.items())},
            "units": [
                {
                    "symbol": u.symbol,
                    "name": u.name,
                    "dimension": u.dimension,
                    "kind": u.kind,
                    "reduction": u.reduction,
                    "exponents": dict(sorted(u.exponents.items())),
                }
                for _s, u in sorted(project.units.units.items())
            ],
        },
        "entities": [
            {
                "id": e.id,
                "name": e.name,
                "kind": e.kind.value,
                "slots": _slots_to_dict(e.slots),
                "text": e.text,
                "attributes": {str(n): v for n, v in sorted(e.attributes.items())},
                "version": e.version,
                "last_changed": e.last_changed,
                "root_flag": e.root_flag,
                "members": list(e.members),
            }
            for _eid, e in sorted(project.entities.items())
        ],
        "relationships": [
            {
                "kind": r.kind.value,
                "source": r.source,
                "target": r.target,
                "provenance": r.provenance,
            }
            for r in project.relationships
        ],
        "attestations": [_verdict_to_dict(v) for v in project.attestations],
        "scoring": None if project.scoring is None else {
            "run_id": project.scoring.run_id,
            "strict": project.scoring.strict,
            "timestamp": project.scoring.timestamp,
            "statuses": [
                {
                    "entity": s.entity_id,
                    "characteristic": s.characteristic_id,
                    "status": s.status.value,
                    "contributing": [list(pair) for pair in s.contributing],
                }
                for s in project.scoring.statuses
            ],
            "verdicts": [_verdict_to_dict(v) for v in project.scoring.verdicts],
        },
    }


def project_from_dict(data: dict) -> Project:
    try:
        schema = data["mbsr_schema"]
        if schema != SCHEMA_VERSION:
            raise SchemaVersionMismatch(
                f"project file is schema {schema!r}; this build reads {SCHEMA_VERSION}")
        config_data = data["config"]
        config = ProjectConfig(
            id_pattern=config_data["id_pattern"],
            strict=config_data["strict"],
            condition_keywords=tuple(config_data["condition_keywords"]),
            constraint_markers=tuple(config_data["constraint_markers"]),
            range_markers=tuple(config_data["range_markers"]),
            system_of_interest=config_data.get("system_of_interest"),
            allow_attest_automated=config_data.get("allow_attest_automated", False),
            misspellings=tuple(config_data.get("misspellings", ())),
        )
        registries = data["registries"]
        attributes = {
            a["number"]: AttributeDef(
                number=a["number"],
                name=a["name"],
                group=a["group"],
                minimum_set=a["minimum_set"],
                value_kind=a["value_kind"],
                derived_from_core=a.get("derived_from_core"),
                applies_to=a.get("applies_to", "all"),
            )
            for a in registries["attributes"]
        }
        rules = {
            r["id"]: RuleDef(
                id=r["id"],
                name=r["name"],
                automation=Automation(r["automation"]),
                enabled=r["enabled"],
                applicability=RuleApplicability(r["applicability"]),
            )
            for r in registries["rules"]
        }
        characteristics = {
            c["id"]: CharacteristicDef(
                id=c["id"],
                name=c["name"],
                applicability=CharacteristicApplicability(c["applicability"]),
                derivation=Derivation(c["derivation"]),
            )
            for c in registries["characteristics"]
        }
        allocation_data = registries["allocation"]
        cells = {
            (rid, cid): count
            for rid, row in allocation_data["cells"].items()
            for cid, count in row.items()
        }
        allocation = AllocationMatrix(cells=cells, provenance=allocation_data["provenance"])
        validate_matrix(allocation)

        glossary = {
            g["term"]: GlossaryTerm(
                term=g["term"],
                definitions=list(g["definitions"]),
                is_acronym=g["is_acronym"],
                expansion=g.get("expansion"),
            )
            for g in data["glossary"]
        }
        lexicons = {
            category: TermLexicon(category=category, entries=tuple(entries))
            for category, entries in data["lexicons"].items()
        }
        units_data = data["units"]
        units = UnitRegistry(
            prefixes={sym: float(f) for sym, f in units_data["prefixes"].items()},
            units={
                u["symbol"]: UnitDef(
                    symbol=u["symbol"],
                    name=u["name"],
                    dimension=u["dimension"],
                    kind=u["kind"],
                    reduction=u.get("reduction"),
                    exponents={k: int(v) for k, v in u["exponents"].items()},
                )
                for u in units_data["units"]
            },
            dimension_formulas={
                label: {k: int(v) for k, v in exps.items()}
                for label, exps in units_data["dimensions"].items()
            },
        )

        entities = {}
        for e in data["entities"]:
            if e["id"] in entities:
                raise MalformedFile(f"duplicate entity id {e['id']!r} in file")
            entities[e["id"]] = Entity(
                id=e["id"],
                name=e["name"],
                kind=EntityKind(e["kind"]),
                slots=_slots_from_dict(e.get("slots")),
                text=e.get("text", ""),
                attributes={int(n): v for n, v in e.get("attributes", {}).items()},
                version=e["version"],
                last_changed=e["last_changed"],
                root_flag=e.get("root_flag", False),
                members=list(e.get("members", [])),
            )
        relationships = [
            Relationship(
                kind=RelationshipKind(r["kind"]),
                source=r["source"],
                target=r["target"],
                provenance=r.get("provenance", "manual"),
            )
            for r in data["relationships"]
        ]
        attestations = [_verdict_from_dict(v) for v in data["attestations"]]
        scoring = None
        if data.get("scoring") is not None:
            s = data["scoring"]
            scoring = ScoringRun(
                run_id=s["run_id"],
                strict=s["strict"],
                timestamp=s["timestamp"],
                statuses=[
                    CharacteristicStatus(
                        entity_id=row["entity"],
                        characteristic_id=row["characteristic"],
                        status=ScoreStatus(row["status"]),
                        contributing=[tuple(pair) for pair in row["contributing"]],
                    )
                    for row in s["statuses"]
                ],
                verdicts=[_verdict_from_dict(v) for v in s["verdicts"]],
            )
        meta = data["meta"]
        return Project(
            name=meta["name"],
            created=meta["created"],
            config=config,
            attributes=attributes,
            rules=rules,
            characteristics=characteristics,
            allocation=allocation,
            glossary=glossary,
            lexicons=lexicons,
            units=units,
            entities=entities,
            relationships=relationships,
            attestations=attestations,
            scoring=scoring,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedFile(f"project file structure: {exc!r}") from exc


def dumps_project(project: Project) -> str:
    return json.dumps(project_to_dict(project), indent=2, sort_keys=True,
                      ensure_ascii=False) + "\n"


def save_project(project: Project, path: str | Path) -> None:
    """Write the project document; refuses to persist an invalid project."""
    findings = validate_project(project)
    if findings:
        raise ProjectInvalid(findings)
    Path(path).write_text(dumps_project(project), encoding="utf-8")


def load_project(path: str | Path) -> Project:
    path = Path(path)
    if not path.exists():
        raise MalformedFile(f"no such file: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedFile(
            f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}") from exc
    if not isinstance(data, dict):
        raise MalformedFile(f"{path}: top level must be an object")
    if "mbsr_schema" not in data:
        raise MalformedFile(f"{path}: missing mbsr_schema field")
    return project_from_dict(data)


# --- CSV intake -----------------------------------------------------------


@dataclass
class DraftRequirement:
    """One CSV row, parsed as far as it would go."""

    id: str
    name: str
    statement: str
    slots: stmt.PatternSlots | None = None
    attributes: dict[str, str] = field(default_factory=dict)
    findings: list[str] = field(default_factory=list)


def import_csv(path: str | Path, config: stmt.ParseConfig | None = None) -> list[DraftRequirement]:
    """Read draft requirements from CSV.

    Statements parse into slots best-effort: a row whose statement does not
    parse cleanly imports as raw text with a finding instead of failing the
    import.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise MissingHeader(f"{path}: no header row")
        header = [h.strip() for h in reader.fieldnames]
        missing = [c for c in CSV_REQUIRED_COLUMNS if c not in header]
        if missing:
            raise MissingHeader(f"{path}: header lacks columns {', '.join(missing)}")
        drafts: list[DraftRequirement] = []
        seen: set[str] = set()
        for row in reader:
            row_id = (row.get("id") or "").strip()
            if not row_id:
                continue
            if row_id in seen:
                raise DuplicateIdInFile(f"{path}: id {row_id!r} appears twice")
            seen.add(row_id)
            draft = DraftRequirement(
                id=row_id,
                name=(row.get("name") or "").strip(),
                statement=(row.get("statement") or "").strip(),
            )
            for column in CSV_OPTIONAL_COLUMNS:
                value = (row.get(column) or "").strip()
                if value:
                    draft.attributes[column] = value
            _parse_statement(draft, config)
            drafts.append(draft)
    return drafts


def _parse_statement(draft: DraftRequirement, config: stmt.ParseConfig | None) -> None:
    if not draft.statement:
        draft.findings.append("statement is empty")
        return
    try:
        result = stmt.parse(draft.statement, config)
    except NoModal:
        draft.findings.append("no 'shall' in statement")
        return
    except EmptySubject:
        draft.findings.append("no subject before 'shall'")
        return
    for finding in result.findings:
        draft.findings.append(finding.message)
    if result.confidence == 1.0 and stmt.assemble(result.slots) == _normalize_ws(draft.statement):
        draft.slots = result.slots


def _normalize_ws(text: str) -> str:
    return re.sub(r"\s+", " ", text).strip()


def apply_import(project: Project, drafts: list[DraftRequirement]) -> list[Entity]:
    """Create requirement entities (plus their attribute values) from drafts."""
    created: list[Entity] = []
    for draft in drafts:
        entity = create_entity(project, EntityKind.REQUIREMENT, draft.id,
                               draft.name, slots=draft.slots)
        if draft.slots is None and draft.statement:
            entity.text = _normalize_ws(draft.statement)
        for column, value in draft.attributes.items():
            number = attribute_number_by_name(project, column)
            if number is not None:
                set_attribute(project, entity, number, value)
        created.append(entity)
    return created


def export_csv(project: Project, path: str | Path) -> None:
    """Write requirements back out with the same columns import reads."""
    columns = list(CSV_REQUIRED_COLUMNS) + list(CSV_OPTIONAL_COLUMNS)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for entity in sorted(project.entities.values(), key=lambda e: e.id):
            if entity.kind is not EntityKind.REQUIREMENT:
                continue
            row = {"id": entity.id, "name": entity.name, "statement": entity.text}
            for column in CSV_OPTIONAL_COLUMNS:
                number = attribute_number_by_name(project, column)
                if number is not None and number in entity.attributes:
                    row[column] = entity.attributes[number]
            writer.writerow(row)


# --- TBX scan -------------------------------------------------------------


@dataclass
class TbxHit:
    entity_id: str
    field: str
    span: tuple[int, int]
    marker: str


@dataclass
class TbxSummary:
    scope: str
    counts: dict[str, int]
    hits: list[TbxHit]

    @property
    def total(self) -> int:
        return len(self.hits)


def tbx_scan(project: Project, scope: str | None = None) -> TbxSummary:
    """Count TBD/TBC/TBR/TBN placeholders across every field in scope.

    Scope is the whole project, or one set id (the set plus its members).
    Matching is whole-word and case-sensitive: ``TBX`` and ``tbd`` never hit.
    """
    if scope is None or scope == "project":
        entities = [project.entities[eid] for eid in sorted(project.entities)]
        scope_name = "project"
    else:
        container = project.entities.get(scope)
        if container is None:
            raise DanglingEndpoint(f"scope {scope!r} does not resolve")
        member_ids = [m for m in container.members if m in project.entities]
        entities = [container] + [project.entities[m] for m in member_ids]
        scope_name = scope
    counts = {marker: 0 for marker in ("TBD", "TBC", "TBR", "TBN")}
    hits: list[TbxHit] = []
    for entity in entities:
        fields: list[tuple[str, str]] = [("id", entity.id)]
        if entity.name:
            fields.append(("name", entity.name))
        fields.extend(entity_textual_fields(entity, project.attributes))
        for field_name, text in fields:
            for m in TBX_RE.finditer(text):
                marker = m.group(0)
                counts[marker] += 1
                hits.append(TbxHit(entity.id, field_name, (m.start(), m.end()), marker))
    return TbxSummary(scope=scope_name, counts=counts, hits=hits)
