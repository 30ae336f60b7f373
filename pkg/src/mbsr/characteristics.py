"""The fifteen quality characteristics and the rule-allocation matrix.

Characteristics C1-C9 describe individual needs and requirements, C10-C15
describe sets.  The allocation matrix records which rules help establish
which characteristics; its row totals, column totals, and grand total (146)
are fixed reference values and any matrix that breaks them is rejected at
load.  Scoring aggregates rule verdicts per characteristic into
satisfied/violated/undetermined statuses and the corresponding satisfy or
violate edges.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, Iterable

from .errors import IncompleteReport, MalformedFile, MarginalsMismatch

if TYPE_CHECKING:
    from .model import Entity, Project, Relationship
    from .rules import Finding, RuleReport, Verdict

CHARACTERISTIC_IDS = tuple(f"C{i}" for i in range(1, 16))
INDIVIDUAL_CHARACTERISTICS = tuple(f"C{i}" for i in range(1, 10))
SET_CHARACTERISTICS = tuple(f"C{i}" for i in range(10, 16))
RULE_IDS = tuple(f"R{i}" for i in range(1, 43))

# Reference marginal totals the loader enforces; any accepted matrix
# reproduces these exactly.
REFERENCE_ROW_TOTALS: dict[str, int] = {
    "R1": 5, "R2": 4, "R3": 5, "R4": 6, "R5": 2, "R6": 4, "R7": 3, "R8": 2,
    "R9": 4, "R10": 2, "R11": 4, "R12": 4, "R13": 2, "R14": 2, "R15": 2,
    "R16": 3, "R17": 2, "R18": 5, "R19": 2, "R20": 2, "R21": 1, "R22": 2,
    "R23": 3, "R24": 3, "R25": 1, "R26": 4, "R27": 3, "R28": 2, "R29": 2,
    "R30": 3, "R31": 1, "R32": 3, "R33": 6, "R34": 4, "R35": 3, "R36": 7,
    "R37": 6, "R38": 5, "R39": 7, "R40": 4, "R41": 6, "R42": 5,
}
REFERENCE_COLUMN_TOTALS: dict[str, int] = {
    "C1": 2, "C2": 3, "C3": 30, "C4": 16, "C5": 8, "C6": 2, "C7": 25,
    "C8": 11, "C9": 10, "C10": 4, "C11": 10, "C12": 3, "C13": 8, "C14": 7,
    "C15": 7,
}
REFERENCE_GRAND_TOTAL = 146


class CharacteristicApplicability(Enum):
    NEEDS_AND_REQUIREMENTS = "needs-and-requirements"
    SETS = "sets"


class Derivation(Enum):
    FORMAL_TRANSFORMATION = "formal-transformation"
    AGREED_TO_OBLIGATION = "agreed-to-obligation"


class RuleApplicability(Enum):
    """Which entity kinds a rule applies to, derived from matrix columns."""

    INDIVIDUAL = "individual"
    SET = "set"
    BOTH = "both"


class ScoreStatus(Enum):
    SATISFIED = "satisfied"
    VIOLATED = "violated"
    UNDETERMINED = "undetermined"


@dataclass
class CharacteristicDef:
    id: str
    name: str
    applicability: CharacteristicApplicability
    derivation: Derivation


@dataclass
class AllocationMatrix:
    """Rule x characteristic contribution counts with fixed marginals."""

    cells: dict[tuple[str, str], int]
    provenance: str = "reconstructed"

    def cell(self, rule_id: str, characteristic_id: str) -> int:
        return self.cells.get((rule_id, characteristic_id), 0)

    def row_total(self, rule_id: str) -> int:
        return sum(self.cell(rule_id, cid) for cid in CHARACTERISTIC_IDS)

    def column_total(self, characteristic_id: str) -> int:
        return sum(self.cell(rid, characteristic_id) for rid in RULE_IDS)

    @property
    def grand_total(self) -> int:
        return sum(self.cells.values())

    def rules_for(self, characteristic_id: str) -> tuple[str, ...]:
        return tuple(rid for rid in RULE_IDS if self.cell(rid, characteristic_id) > 0)

    def characteristics_for(self, rule_id: str) -> tuple[str, ...]:
        return tuple(cid for cid in CHARACTERISTIC_IDS if self.cell(rule_id, cid) > 0)

    def applicability(self, rule_id: str) -> RuleApplicability:
        individual = any(self.cell(rule_id, cid) > 0 for cid in INDIVIDUAL_CHARACTERISTICS)
        set_side = any(self.cell(rule_id, cid) > 0 for cid in SET_CHARACTERISTICS)
        if individual and set_side:
            return RuleApplicability.BOTH
        if set_side:
            return RuleApplicability.SET
        return RuleApplicability.INDIVIDUAL


@dataclass
class CharacteristicStatus:
    entity_id: str
    characteristic_id: str
    status: ScoreStatus
    contributing: list[tuple[str, str]] = field(default_factory=list)  # (rule id, verdict status)


def validate_matrix(matrix: AllocationMatrix) -> None:
    """Raise ``MarginalsMismatch`` naming the first marginal that is off."""
    for rid in RULE_IDS:
        expected = REFERENCE_ROW_TOTALS[rid]
        actual = matrix.row_total(rid)
        if actual != expected:
            raise MarginalsMismatch(f"{rid} expected {expected}, got {actual}")
    for cid in CHARACTERISTIC_IDS:
        expected = REFERENCE_COLUMN_TOTALS[cid]
        actual = matrix.column_total(cid)
        if actual != expected:
            raise MarginalsMismatch(f"{cid} expected {expected}, got {actual}")
    if matrix.grand_total != REFERENCE_GRAND_TOTAL:
        raise MarginalsMismatch(
            f"grand total expected {REFERENCE_GRAND_TOTAL}, got {matrix.grand_total}")


def parse_allocation_matrix(text: str) -> AllocationMatrix:
    """Parse and validate the CSV allocation-matrix format."""
    provenance = "reconstructed"
    rows: list[str] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = re.match(r"#\s*provenance:\s*(\S+)", line)
            if m:
                provenance = m.group(1)
            continue
        rows.append(line)
    if not rows:
        raise MalformedFile("allocation matrix: no data rows")
    header = [c.strip() for c in rows[0].split(",")]
    if header != ["rule", *CHARACTERISTIC_IDS]:
        raise MalformedFile("allocation matrix: header must be rule,C1,...,C15")
    cells: dict[tuple[str, str], int] = {}
    seen: set[str] = set()
    for line in rows[1:]:
        cols = [c.strip() for c in line.split(",")]
        if len(cols) != 16:
            raise MalformedFile(f"allocation matrix: row {cols[0]!r} needs 16 columns")
        rid = cols[0]
        if rid not in REFERENCE_ROW_TOTALS:
            raise MalformedFile(f"allocation matrix: unknown rule {rid!r}")
        if rid in seen:
            raise MalformedFile(f"allocation matrix: duplicate row {rid!r}")
        seen.add(rid)
        for cid, value in zip(CHARACTERISTIC_IDS, cols[1:]):
            try:
                count = int(value)
            except ValueError:
                raise MalformedFile(f"allocation matrix: non-integer cell in {rid}") from None
            if count < 0:
                raise MalformedFile(f"allocation matrix: negative cell in {rid}")
            if count:
                cells[(rid, cid)] = count
    if seen != set(RULE_IDS):
        missing = sorted(set(RULE_IDS) - seen, key=lambda r: int(r[1:]))
        raise MalformedFile(f"allocation matrix: missing rows {', '.join(missing)}")
    matrix = AllocationMatrix(cells=cells, provenance=provenance)
    validate_matrix(matrix)
    return matrix


def load_allocation_matrix(path: str | Path) -> AllocationMatrix:
    return parse_allocation_matrix(Path(path).read_text(encoding="utf-8"))


def parse_characteristics_file(text: str) -> dict[str, CharacteristicDef]:
    defs: dict[str, CharacteristicDef] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        cols = [c.strip() for c in line.split("|")]
        if len(cols) != 4:
            raise MalformedFile(f"characteristics line {line_no}: need 4 columns")
        cid, name, applicability, derivation = cols
        defs[cid] = CharacteristicDef(
            id=cid,
            name=name,
            applicability=CharacteristicApplicability(applicability),
            derivation=Derivation(derivation),
        )
    return defs


def applicable_characteristics(kind_is_set: bool) -> tuple[str, ...]:
    return SET_CHARACTERISTICS if kind_is_set else INDIVIDUAL_CHARACTERISTICS


def score(
    entity: "Entity",
    rule_report: "RuleReport",
    matrix: AllocationMatrix,
    strict: bool = False,
    enabled_rules: set[str] | None = None,
) -> tuple[list[CharacteristicStatus], list["Relationship"]]:
    """Aggregate one entity's rule verdicts into characteristic statuses.

    A characteristic is satisfied when every allocated rule passed (warnings
    count as passing unless ``strict``), violated when any allocated rule
    failed, and undetermined otherwise -- unreviewed manual rules therefore
    hold a characteristic at undetermined rather than violating it.  Returns
    the statuses plus the satisfy/violate edges they imply.
    """
    from .model import Relationship, RelationshipKind  # deferred: avoids import cycle
    from .rules import VerdictStatus

    by_rule = {v.rule_id: v for v in rule_report.verdicts}
    statuses: list[CharacteristicStatus] = []
    edges: list[Relationship] = []
    for cid in applicable_characteristics(entity.kind.is_set):
        allocated = matrix.rules_for(cid)
        if enabled_rules is not None:
            allocated = tuple(rid for rid in allocated if rid in enabled_rules)
        missing = [rid for rid in allocated if rid not in by_rule]
        if missing:
            raise IncompleteReport(
                f"{entity.id}: report lacks verdicts for {', '.join(missing)} ({cid})")
        contributing = [(rid, by_rule[rid].status.value) for rid in allocated]
        verdict_statuses = [by_rule[rid].status for rid in allocated]
        passing = {VerdictStatus.PASS} if strict else {VerdictStatus.PASS, VerdictStatus.WARN}
        if any(s is VerdictStatus.FAIL for s in verdict_statuses):
            status = ScoreStatus.VIOLATED
        elif verdict_statuses and all(s in passing for s in verdict_statuses):
            status = ScoreStatus.SATISFIED
        else:
            status = ScoreStatus.UNDETERMINED
        statuses.append(CharacteristicStatus(
            entity_id=entity.id,
            characteristic_id=cid,
            status=status,
            contributing=contributing,
        ))
        if status is ScoreStatus.SATISFIED:
            edges.append(Relationship(RelationshipKind.SATISFY, entity.id, cid, "scoring"))
        elif status is ScoreStatus.VIOLATED:
            edges.append(Relationship(RelationshipKind.VIOLATE, entity.id, cid, "scoring"))
    return statuses, edges


def set_checks(set_entity: "Entity", members: Iterable["Entity"], context: "Project") -> list["Finding"]:
    """Cross-member findings for the set-applicable structural rules
    (duplicate statements, unit drift, unlinked members, malformed sets)."""
    from .rules import cross_member_findings  # deferred: avoids import cycle

    return cross_member_findings(set_entity, list(members), context)


@dataclass
class ScoringRun:
    """One complete lint + score pass over a project."""

    run_id: str
    strict: bool
    timestamp: str
    statuses: list[CharacteristicStatus] = field(default_factory=list)
    verdicts: list["Verdict"] = field(default_factory=list)


@dataclass
class TriageMetrics:
    per_characteristic: dict[str, dict[str, int]]
    per_rule: dict[str, dict[str, int]]
    entity_ranking: list[tuple[str, int]]


def metrics(project: "Project", run: ScoringRun) -> TriageMetrics:
    """Triage counts per characteristic, per rule, and per entity (worst
    first, ties broken by id)."""
    per_characteristic = {
        cid: {"satisfied": 0, "violated": 0, "undetermined": 0}
        for cid in CHARACTERISTIC_IDS
    }
    violated_by_entity: dict[str, int] = {eid: 0 for eid in project.entities}
    for status in run.statuses:
        per_characteristic[status.characteristic_id][status.status.value] += 1
        if status.status is ScoreStatus.VIOLATED:
            violated_by_entity[status.entity_id] = violated_by_entity.get(status.entity_id, 0) + 1

    per_rule = {
        rid: {"pass": 0, "fail": 0, "warn": 0, "needs-review": 0, "not-applicable": 0}
        for rid in RULE_IDS
    }
    for verdict in run.verdicts:
        per_rule[verdict.rule_id][verdict.status.value] += 1

    ranking = sorted(violated_by_entity.items(), key=lambda kv: (-kv[1], kv[0]))
    return TriageMetrics(
        per_characteristic=per_characteristic,
        per_rule=per_rule,
        entity_ranking=ranking,
    )


def run_scoring(project: "Project", strict: bool | None = None) -> ScoringRun:
    """Lint and score every entity, replacing all scoring edges.

    Strictness defaults to the project's strict-warn config.  Manual satisfy
    or violate edges are left untouched; edges from prior scoring runs are
    removed before the new ones are written.
    """
    from .clock import utc_now_iso
    from .rules import lint

    if strict is None:
        strict = project.config.strict
    previous = project.scoring
    number = int(previous.run_id.split("-")[1]) + 1 if previous else 1
    run = ScoringRun(run_id=f"run-{number}", strict=strict, timestamp=utc_now_iso())

    enabled = {rid for rid, rdef in project.rules.items() if rdef.enabled}
    new_edges = []
    for entity in sorted(project.entities.values(), key=lambda e: e.id):
        report = lint(entity, project)
        run.verdicts.extend(report.verdicts)
        statuses, edges = score(entity, report, project.allocation, strict, enabled)
        run.statuses.extend(statuses)
        new_edges.extend(edges)
    project.relationships = [r for r in project.relationships if r.provenance == "manual"]
    for edge in new_edges:
        edge.provenance = run.run_id
        project.relationships.append(edge)
    project.scoring = run
    return run
