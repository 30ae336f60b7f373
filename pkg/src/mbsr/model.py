"""Core model: entity kinds, attributes, relationships, and the project.

A project is the single mutable container everything else reads: entities
(needs, requirements, and their sets), typed relationships between them, the
glossary/lexicon/unit data, and the attribute/rule/characteristic
registries.  Mutation is single-writer; every read-side analysis takes the
project as an immutable snapshot.

Version and last-changed stamps are maintained automatically on every
mutation rather than by hand; identifiers follow a configurable
prefix-dash-number pattern.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import TYPE_CHECKING, Any

from . import statement as stmt
from .clock import utc_now_iso
from .errors import (
    DanglingEndpoint,
    DerivedWriteThrough,
    DuplicateId,
    IdPatternMismatch,
    IllegalKindForEndpoints,
    SlotsOnSetKind,
    UnknownAttribute,
    ValueKindMismatch,
)
from .rules import Finding, Severity
from .statement import ParseConfig, PatternSlots, assemble

if TYPE_CHECKING:
    from .characteristics import AllocationMatrix, CharacteristicDef, ScoringRun
    from .lexicon import GlossaryTerm, TermLexicon, UnitRegistry
    from .rules import RuleDef, Verdict

DEFAULT_ID_PATTERN = r"[A-Z][A-Z0-9]*-[0-9]{3,}"

VALUE_KINDS = ("text", "enumeration", "reference", "timestamp", "number")


class EntityKind(Enum):
    NEED = "Need"
    NEED_SET = "NeedSet"
    REQUIREMENT = "Requirement"
    REQUIREMENT_SET = "RequirementSet"

    @property
    def is_set(self) -> bool:
        return self in (EntityKind.NEED_SET, EntityKind.REQUIREMENT_SET)

    @property
    def member_kind(self) -> "EntityKind":
        if self is EntityKind.NEED_SET:
            return EntityKind.NEED
        if self is EntityKind.REQUIREMENT_SET:
            return EntityKind.REQUIREMENT
        raise ValueError(f"{self.value} is not a set kind")


class RelationshipKind(Enum):
    DERIVE = "derive"
    REFINE = "refine"
    SATISFY = "satisfy"
    VERIFY = "verify"
    TRACE = "trace"
    VIOLATE = "violate"


# Relationship kinds that define the requirements hierarchy; the rest never
# count toward parentage.
HIERARCHY_KINDS = (RelationshipKind.DERIVE, RelationshipKind.REFINE)

# Kinds that may target a characteristic (scoring edges).
SCORING_KINDS = (RelationshipKind.SATISFY, RelationshipKind.VIOLATE)


@dataclass
class AttributeDef:
    number: int
    name: str
    group: str
    minimum_set: bool = False
    value_kind: str = "text"
    derived_from_core: str | None = None
    applies_to: str = "all"


@dataclass
class Relationship:
    kind: RelationshipKind
    source: str
    target: str
    provenance: str = "manual"


@dataclass
class Entity:
    id: str
    name: str
    kind: EntityKind
    slots: PatternSlots | None = None
    text: str = ""
    attributes: dict[int, Any] = field(default_factory=dict)
    version: int = 1
    last_changed: str = field(default_factory=utc_now_iso)
    root_flag: bool = False
    members: list[str] = field(default_factory=list)


@dataclass
class ProjectConfig:
    id_pattern: str = DEFAULT_ID_PATTERN
    strict: bool = False
    condition_keywords: tuple[str, ...] = stmt.DEFAULT_CONDITION_KEYWORDS
    constraint_markers: tuple[str, ...] = stmt.DEFAULT_CONSTRAINT_MARKERS
    range_markers: tuple[str, ...] = tuple(
        m for m in stmt.DEFAULT_CONSTRAINT_MARKERS if m not in ("in accordance with", "per"))
    system_of_interest: str | None = None
    allow_attest_automated: bool = False
    misspellings: tuple[str, ...] = ()


@dataclass
class Project:
    name: str = "untitled"
    created: str = field(default_factory=utc_now_iso)
    config: ProjectConfig = field(default_factory=ProjectConfig)
    attributes: dict[int, AttributeDef] = field(default_factory=dict)
    rules: dict[str, "RuleDef"] = field(default_factory=dict)
    characteristics: dict[str, "CharacteristicDef"] = field(default_factory=dict)
    allocation: "AllocationMatrix | None" = None
    glossary: dict[str, "GlossaryTerm"] = field(default_factory=dict)
    lexicons: dict[str, "TermLexicon"] = field(default_factory=dict)
    units: "UnitRegistry | None" = None
    entities: dict[str, Entity] = field(default_factory=dict)
    relationships: list[Relationship] = field(default_factory=list)
    attestations: list["Verdict"] = field(default_factory=list)
    scoring: "ScoringRun | None" = None

    def parse_config(self) -> ParseConfig:
        superfluous = stmt.DEFAULT_SUPERFLUOUS_INFINITIVES
        lexicon = self.lexicons.get("superfluous_infinitive")
        if lexicon is not None:
            superfluous = lexicon.entries
        return ParseConfig(
            condition_keywords=self.config.condition_keywords,
            constraint_markers=self.config.constraint_markers,
            superfluous_infinitives=superfluous,
        )


@dataclass
class IntegrityFinding:
    location: str
    message: str


def parse_attribute_number(number: int | str) -> int:
    if isinstance(number, str):
        m = re.fullmatch(r"[Aa]?(\d+)", number.strip())
        if not m:
            raise UnknownAttribute(f"bad attribute number {number!r}")
        return int(m.group(1))
    return int(number)


def create_entity(
    project: Project,
    kind: EntityKind,
    entity_id: str,
    name: str,
    slots: PatternSlots | None = None,
    root_flag: bool = False,
) -> Entity:
    """Create and store an entity; statement text is derived from slots."""
    if kind.is_set and slots is not None:
        raise SlotsOnSetKind(f"{kind.value} entities carry members, not statement slots")
    if not re.fullmatch(project.config.id_pattern, entity_id):
        raise IdPatternMismatch(
            f"id {entity_id!r} does not match pattern {project.config.id_pattern!r}")
    if entity_id in project.entities or any(e.id == entity_id for e in project.entities.values()):
        raise DuplicateId(f"id {entity_id!r} already in use")
    text = assemble(slots) if slots is not None else ""
    entity = Entity(
        id=entity_id,
        name=name,
        kind=kind,
        slots=slots.normalized() if slots is not None else None,
        text=text,
        root_flag=root_flag,
    )
    project.entities[entity_id] = entity
    return entity


def _touch(entity: Entity) -> None:
    entity.version += 1
    entity.last_changed = max(entity.last_changed, utc_now_iso())


def _rename_entity(project: Project, entity: Entity, new_id: str) -> None:
    if not re.fullmatch(project.config.id_pattern, new_id):
        raise DerivedWriteThrough(
            f"new id {new_id!r} does not match pattern {project.config.id_pattern!r}")
    if new_id != entity.id and new_id in project.entities:
        raise DerivedWriteThrough(f"new id {new_id!r} already in use")
    old_id = entity.id
    if new_id == old_id:
        return
    del project.entities[old_id]
    entity.id = new_id
    project.entities[new_id] = entity
    for rel in project.relationships:
        if rel.source == old_id:
            rel.source = new_id
        if rel.target == old_id:
            rel.target = new_id
    for other in project.entities.values():
        other.members = [new_id if m == old_id else m for m in other.members]


def set_attribute(project: Project, entity: Entity, number: int | str, value: Any) -> Entity:
    """Set one attribute value, or write through to the core field for the
    derived attributes; bumps version and last-changed either way."""
    num = parse_attribute_number(number)
    attr_def = project.attributes.get(num)
    if attr_def is None:
        raise UnknownAttribute(f"no attribute A{num} in the registry")
    _check_value_kind(attr_def, value)
    if attr_def.derived_from_core == "id":
        _rename_entity(project, entity, str(value))
    elif attr_def.derived_from_core == "name":
        entity.name = str(value)
    elif attr_def.derived_from_core in ("version", "last_changed"):
        raise DerivedWriteThrough(
            f"A{num} mirrors {attr_def.derived_from_core}, which is maintained automatically")
    else:
        entity.attributes[num] = value
    _touch(entity)
    return entity


def get_attribute(project: Project, entity: Entity, number: int | str) -> Any:
    """Read an attribute value; derived attributes read their core field."""
    num = parse_attribute_number(number)
    attr_def = project.attributes.get(num)
    if attr_def is None:
        raise UnknownAttribute(f"no attribute A{num} in the registry")
    if attr_def.derived_from_core:
        return getattr(entity, attr_def.derived_from_core)
    return entity.attributes.get(num)


def _check_value_kind(attr_def: AttributeDef, value: Any) -> None:
    kind = attr_def.value_kind
    if kind in ("text", "enumeration", "reference"):
        ok = isinstance(value, str)
    elif kind == "number":
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif kind == "timestamp":
        ok = isinstance(value, str) and _is_timestamp(value)
    else:
        ok = False
    if not ok:
        raise ValueKindMismatch(
            f"A{attr_def.number} ({attr_def.name}) takes {kind}, got {value!r}")


def _is_timestamp(value: str) -> bool:
    try:
        datetime.fromisoformat(value)
        return True
    except ValueError:
        return False


def add_relationship(
    project: Project,
    kind: RelationshipKind,
    source: str,
    target: str,
    provenance: str = "manual",
) -> tuple[Relationship, Finding | None]:
    """Store a typed edge.  Returns the edge plus an advisory finding when
    the discouraged ``trace`` kind is used."""
    if source not in project.entities:
        raise DanglingEndpoint(f"source {source!r} does not resolve")
    target_is_entity = target in project.entities
    target_is_characteristic = target in project.characteristics
    if not (target_is_entity or target_is_characteristic):
        raise DanglingEndpoint(f"target {target!r} does not resolve")
    if target_is_characteristic and kind not in SCORING_KINDS:
        raise IllegalKindForEndpoints(
            f"{kind.value} cannot target characteristic {target}")
    rel = Relationship(kind=kind, source=source, target=target, provenance=provenance)
    project.relationships.append(rel)
    advisory: Finding | None = None
    if kind is RelationshipKind.TRACE:
        advisory = Finding(
            rule_id=None,
            entity_id=source,
            field="relationships",
            span=(0, 0),
            message=("trace is discouraged; prefer derive, refine, satisfy, or verify"),
            severity=Severity.ADVISORY,
        )
    return rel, advisory


def validate_project(project: Project) -> list[IntegrityFinding]:
    """Check every structural invariant; returns findings, never raises."""
    findings: list[IntegrityFinding] = []
    out = findings.append

    n_attrs = len(project.attributes)
    if n_attrs != 49:
        out(IntegrityFinding("registry.attributes", f"attribute registry incomplete ({n_attrs}/49)"))
    else:
        expected = set(range(1, 50))
        if set(project.attributes) != expected:
            out(IntegrityFinding("registry.attributes", "attribute numbers must be A1..A49"))
    a15 = project.attributes.get(15)
    a16 = project.attributes.get(16)
    if a15 is not None and a15.derived_from_core != "id":
        out(IntegrityFinding("registry.attributes", "A15 must read the core id field"))
    if a16 is not None and a16.derived_from_core != "name":
        out(IntegrityFinding("registry.attributes", "A16 must read the core name field"))

    n_rules = len(project.rules)
    if n_rules != 42:
        out(IntegrityFinding("registry.rules", f"rule registry incomplete ({n_rules}/42)"))
    n_chars = len(project.characteristics)
    if n_chars != 15:
        out(IntegrityFinding("registry.characteristics",
                             f"characteristic registry incomplete ({n_chars}/15)"))
    if project.allocation is None:
        out(IntegrityFinding("registry.allocation", "allocation matrix missing"))
    if project.units is None:
        out(IntegrityFinding("registry.units", "unit registry missing"))

    id_pattern = re.compile(project.config.id_pattern)
    seen_ids: dict[str, int] = {}
    for key, entity in project.entities.items():
        seen_ids[entity.id] = seen_ids.get(entity.id, 0) + 1
        if key != entity.id:
            out(IntegrityFinding(entity.id, f"stored under key {key!r} but id is {entity.id!r}"))
        if not id_pattern.fullmatch(entity.id):
            out(IntegrityFinding(entity.id, "id does not match the project id pattern"))
        if entity.version < 1:
            out(IntegrityFinding(entity.id, "version must be >= 1"))
        if entity.slots is not None:
            if entity.kind.is_set:
                out(IntegrityFinding(entity.id, "set kinds carry no statement slots"))
            else:
                try:
                    expected_text = assemble(entity.slots)
                except Exception as exc:
                    out(IntegrityFinding(entity.id, f"slots do not assemble: {exc}"))
                else:
                    if entity.text != expected_text:
                        out(IntegrityFinding(entity.id, "text does not equal assemble(slots)"))
                slots = entity.slots
                for slot_name in ("condition", "subject", "object", "constraint"):
                    value = getattr(slots, slot_name)
                    if value and re.search(r"\bshall\b", value, re.IGNORECASE):
                        out(IntegrityFinding(
                            entity.id, f"slot {slot_name} embeds a 'shall' token"))
        if entity.members:
            if not entity.kind.is_set:
                out(IntegrityFinding(entity.id, "only set kinds carry members"))
            else:
                member_kind = entity.kind.member_kind
                if len(set(entity.members)) != len(entity.members):
                    out(IntegrityFinding(entity.id, "duplicate member ids"))
                for member_id in entity.members:
                    member = project.entities.get(member_id)
                    if member is None:
                        out(IntegrityFinding(entity.id, f"member {member_id!r} does not resolve"))
                    elif member.kind is not member_kind:
                        out(IntegrityFinding(
                            entity.id,
                            f"member {member_id!r} is {member.kind.value}, not {member_kind.value}"))
    for entity_id, count in seen_ids.items():
        if count > 1:
            out(IntegrityFinding(entity_id, "duplicate id"))

    # Membership is a partition: at most one set of each kind per entity.
    containers: dict[tuple[str, str], list[str]] = {}
    for entity in project.entities.values():
        if entity.kind.is_set:
            for member_id in entity.members:
                containers.setdefault((member_id, entity.kind.value), []).append(entity.id)
    for (member_id, set_kind), owners in containers.items():
        if len(owners) > 1:
            out(IntegrityFinding(
                member_id, f"belongs to {len(owners)} sets of kind {set_kind}: {', '.join(sorted(owners))}"))

    for i, rel in enumerate(project.relationships):
        where = f"relationship[{i}] {rel.kind.value} {rel.source}->{rel.target}"
        if rel.source not in project.entities:
            out(IntegrityFinding(where, "source does not resolve"))
        target_ok = rel.target in project.entities or (
            rel.kind in SCORING_KINDS and rel.target in project.characteristics)
        if not target_ok:
            out(IntegrityFinding(where, "target does not resolve"))
        if rel.target in project.characteristics and rel.kind not in SCORING_KINDS:
            out(IntegrityFinding(where, "only satisfy/violate may target a characteristic"))

    # Edge exclusivity: one of satisfy/violate per (entity, characteristic)
    # within each provenance group.
    pairs: dict[tuple[str, str, str], set[RelationshipKind]] = {}
    for rel in project.relationships:
        if rel.kind in SCORING_KINDS and rel.target in project.characteristics:
            pairs.setdefault((rel.provenance, rel.source, rel.target), set()).add(rel.kind)
    for (provenance, source, target), kinds in pairs.items():
        if len(kinds) > 1:
            out(IntegrityFinding(
                f"{source}->{target}",
                f"both satisfy and violate present (provenance {provenance})"))

    for term, entry in project.glossary.items():
        if not entry.definitions:
            out(IntegrityFinding(f"glossary.{term}", "term has no definitions"))
        if entry.is_acronym and not entry.expansion:
            out(IntegrityFinding(f"glossary.{term}", "acronym lacks an expansion"))

    return findings
