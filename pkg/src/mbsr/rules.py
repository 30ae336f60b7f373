"""The 42 writing rules as automated checks, assisted heuristics, and
recorded manual attestations.

Automated rules are lexical/structural and yield pass/fail/warn on their
own.  Assisted rules run a heuristic that can only warn; absent a hit they
stay at needs-review for a human.  Manual rules always need review until
someone attests them.  Attested verdicts supersede the computed ones for
assisted and manual rules (and for automated rules only when the project
config allows overrides).

Every check is pure over an immutable project snapshot: identical
(entity, context, config) always produces the identical report.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Callable

from . import lexicon as lex
from .characteristics import RuleApplicability
from .clock import utc_now_iso
from .errors import (
    AttestAutomatedForbidden,
    DanglingEndpoint,
    EmptySubject,
    MalformedFile,
    NoModal,
    RuleNotApplicable,
    UnknownRule,
)
from .statement import marker_occurrences, parse

if TYPE_CHECKING:
    from .model import Entity, Project

RULE_IDS = tuple(f"R{i}" for i in range(1, 43))


class Automation(Enum):
    AUTOMATED = "automated"
    ASSISTED = "assisted"
    MANUAL = "manual"


class VerdictStatus(Enum):
    PASS = "pass"
    FAIL = "fail"
    WARN = "warn"
    NEEDS_REVIEW = "needs-review"
    NOT_APPLICABLE = "not-applicable"


class VerdictSource(Enum):
    AUTOMATED = "automated"
    ATTESTED = "attested"


class Severity(Enum):
    FAIL = "fail"
    WARN = "warn"
    ADVISORY = "advisory"


@dataclass
class RuleDef:
    id: str
    name: str
    automation: Automation
    enabled: bool = True
    applicability: RuleApplicability = RuleApplicability.INDIVIDUAL


@dataclass
class Finding:
    """Located evidence for a verdict: which field, which characters, why."""

    rule_id: str | None
    entity_id: str
    field: str
    span: tuple[int, int]
    message: str
    severity: Severity


@dataclass
class Verdict:
    rule_id: str
    entity_id: str
    status: VerdictStatus
    source: VerdictSource = VerdictSource.AUTOMATED
    attestor: str | None = None
    rationale: str | None = None
    # Attested verdicts carry a real timestamp; automated ones stay empty so
    # that identical inputs produce byte-identical reports.
    timestamp: str = ""


@dataclass
class RuleReport:
    entity_id: str
    verdicts: list[Verdict] = field(default_factory=list)
    findings: list[Finding] = field(default_factory=list)


def parse_rules_file(text: str) -> dict[str, RuleDef]:
    rules: dict[str, RuleDef] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        cols = [c.strip() for c in line.split("|")]
        if len(cols) != 4:
            raise MalformedFile(f"rules line {line_no}: need 4 columns")
        rid, name, automation, enabled = cols
        rules[rid] = RuleDef(
            id=rid,
            name=name,
            automation=Automation(automation),
            enabled=enabled.lower() == "true",
        )
    return rules


# --- scan helpers ---------------------------------------------------------


def _finding(rule_id: str, entity: "Entity", field_name: str, span: tuple[int, int],
             message: str, severity: Severity) -> Finding:
    return Finding(rule_id, entity.id, field_name, span, message, severity)


def _lexicon_hits(entity: "Entity", context: "Project", category: str) -> list[tuple[tuple[int, int], str]]:
    if not entity.text:
        return []
    return lex.find_occurrences(entity.text, category, context.lexicons)


def _lexicon_rule(rule_id: str, category: str, fail: bool, label: str) -> Callable:
    severity = Severity.FAIL if fail else Severity.WARN
    status = VerdictStatus.FAIL if fail else VerdictStatus.WARN

    def check(entity: "Entity", context: "Project"):
        findings = [
            _finding(rule_id, entity, "text", span, f"{label}: {phrase!r}", severity)
            for span, phrase in _lexicon_hits(entity, context, category)
        ]
        return (status if findings else VerdictStatus.PASS), findings

    return check


def _action_object_region(entity: "Entity") -> tuple[int, int] | None:
    """Character region of action+object inside the assembled text."""
    slots = entity.slots
    if slots is None:
        return None
    prefix = ""
    if slots.condition:
        prefix += slots.condition.rstrip(",") + ", "
    prefix += slots.subject + " " + slots.modal + " "
    segment = slots.action + ((" " + slots.object) if slots.object else "")
    return len(prefix), len(prefix) + len(segment)


_PASSIVE_RE = re.compile(r"\b(shall\s+be|is|are)\s+([A-Za-z]+)", re.IGNORECASE)
_IRREGULAR_PARTICIPLES = {
    "built", "brought", "bought", "caught", "chosen", "done", "drawn", "driven",
    "eaten", "fallen", "felt", "flown", "found", "frozen", "given", "gone",
    "grown", "heard", "held", "hidden", "hit", "kept", "known", "laid", "led",
    "left", "lent", "lost", "made", "meant", "met", "paid", "put", "read",
    "said", "seen", "sent", "set", "shown", "sold", "spent", "spoken", "swept",
    "taken", "thought", "thrown", "told", "understood", "worn", "written",
}
_INDEFINITE_ARTICLE_RE = re.compile(r"\b(a|an)\b", re.IGNORECASE)
_NOT_RE = re.compile(r"\bnot\b", re.IGNORECASE)
_AND_RE = re.compile(r"\band\b", re.IGNORECASE)
_OR_RE = re.compile(r"\bor\b", re.IGNORECASE)
_COORDINATED_VERBS_RE = re.compile(r"\bshall\s+([A-Za-z]+)\s+(?:and|or)\s+([A-Za-z]+)\b",
                                   re.IGNORECASE)
_MODAL_RE = re.compile(r"\bshall\b", re.IGNORECASE)
_ENUMERATION_RE = re.compile(r"(?:[\w-]+\s*,\s*){2,}[\w-]+")
_ETC_RE = re.compile(r"(?<!\w)etc\.")
_SUBCLAUSE_RE = re.compile(r"\b(which|that|where|who|whom)\b", re.IGNORECASE)
_MISSING_ZERO_RE = re.compile(r"(?<![\d.])\.\d+")
_DOT_DECIMAL_RE = re.compile(r"\d+\.\d+")
_COMMA_DECIMAL_RE = re.compile(r"\d+,\d{1,2}(?!\d)")


def _check_r1(entity: "Entity", context: "Project"):
    text = entity.text
    if entity.slots is not None:
        return VerdictStatus.PASS, []
    if not text:
        return VerdictStatus.FAIL, [_finding(
            "R1", entity, "text", (0, 0), "no statement text", Severity.FAIL)]
    try:
        result = parse(text, context.parse_config())
    except NoModal:
        return VerdictStatus.FAIL, [_finding(
            "R1", entity, "text", (0, len(text)),
            "statement has no 'shall'; it does not fit the structured templates",
            Severity.FAIL)]
    except EmptySubject:
        return VerdictStatus.FAIL, [_finding(
            "R1", entity, "text", (0, len(text)), "no subject before 'shall'", Severity.FAIL)]
    # Only structural defects fail R1; superfluous-infinitive or
    # multiple-shall findings belong to R10/R18.
    findings = [
        _finding("R1", entity, "text", f.span, f.message, Severity.FAIL)
        for f in result.findings if f.rule_hint == "R1"
    ]
    return (VerdictStatus.FAIL if findings else VerdictStatus.PASS), findings


def _check_r2(entity: "Entity", context: "Project"):
    findings = []
    for m in _PASSIVE_RE.finditer(entity.text):
        word = m.group(2).lower()
        if word.endswith("ed") or word.endswith("en") or word in _IRREGULAR_PARTICIPLES:
            findings.append(_finding(
                "R2", entity, "text", (m.start(), m.end()),
                f"passive construction {m.group(0)!r}; state who acts", Severity.FAIL))
    return (VerdictStatus.FAIL if findings else VerdictStatus.PASS), findings


def _check_r5(entity: "Entity", context: "Project"):
    findings = []
    slots = entity.slots
    if slots is None:
        return VerdictStatus.PASS, []
    for field_name, value in (("slots.subject", slots.subject), ("slots.object", slots.object)):
        if not value:
            continue
        for m in _INDEFINITE_ARTICLE_RE.finditer(value):
            findings.append(_finding(
                "R5", entity, field_name, (m.start(), m.end()),
                f"indefinite article {m.group(0)!r}; prefer 'the'", Severity.WARN))
    return (VerdictStatus.WARN if findings else VerdictStatus.PASS), findings


def _check_r6(entity: "Entity", context: "Project"):
    _, unknown = lex.find_quantities(entity.text, context.units)
    findings = [
        _finding("R6", entity, "text", span,
                 f"unit {token!r} is not in the units registry", Severity.FAIL)
        for span, token in unknown
    ]
    return (VerdictStatus.FAIL if findings else VerdictStatus.PASS), findings


def _check_r15(entity: "Entity", context: "Project"):
    text = entity.text
    if "(" in text:
        return VerdictStatus.PASS, []
    and_hit = _AND_RE.search(text)
    or_hit = _OR_RE.search(text)
    if and_hit and or_hit:
        return VerdictStatus.WARN, [_finding(
            "R15", entity, "text", (or_hit.start(), or_hit.end()),
            "mixed and/or chain without parentheses; group the logic explicitly",
            Severity.WARN)]
    return VerdictStatus.PASS, []


def _check_r16(entity: "Entity", context: "Project"):
    findings = [
        _finding("R16", entity, "text", (m.start(), m.end()),
                 "'not' in statement; state what the system does instead", Severity.FAIL)
        for m in _NOT_RE.finditer(entity.text)
    ]
    return (VerdictStatus.FAIL if findings else VerdictStatus.PASS), findings


def _check_r17(entity: "Entity", context: "Project"):
    text = entity.text
    findings = []
    seen: set[tuple[int, int]] = set()
    for m in re.finditer("/", text):
        start = m.start()
        while start > 0 and not text[start - 1].isspace():
            start -= 1
        end = m.end()
        while end < len(text) and not text[end].isspace():
            end += 1
        token = text[start:end].strip(",.;:()")
        t_start = start + text[start:end].index(token) if token else start
        span = (t_start, t_start + len(token))
        if span in seen:
            continue
        seen.add(span)
        if token and context.units.is_unit_expression(token):
            continue
        findings.append(_finding(
            "R17", entity, "text", span,
            f"oblique symbol in {token!r} is ambiguous outside unit expressions",
            Severity.FAIL))
    return (VerdictStatus.FAIL if findings else VerdictStatus.PASS), findings


def _check_r18(entity: "Entity", context: "Project"):
    text = entity.text
    findings = []
    modals = list(_MODAL_RE.finditer(text))
    for extra in modals[1:]:
        findings.append(_finding(
            "R18", entity, "text", (extra.start(), extra.end()),
            "more than one 'shall'; split into separate statements", Severity.FAIL))
    m = _COORDINATED_VERBS_RE.search(text)
    if m:
        findings.append(_finding(
            "R18", entity, "text", (m.start(), m.end()),
            f"coordinated actions {m.group(1)!r} and {m.group(2)!r}; one thought per statement",
            Severity.FAIL))
    return (VerdictStatus.FAIL if findings else VerdictStatus.PASS), findings


def _check_r19(entity: "Entity", context: "Project"):
    region = _action_object_region(entity)
    if region is None:
        return VerdictStatus.PASS, []
    segment = entity.text[region[0]:region[1]]
    findings = []
    for (start, end), phrase in lex.find_occurrences(segment, "combinator", context.lexicons):
        findings.append(_finding(
            "R19", entity, "text", (region[0] + start, region[0] + end),
            f"combinator {phrase!r} in the action; split or restructure", Severity.WARN))
    return (VerdictStatus.WARN if findings else VerdictStatus.PASS), findings


def _check_r21(entity: "Entity", context: "Project"):
    findings = [
        _finding("R21", entity, "text", (i, i + 1),
                 "parenthetical material; move it to rationale or an attribute",
                 Severity.WARN)
        for i, ch in enumerate(entity.text) if ch == "("
    ]
    return (VerdictStatus.WARN if findings else VerdictStatus.PASS), findings


def _check_r22(entity: "Entity", context: "Project"):
    findings = []
    m = _ETC_RE.search(entity.text)
    if m:
        findings.append(_finding(
            "R22", entity, "text", (m.start(), m.end()),
            "open enumeration 'etc.'; list the items explicitly", Severity.WARN))
    m = _ENUMERATION_RE.search(entity.text)
    if m:
        findings.append(_finding(
            "R22", entity, "text", (m.start(), m.end()),
            "inline enumeration; consider an explicit sub-list or child requirements",
            Severity.WARN))
    return (VerdictStatus.WARN if findings else VerdictStatus.PASS), findings


def _check_r27(entity: "Entity", context: "Project"):
    slots = entity.slots
    if slots is None:
        return VerdictStatus.PASS, []
    keywords = {k.lower() for k in context.config.condition_keywords}
    if slots.object and not slots.condition:
        return VerdictStatus.WARN, [_finding(
            "R27", entity, "text", (0, 0),
            "template-2 statement without an explicit condition clause", Severity.WARN)]
    if slots.condition:
        first = slots.condition.split(" ", 1)[0].lower().rstrip(",")
        if first not in keywords:
            return VerdictStatus.WARN, [_finding(
                "R27", entity, "slots.condition", (0, len(slots.condition)),
                f"condition does not start with a condition keyword ({first!r})",
                Severity.WARN)]
    return VerdictStatus.PASS, []


def _check_r28(entity: "Entity", context: "Project"):
    slots = entity.slots
    if slots is None or not slots.condition:
        return VerdictStatus.PASS, []
    condition = slots.condition
    keywords = [k for k in context.config.condition_keywords]
    count = 0
    for keyword in keywords:
        count += len(re.findall(r"\b" + re.escape(keyword) + r"\b", condition, re.IGNORECASE))
    conjunction = re.search(r"\b(and|or)\b", condition, re.IGNORECASE)
    if count >= 2 or conjunction:
        return VerdictStatus.WARN, [_finding(
            "R28", entity, "slots.condition", (0, len(condition)),
            "multiple conditions in one statement; split them", Severity.WARN)]
    return VerdictStatus.PASS, []


def normalized_statement(text: str) -> str:
    return re.sub(r"\s+", " ", text).strip().rstrip(".").lower()


def _siblings_in_sets(entity: "Entity", context: "Project") -> list["Entity"]:
    siblings: list[Entity] = []
    for other in context.entities.values():
        if other.kind.is_set and entity.id in other.members:
            for member_id in other.members:
                if member_id != entity.id and member_id in context.entities:
                    siblings.append(context.entities[member_id])
    return siblings


def _check_r30(entity: "Entity", context: "Project"):
    own = normalized_statement(entity.text)
    if not own:
        return VerdictStatus.PASS, []
    findings = []
    for sibling in _siblings_in_sets(entity, context):
        if normalized_statement(sibling.text) == own:
            findings.append(_finding(
                "R30", entity, "text", (0, len(entity.text)),
                f"statement duplicates {sibling.id} in the same set", Severity.FAIL))
    return (VerdictStatus.FAIL if findings else VerdictStatus.PASS), findings


def _check_r33(entity: "Entity", context: "Project"):
    quantities, _ = lex.find_quantities(entity.text, context.units)
    if not quantities:
        return VerdictStatus.PASS, []
    if marker_occurrences(entity.text, tuple(context.config.range_markers)):
        return VerdictStatus.PASS, []
    findings = [
        _finding("R33", entity, "text", q.span,
                 f"bare value {q.value:g} {q.unit}; state a range or tolerance",
                 Severity.FAIL)
        for q in quantities
    ]
    return VerdictStatus.FAIL, findings


def _unit_groups(quantities: list[lex.Quantity]) -> dict[str, set[str]]:
    groups: dict[str, set[str]] = {}
    for q in quantities:
        groups.setdefault(q.dimension, set()).add(q.base_symbol)
    return groups


def _check_r36(entity: "Entity", context: "Project"):
    quantities, _ = lex.find_quantities(entity.text, context.units)
    findings = []
    for dimension, units in sorted(_unit_groups(quantities).items()):
        if len(units) > 1:
            findings.append(_finding(
                "R36", entity, "text", (0, len(entity.text)),
                f"{dimension} expressed in mixed units ({', '.join(sorted(units))})",
                Severity.FAIL))
    return (VerdictStatus.FAIL if findings else VerdictStatus.PASS), findings


def _glossary_has(context: "Project", term: str) -> bool:
    lowered = term.lower()
    return any(t.lower() == lowered for t in context.glossary)


def _check_r37(entity: "Entity", context: "Project"):
    findings = []
    for span, token in lex.acronym_tokens(entity.text):
        if not _glossary_has(context, token):
            findings.append(_finding(
                "R37", entity, "text", span,
                f"acronym {token!r} is not defined in the glossary", Severity.WARN))
    return (VerdictStatus.WARN if findings else VerdictStatus.PASS), findings


def _check_r38(entity: "Entity", context: "Project"):
    findings = []
    for span, phrase in _lexicon_hits(entity, context, "abbreviation"):
        if not _glossary_has(context, phrase):
            findings.append(_finding(
                "R38", entity, "text", span,
                f"abbreviation {phrase!r} is not defined in the glossary", Severity.WARN))
    return (VerdictStatus.WARN if findings else VerdictStatus.PASS), findings


def _check_r40(entity: "Entity", context: "Project"):
    text = entity.text
    findings = []
    for m in _MISSING_ZERO_RE.finditer(text):
        findings.append(_finding(
            "R40", entity, "text", (m.start(), m.end()),
            f"decimal {m.group(0)!r} lacks its leading zero", Severity.FAIL))
    if _DOT_DECIMAL_RE.search(text) and _COMMA_DECIMAL_RE.search(text):
        m = _COMMA_DECIMAL_RE.search(text)
        findings.append(_finding(
            "R40", entity, "text", (m.start(), m.end()),
            "mixed decimal separators in one statement", Severity.FAIL))
    return (VerdictStatus.FAIL if findings else VerdictStatus.PASS), findings


def _has_hierarchy_edge(entity_id: str, context: "Project") -> bool:
    from .model import HIERARCHY_KINDS

    return any(
        rel.kind in HIERARCHY_KINDS and entity_id in (rel.source, rel.target)
        for rel in context.relationships
    )


def _check_r41(entity: "Entity", context: "Project"):
    from .model import EntityKind

    if entity.kind is not EntityKind.REQUIREMENT:
        return VerdictStatus.PASS, []
    if entity.root_flag or _has_hierarchy_edge(entity.id, context):
        return VerdictStatus.PASS, []
    return VerdictStatus.WARN, [_finding(
        "R41", entity, "text", (0, 0),
        "no derive/refine link to a parent or source", Severity.WARN)]


# --- assisted heuristics --------------------------------------------------


def _strip_article(text: str) -> str:
    return re.sub(r"^(the|a|an)\s+", "", text.strip(), flags=re.IGNORECASE).lower()


def _check_r3(entity: "Entity", context: "Project"):
    soi = context.config.system_of_interest
    slots = entity.slots
    if soi and slots is not None:
        if _strip_article(slots.subject) != _strip_article(soi):
            return VerdictStatus.WARN, [_finding(
                "R3", entity, "slots.subject", (0, len(slots.subject)),
                f"subject {slots.subject!r} differs from the declared system of interest {soi!r}",
                Severity.WARN)]
    return VerdictStatus.NEEDS_REVIEW, []


def _check_r4(entity: "Entity", context: "Project"):
    findings = []
    for span, candidate in lex.term_candidates(entity.text):
        if not _glossary_has(context, candidate):
            findings.append(_finding(
                "R4", entity, "text", span,
                f"term {candidate!r} is not defined in the glossary", Severity.WARN))
    if findings:
        return VerdictStatus.WARN, findings
    return VerdictStatus.NEEDS_REVIEW, []


def _check_r11(entity: "Entity", context: "Project"):
    hits = list(_SUBCLAUSE_RE.finditer(entity.text))
    if len(hits) >= 2:
        findings = [
            _finding("R11", entity, "text", (m.start(), m.end()),
                     f"subordinate clause marker {m.group(0)!r}", Severity.WARN)
            for m in hits
        ]
        return VerdictStatus.WARN, findings
    return VerdictStatus.NEEDS_REVIEW, []


def _check_r13(entity: "Entity", context: "Project"):
    findings = []
    for word in context.config.misspellings:
        for m in re.finditer(r"(?<!\w)" + re.escape(word) + r"(?!\w)", entity.text, re.IGNORECASE):
            findings.append(_finding(
                "R13", entity, "text", (m.start(), m.end()),
                f"possible misspelling {m.group(0)!r}", Severity.WARN))
    if findings:
        return VerdictStatus.WARN, findings
    return VerdictStatus.NEEDS_REVIEW, []


def _check_r34(entity: "Entity", context: "Project"):
    quantities, _ = lex.find_quantities(entity.text, context.units)
    if quantities and not marker_occurrences(entity.text, tuple(context.config.constraint_markers)):
        findings = [
            _finding("R34", entity, "text", q.span,
                     f"value {q.value:g} {q.unit} has no verifiable marker", Severity.WARN)
            for q in quantities
        ]
        return VerdictStatus.WARN, findings
    return VerdictStatus.NEEDS_REVIEW, []


_INDIVIDUAL_CHECKS: dict[str, Callable] = {
    "R1": _check_r1,
    "R2": _check_r2,
    "R3": _check_r3,
    "R4": _check_r4,
    "R5": _check_r5,
    "R6": _check_r6,
    "R7": _lexicon_rule("R7", "vague", fail=True, label="vague term"),
    "R8": _lexicon_rule("R8", "escape", fail=True, label="escape clause"),
    "R9": _lexicon_rule("R9", "open_ended", fail=True, label="open-ended clause"),
    "R10": _lexicon_rule("R10", "superfluous_infinitive", fail=True, label="superfluous infinitive"),
    "R11": _check_r11,
    "R13": _check_r13,
    "R15": _check_r15,
    "R16": _check_r16,
    "R17": _check_r17,
    "R18": _check_r18,
    "R19": _check_r19,
    "R20": _lexicon_rule("R20", "purpose_phrase", fail=True, label="purpose phrase"),
    "R21": _check_r21,
    "R22": _check_r22,
    "R24": _lexicon_rule("R24", "pronoun", fail=True, label="pronoun"),
    "R26": _lexicon_rule("R26", "absolute", fail=True, label="absolute"),
    "R27": _check_r27,
    "R28": _check_r28,
    "R30": _check_r30,
    "R32": _lexicon_rule("R32", "universal_qualifier", fail=False, label="universal qualifier"),
    "R33": _check_r33,
    "R34": _check_r34,
    "R35": _lexicon_rule("R35", "indefinite_temporal", fail=False, label="indefinite timing"),
    "R36": _check_r36,
    "R37": _check_r37,
    "R38": _check_r38,
    "R40": _check_r40,
    "R41": _check_r41,
}


# --- set-level checks -----------------------------------------------------


def _members_of(entity: "Entity", context: "Project") -> list["Entity"]:
    return [context.entities[m] for m in entity.members if m in context.entities]


def _set_r42(entity: "Entity", members: list["Entity"], context: "Project"):
    findings = []
    if not entity.members:
        findings.append(_finding("R42", entity, "text", (0, 0),
                                 "set has no members", Severity.FAIL))
    if len(set(entity.members)) != len(entity.members):
        findings.append(_finding("R42", entity, "text", (0, 0),
                                 "duplicate member ids in set", Severity.FAIL))
    for member_id in entity.members:
        if member_id not in context.entities:
            findings.append(_finding("R42", entity, "text", (0, 0),
                                     f"member {member_id!r} does not resolve", Severity.FAIL))
    expected = entity.kind.member_kind if entity.kind.is_set else None
    for member in _members_of(entity, context):
        if expected is not None and member.kind is not expected:
            findings.append(_finding(
                "R42", entity, "text", (0, 0),
                f"member {member.id} is {member.kind.value}, expected {expected.value}",
                Severity.FAIL))
    return (VerdictStatus.FAIL if findings else VerdictStatus.PASS), findings


def _set_r30(entity: "Entity", members: list["Entity"], context: "Project"):
    groups: dict[str, list[str]] = {}
    for member in members:
        key = normalized_statement(member.text)
        if key:
            groups.setdefault(key, []).append(member.id)
    findings = []
    for _key, ids in sorted(groups.items()):
        if len(ids) > 1:
            for member_id in ids:
                member = context.entities[member_id]
                findings.append(Finding(
                    "R30", member_id, "text", (0, len(member.text)),
                    f"statement duplicated across members: {', '.join(ids)}",
                    Severity.FAIL))
    return (VerdictStatus.FAIL if findings else VerdictStatus.PASS), findings


def _set_r36(entity: "Entity", members: list["Entity"], context: "Project"):
    quantities: list[lex.Quantity] = []
    carriers: dict[str, set[str]] = {}
    for member in members:
        for field_name, text in lex.entity_textual_fields(member, context.attributes):
            qs, _ = lex.find_quantities(text, context.units)
            quantities.extend(qs)
            for q in qs:
                carriers.setdefault(q.dimension, set()).add(member.id)
    findings = []
    for dimension, units in sorted(_unit_groups(quantities).items()):
        if len(units) > 1:
            involved = ", ".join(sorted(carriers.get(dimension, set())))
            findings.append(_finding(
                "R36", entity, "text", (0, 0),
                f"{dimension} expressed in mixed units across the set "
                f"({', '.join(sorted(units))}; members {involved})",
                Severity.FAIL))
    return (VerdictStatus.FAIL if findings else VerdictStatus.PASS), findings


def _set_r41(entity: "Entity", members: list["Entity"], context: "Project"):
    from .model import EntityKind

    findings = []
    for member in members:
        if member.kind is not EntityKind.REQUIREMENT or member.root_flag:
            continue
        if not _has_hierarchy_edge(member.id, context):
            findings.append(Finding(
                "R41", member.id, "text", (0, 0),
                "member has no derive/refine link", Severity.WARN))
    return (VerdictStatus.WARN if findings else VerdictStatus.PASS), findings


_SET_CHECKS = {
    "R30": _set_r30,
    "R36": _set_r36,
    "R41": _set_r41,
    "R42": _set_r42,
}


def cross_member_findings(entity: "Entity", members: list["Entity"], context: "Project") -> list[Finding]:
    """All cross-member findings for the structural set rules (duplicates,
    unit drift, unlinked members, malformed sets)."""
    findings: list[Finding] = []
    for rid in ("R30", "R36", "R41", "R42"):
        _status, rule_findings = _SET_CHECKS[rid](entity, members, context)
        findings.extend(rule_findings)
    return findings


def _aggregate_members(rule_id: str, members: list["Entity"], context: "Project",
                       assisted: bool):
    """Set-level verdict for a both-level rule: fold the members' individual
    outcomes (any fail > any warn > pass; assisted rules never auto-pass)."""
    worst = VerdictStatus.PASS
    findings: list[Finding] = []
    for member in members:
        status, member_findings = _INDIVIDUAL_CHECKS[rule_id](member, context)
        findings.extend(member_findings)
        if status is VerdictStatus.FAIL:
            worst = VerdictStatus.FAIL
        elif status is VerdictStatus.WARN and worst is not VerdictStatus.FAIL:
            worst = VerdictStatus.WARN
    if assisted and worst is VerdictStatus.PASS:
        return VerdictStatus.NEEDS_REVIEW, findings
    return worst, findings


def _check_set_rule(rule_id: str, rdef: RuleDef, entity: "Entity", context: "Project"):
    members = _members_of(entity, context)
    if rule_id in _SET_CHECKS:
        return _SET_CHECKS[rule_id](entity, members, context)
    if rdef.automation is Automation.MANUAL:
        return VerdictStatus.NEEDS_REVIEW, []
    return _aggregate_members(rule_id, members, context,
                              assisted=rdef.automation is Automation.ASSISTED)


# --- engine ---------------------------------------------------------------


def effective_attestation(context: "Project", entity_id: str, rule_id: str) -> Verdict | None:
    """Latest attestation for (entity, rule), if any."""
    found = None
    for verdict in context.attestations:
        if verdict.entity_id == entity_id and verdict.rule_id == rule_id:
            found = verdict
    return found


def check(rule_id: str, entity: "Entity", context: "Project") -> tuple[Verdict, list[Finding]]:
    """Run one rule against one entity.

    Raises ``UnknownRule`` / ``RuleNotApplicable`` when the rule does not
    exist, is disabled, or does not admit the entity's kind.
    """
    rdef = context.rules.get(rule_id)
    if rdef is None:
        raise UnknownRule(f"no rule {rule_id!r}")
    if not rdef.enabled:
        raise RuleNotApplicable(f"{rule_id} is disabled")
    applicability = context.allocation.applicability(rule_id)
    if entity.kind.is_set and applicability is RuleApplicability.INDIVIDUAL:
        raise RuleNotApplicable(f"{rule_id} does not apply to {entity.kind.value}")
    if not entity.kind.is_set and applicability is RuleApplicability.SET:
        raise RuleNotApplicable(f"{rule_id} does not apply to {entity.kind.value}")

    attested = effective_attestation(context, entity.id, rule_id)
    if attested is not None and (
            rdef.automation is not Automation.AUTOMATED
            or context.config.allow_attest_automated):
        return attested, []

    if entity.kind.is_set:
        status, findings = _check_set_rule(rule_id, rdef, entity, context)
    elif rdef.automation is Automation.MANUAL:
        status, findings = VerdictStatus.NEEDS_REVIEW, []
    else:
        status, findings = _INDIVIDUAL_CHECKS[rule_id](entity, context)
    verdict = Verdict(rule_id=rule_id, entity_id=entity.id, status=status)
    return verdict, findings


def applicable_rules(entity: "Entity", context: "Project") -> list[str]:
    """Enabled rule ids admitting the entity's kind, ascending."""
    result = []
    for rid in RULE_IDS:
        rdef = context.rules.get(rid)
        if rdef is None or not rdef.enabled:
            continue
        applicability = context.allocation.applicability(rid)
        if entity.kind.is_set and applicability is RuleApplicability.INDIVIDUAL:
            continue
        if not entity.kind.is_set and applicability is RuleApplicability.SET:
            continue
        result.append(rid)
    return result


def lint(entity: "Entity", context: "Project") -> RuleReport:
    """One verdict per applicable enabled rule, ascending rule number."""
    report = RuleReport(entity_id=entity.id)
    for rid in applicable_rules(entity, context):
        verdict, findings = check(rid, entity, context)
        report.verdicts.append(verdict)
        report.findings.extend(findings)
    return report


def attest(
    project: "Project",
    entity_id: str,
    rule_id: str,
    status: VerdictStatus | str,
    attestor: str,
    rationale: str | None = None,
) -> Verdict:
    """Record a human pass/fail judgment for a manual or assisted rule.

    The attestation is appended to the project log (history is retained;
    the latest one wins) and does not touch the entity's version.
    """
    rdef = project.rules.get(rule_id)
    if rdef is None:
        raise UnknownRule(f"no rule {rule_id!r}")
    if entity_id not in project.entities:
        raise DanglingEndpoint(f"entity {entity_id!r} does not resolve")
    if rdef.automation is Automation.AUTOMATED and not project.config.allow_attest_automated:
        raise AttestAutomatedForbidden(
            f"{rule_id} is automated; enable allow_attest_automated to override")
    if isinstance(status, str):
        status = VerdictStatus(status.lower())
    if status not in (VerdictStatus.PASS, VerdictStatus.FAIL):
        raise ValueError("attestation status must be pass or fail")
    verdict = Verdict(
        rule_id=rule_id,
        entity_id=entity_id,
        status=status,
        source=VerdictSource.ATTESTED,
        attestor=attestor,
        rationale=rationale,
        timestamp=utc_now_iso(),
    )
    project.attestations.append(verdict)
    return verdict
