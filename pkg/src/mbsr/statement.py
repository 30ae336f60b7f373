"""Structured "shall" statement slots: assembly and recovery from text.

A statement is held as five slots around a fixed modal::

    [Condition], [Subject] shall [Action] [Object] [Constraint].

Template-1 statements omit Condition and Object; Template-2 statements carry
at least one of them.  ``assemble`` renders the canonical text from slots and
``parse`` recovers slots from text.  Parsing is deterministic for a fixed
config: the first standalone "shall" is the modal, the longest leading
keyword clause ending in a comma before the modal is the condition, and the
earliest constraint-marker occurrence after the modal starts the constraint
(ties broken by longest marker).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from .errors import EmptySubject, MissingAction, MissingConstraint, MissingSubject, NoModal

DEFAULT_CONDITION_KEYWORDS: tuple[str, ...] = (
    "when", "while", "if", "during", "upon", "where", "after", "before",
)

# Order does not matter: the earliest occurrence wins, longest on ties, so the
# "at ..." compounds beat their bare forms when both match at one position.
DEFAULT_CONSTRAINT_MARKERS: tuple[str, ...] = (
    "within",
    "at least",
    "at most",
    "at no less than",
    "at no more than",
    "no less than",
    "no more than",
    "less than",
    "greater than",
    "between",
    "±",
    "in accordance with",
    "per",
)

DEFAULT_SUPERFLUOUS_INFINITIVES: tuple[str, ...] = (
    "be able to",
    "be capable of",
    "be designed to",
    "have the ability to",
    "have the capability to",
)

MODAL = "shall"

_MODAL_RE = re.compile(r"\bshall\b", re.IGNORECASE)
_WS_RE = re.compile(r"\s+")


class Template(Enum):
    ONE = "template-1"
    TWO = "template-2"


@dataclass(frozen=True)
class ParseConfig:
    condition_keywords: tuple[str, ...] = DEFAULT_CONDITION_KEYWORDS
    constraint_markers: tuple[str, ...] = DEFAULT_CONSTRAINT_MARKERS
    superfluous_infinitives: tuple[str, ...] = DEFAULT_SUPERFLUOUS_INFINITIVES


@dataclass
class PatternSlots:
    """The slot values of one statement; ``modal`` is always "shall"."""

    subject: str
    action: str
    constraint: str
    condition: str | None = None
    object: str | None = None
    modal: str = MODAL

    def normalized(self) -> "PatternSlots":
        """Copy with collapsed internal whitespace in every slot."""
        return PatternSlots(
            subject=_norm(self.subject),
            action=_norm(self.action),
            constraint=_norm(self.constraint),
            condition=_norm(self.condition) if self.condition else None,
            object=_norm(self.object) if self.object else None,
            modal=self.modal,
        )


@dataclass
class ParseFinding:
    """Structural observation made while parsing; feeds the rule engine."""

    code: str
    message: str
    span: tuple[int, int]
    rule_hint: str


@dataclass
class ParseResult:
    slots: PatternSlots
    confidence: float
    residue: list[tuple[int, int]] = field(default_factory=list)
    findings: list[ParseFinding] = field(default_factory=list)


def _norm(text: str) -> str:
    return _WS_RE.sub(" ", text).strip()


def assemble(slots: PatternSlots) -> str:
    """Render the canonical statement text for ``slots``.

    Raises ``MissingSubject``/``MissingAction``/``MissingConstraint`` when a
    mandatory slot is empty; every requirement must carry a verifiable
    constraint.
    """
    subject = _norm(slots.subject or "")
    action = _norm(slots.action or "")
    constraint = _norm(slots.constraint or "")
    if not subject:
        raise MissingSubject("subject slot is empty")
    if not action:
        raise MissingAction("action slot is empty")
    if not constraint:
        raise MissingConstraint("constraint slot is empty")

    parts: list[str] = []
    if slots.condition and _norm(slots.condition):
        parts.append(_norm(slots.condition).rstrip(",") + ",")
    parts.append(subject)
    parts.append(slots.modal or MODAL)
    parts.append(action)
    if slots.object and _norm(slots.object):
        parts.append(_norm(slots.object))
    parts.append(constraint)
    return " ".join(parts).rstrip(".") + "."


def detect_template(slots: PatternSlots) -> Template:
    """Template-1 iff both condition and object are absent."""
    has_condition = bool(slots.condition and slots.condition.strip())
    has_object = bool(slots.object and slots.object.strip())
    return Template.ONE if not (has_condition or has_object) else Template.TWO


def marker_occurrences(text: str, markers: tuple[str, ...]) -> list[tuple[int, int, str]]:
    """All constraint-marker occurrences as (start, end, marker), sorted by
    position then descending length."""
    hits: list[tuple[int, int, str]] = []
    for marker in markers:
        if marker == "±":
            for m in re.finditer(re.escape(marker), text):
                hits.append((m.start(), m.end(), marker))
            continue
        pattern = r"(?<!\w)" + re.escape(marker).replace(r"\ ", r"\s+") + r"(?!\w)"
        for m in re.finditer(pattern, text, re.IGNORECASE):
            hits.append((m.start(), m.end(), marker))
    hits.sort(key=lambda h: (h[0], -(h[1] - h[0])))
    return hits


def parse(text: str, config: ParseConfig | None = None) -> ParseResult:
    """Recover slots from statement text.

    Raises ``NoModal`` when no standalone "shall" is present and
    ``EmptySubject`` when nothing precedes the modal.  Any other input yields
    a best-effort result whose findings report what did not line up.
    """
    cfg = config or ParseConfig()
    modals = list(_MODAL_RE.finditer(text))
    if not modals:
        raise NoModal(f"no standalone {MODAL!r} token in statement")
    modal = modals[0]

    findings: list[ParseFinding] = []
    residue: list[tuple[int, int]] = []
    if len(modals) > 1:
        second = modals[1]
        findings.append(ParseFinding(
            code="multiple_modals",
            message=f"statement contains {len(modals)} 'shall' tokens",
            span=(second.start(), second.end()),
            rule_hint="R18",
        ))

    # Condition: leading keyword clause ending at the last comma before the
    # modal.  Without a comma there is no condition and the text up to the
    # modal is all subject.
    condition: str | None = None
    subject_start = 0
    lead = text[:modal.start()].lstrip()
    lead_word = lead.split(" ", 1)[0].lower().rstrip(",") if lead else ""
    if lead_word in {k.lower() for k in cfg.condition_keywords}:
        comma = text.rfind(",", 0, modal.start())
        if comma != -1:
            condition = _norm(text[:comma])
            subject_start = comma + 1

    subject = _norm(text[subject_start:modal.start()])
    if not subject:
        raise EmptySubject("no subject between condition and modal")

    post_start = modal.end()
    post = text[post_start:]
    stripped = post.rstrip()
    if stripped.endswith("."):
        post = stripped[:-1]

    occurrences = marker_occurrences(post, cfg.constraint_markers)
    if occurrences:
        c_start = occurrences[0][0]
        constraint = _norm(post[c_start:])
        pre_segment = post[:c_start]
    else:
        constraint = ""
        pre_segment = post
        findings.append(ParseFinding(
            code="constraint_not_recognized",
            message="no constraint marker found after the action",
            span=(post_start, post_start + len(post)),
            rule_hint="R1",
        ))

    # Strip superfluous-infinitive prefixes from the verb phrase; each one is
    # reported and its span counted as residue.
    offset = post_start
    while True:
        lstripped = pre_segment.lstrip()
        offset += len(pre_segment) - len(lstripped)
        pre_segment = lstripped
        lowered = pre_segment.lower()
        matched = None
        for phrase in cfg.superfluous_infinitives:
            p = phrase.lower()
            if lowered == p or lowered.startswith(p + " "):
                matched = phrase
                break
        if matched is None:
            break
        span = (offset, offset + len(matched))
        findings.append(ParseFinding(
            code="superfluous_infinitive",
            message=f"superfluous infinitive: {matched}",
            span=span,
            rule_hint="R10",
        ))
        residue.append(span)
        pre_segment = pre_segment[len(matched):]
        offset += len(matched)

    tokens = pre_segment.split()
    action = tokens[0] if tokens else ""
    obj = _norm(" ".join(tokens[1:])) if len(tokens) > 1 else None
    if not action:
        findings.append(ParseFinding(
            code="missing_action",
            message="no action verb after the modal",
            span=(post_start, post_start),
            rule_hint="R1",
        ))

    confidence = 1.0
    if not constraint:
        confidence -= 0.5
    if not action:
        confidence -= 0.3
    confidence -= 0.2 * sum(1 for f in findings if f.code in ("multiple_modals", "superfluous_infinitive"))
    confidence = max(0.0, round(confidence, 3))

    slots = PatternSlots(
        subject=subject,
        action=action,
        constraint=constraint,
        condition=condition,
        object=obj,
    )
    return ParseResult(slots=slots, confidence=confidence, residue=residue, findings=findings)
