"""Glossary, word-class lexicons, and the units-of-measure registry.

These are the data surfaces the rule engine scans against: word classes such
as vague terms or escape clauses, the project glossary (terms + acronyms),
and a registry of unit symbols with SI prefixes and dimension bookkeeping.
All lookups are case-insensitive with exact spans; everything is immutable
after load and safe for concurrent reads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Mapping

from .errors import MalformedFile, MalformedNumber, UnknownClass, UnknownUnit

if TYPE_CHECKING:
    from .model import Project

# Shipped word-class names.  Entries live in data/lexicons.txt and may be
# edited per organization; the class list itself is fixed.
LEXICON_CLASSES = (
    "vague",
    "escape",
    "open_ended",
    "superfluous_infinitive",
    "pronoun",
    "absolute",
    "universal_qualifier",
    "combinator",
    "purpose_phrase",
    "indefinite_temporal",
    "abbreviation",
)

TBX_MARKERS = ("TBD", "TBC", "TBR", "TBN")

_NOT_UNITS = {"times", "item", "items", "user", "users", "time", "each"}

_NUMBER_RE = re.compile(r"^[+-]?(\d+(\.\d+)?|\.\d+)([eE][+-]?\d+)?$")
_QUANTITY_SCAN_RE = re.compile(
    r"(?<![\w.±])([+-]?(?:\d+(?:\.\d+)?|\.\d+))\s*([A-Za-zµ°Ω%][\w/µ°Ω%]*)?"
)
_ACRONYM_RE = re.compile(r"\b[A-Z][A-Z0-9]+\b")
_CAP_PHRASE_RE = re.compile(r"\b[A-Z][a-z0-9]+(?:\s+[A-Z][a-z0-9]+)+\b")


def _phrase_pattern(phrase: str) -> re.Pattern[str]:
    return re.compile(r"(?<!\w)" + re.escape(phrase).replace(r"\ ", r"\s+") + r"(?!\w)",
                      re.IGNORECASE)


@dataclass
class TermLexicon:
    """One word class and its phrase entries (lowercase, unique)."""

    category: str
    entries: tuple[str, ...]
    _patterns: list[re.Pattern[str]] | None = field(default=None, compare=False, repr=False)

    def patterns(self) -> list[re.Pattern[str]]:
        if self._patterns is None:
            self._patterns = [_phrase_pattern(e) for e in self.entries]
        return self._patterns


@dataclass
class GlossaryTerm:
    term: str
    definitions: list[str]
    is_acronym: bool = False
    expansion: str | None = None


def find_occurrences(
    text: str,
    category: str,
    lexicons: Mapping[str, TermLexicon],
) -> list[tuple[tuple[int, int], str]]:
    """All whole-word matches of the class's phrases, as ((start, end), phrase).

    Case-insensitive; spans never overlap (the longest match wins, then the
    earliest) and come back sorted ascending.
    """
    if category not in lexicons:
        raise UnknownClass(f"no lexicon class {category!r}")
    lexicon = lexicons[category]
    raw: list[tuple[int, int, str]] = []
    for phrase, pattern in zip(lexicon.entries, lexicon.patterns()):
        for m in pattern.finditer(text):
            raw.append((m.start(), m.end(), phrase))
    raw.sort(key=lambda h: (h[0], -(h[1] - h[0])))
    chosen: list[tuple[tuple[int, int], str]] = []
    last_end = -1
    for start, end, phrase in raw:
        if start < last_end:
            continue
        chosen.append(((start, end), phrase))
        last_end = end
    return chosen


def _glossary_matches(text: str, glossary: Mapping[str, GlossaryTerm]) -> list[tuple[int, int]]:
    hits: list[tuple[int, int]] = []
    for term in glossary:
        for m in _phrase_pattern(term).finditer(text):
            hits.append((m.start(), m.end()))
    hits.sort(key=lambda h: (h[0], -(h[1] - h[0])))
    chosen: list[tuple[int, int]] = []
    last_end = -1
    for start, end in hits:
        if start < last_end:
            continue
        chosen.append((start, end))
        last_end = end
    return chosen


def annotate_terms(text: str, glossary: Mapping[str, GlossaryTerm]) -> str:
    """Wrap every glossary-term occurrence in underline markers ``_term_``.

    Longest match wins on overlaps; text already inside markers is left
    alone, so the operation is idempotent.
    """
    protected = [(m.start(), m.end()) for m in re.finditer(r"_[^_\n]+_", text)]

    def is_protected(start: int, end: int) -> bool:
        return any(start < p_end and end > p_start for p_start, p_end in protected)

    out = text
    for start, end in reversed(_glossary_matches(text, glossary)):
        if is_protected(start, end):
            continue
        out = out[:start] + "_" + out[start:end] + "_" + out[end:]
    return out


def acronym_tokens(text: str) -> list[tuple[tuple[int, int], str]]:
    """All-caps tokens of length >= 2, TBX placeholder markers excluded."""
    hits = []
    for m in _ACRONYM_RE.finditer(text):
        if m.group(0) in TBX_MARKERS:
            continue
        hits.append(((m.start(), m.end()), m.group(0)))
    return hits


def term_candidates(text: str) -> list[tuple[tuple[int, int], str]]:
    """Glossary-candidate surface forms with spans: all-caps tokens and
    capitalized multiword phrases (leading article dropped)."""
    candidates = list(acronym_tokens(text))
    for m in _CAP_PHRASE_RE.finditer(text):
        start = m.start()
        words = m.group(0).split()
        if words[0] in ("The", "A", "An"):
            start += len(words[0]) + 1
            words = words[1:]
        if len(words) >= 2:
            phrase = " ".join(words)
            candidates.append(((start, start + len(phrase)), phrase))
    candidates.sort(key=lambda c: c[0])
    return candidates


def entity_textual_fields(entity, attributes: Mapping[int, object]) -> list[tuple[str, str]]:
    """(field name, text) for the entity's statement text and every textual
    attribute value, in a fixed order."""
    textual_kinds = {"text", "enumeration", "reference"}
    fields: list[tuple[str, str]] = []
    if entity.text:
        fields.append(("text", entity.text))
    for number in sorted(entity.attributes):
        attr_def = attributes.get(number)
        if attr_def is not None and getattr(attr_def, "value_kind", None) in textual_kinds:
            value = entity.attributes[number]
            if isinstance(value, str) and value:
                fields.append((f"attribute.A{number}", value))
    return fields


def undefined_terms(project: "Project") -> list[str]:
    """Candidate terms used anywhere in the project but absent from the
    glossary, sorted ascending (case-insensitive dedupe)."""
    known = {t.lower() for t in project.glossary}
    seen: dict[str, str] = {}
    for entity in project.entities.values():
        for _field, text in entity_textual_fields(entity, project.attributes):
            for _span, candidate in term_candidates(text):
                if candidate.lower() in known:
                    continue
                seen.setdefault(candidate.lower(), candidate)
    return sorted(seen.values())


def multiply_defined_terms(project: "Project") -> list[str]:
    return sorted(term for term, entry in project.glossary.items()
                  if len(entry.definitions) > 1)


# --- units --------------------------------------------------------------


@dataclass
class UnitDef:
    symbol: str
    name: str
    dimension: str
    kind: str  # "base" | "derived"
    reduction: str | None = None
    exponents: dict[str, int] = field(default_factory=dict)


@dataclass
class Quantity:
    """A parsed numeric literal with its resolved unit."""

    value: float
    unit: str
    dimension: str
    base_symbol: str
    scale: float
    exponents: dict[str, int] = field(default_factory=dict)
    span: tuple[int, int] | None = None
    findings: list[str] = field(default_factory=list)


@dataclass
class UnitRegistry:
    prefixes: dict[str, float]
    units: dict[str, UnitDef]
    dimension_formulas: dict[str, dict[str, int]]
    _label_index: dict[tuple[tuple[str, int], ...], str] | None = field(
        default=None, compare=False, repr=False)

    def _index(self) -> dict[tuple[tuple[str, int], ...], str]:
        if self._label_index is None:
            index: dict[tuple[tuple[str, int], ...], str] = {}
            for unit in self.units.values():
                index.setdefault(_exp_key(unit.exponents), unit.dimension)
            for label, exps in self.dimension_formulas.items():
                index.setdefault(_exp_key(exps), label)
            self._label_index = index
        return self._label_index

    def resolve_symbol(self, symbol: str) -> tuple[UnitDef, float]:
        """Resolve one (possibly prefixed) unit symbol to (unit, scale)."""
        if symbol in self.units:
            return self.units[symbol], 1.0
        for prefix in sorted(self.prefixes, key=len, reverse=True):
            if symbol.startswith(prefix) and symbol[len(prefix):] in self.units:
                return self.units[symbol[len(prefix):]], self.prefixes[prefix]
        raise UnknownUnit(f"unit {symbol!r} is not registered")

    def resolve_expression(self, expression: str) -> tuple[str, str, float, dict[str, int]]:
        """Resolve a unit expression (e.g. ``kbps`` or ``km/h`` or ``m/s2``).

        Returns (dimension label, base spelling, scale, exponents).
        """
        expression = expression.strip().rstrip(".")
        if not expression:
            raise UnknownUnit("empty unit expression")
        components = expression.split("/")
        exponents: dict[str, int] = {}
        base_parts: list[str] = []
        scale = 1.0
        for i, component in enumerate(components):
            component = component.strip()
            m = re.fullmatch(r"(.+?)(\d)?", component)
            if m is None or not m.group(1):
                raise UnknownUnit(f"unit {expression!r} is not registered")
            sym, power_text = m.group(1), m.group(2)
            power = int(power_text) if power_text else 1
            unit, factor = self.resolve_symbol(sym)
            sign = 1 if i == 0 else -1
            for label, exp in unit.exponents.items():
                exponents[label] = exponents.get(label, 0) + sign * power * exp
                if exponents[label] == 0:
                    del exponents[label]
            scale *= factor ** (sign * power)
            base_parts.append(unit.symbol + (power_text or ""))
        base_symbol = "/".join(base_parts)
        if len(components) == 1 and not re.search(r"\d$", components[0]):
            unit, _ = self.resolve_symbol(components[0].strip())
            label = unit.dimension
        else:
            label = self._index().get(_exp_key(exponents))
            if label is None:
                label = _canonical_label(exponents)
        return label, base_symbol, scale, exponents

    def is_unit_expression(self, token: str) -> bool:
        try:
            self.resolve_expression(token)
            return True
        except UnknownUnit:
            return False


def _exp_key(exponents: dict[str, int]) -> tuple[tuple[str, int], ...]:
    return tuple(sorted(exponents.items()))


def _canonical_label(exponents: dict[str, int]) -> str:
    if not exponents:
        return "dimensionless"
    num = [f"{k}{v if v > 1 else ''}" for k, v in sorted(exponents.items()) if v > 0]
    den = [f"{k}{-v if v < -1 else ''}" for k, v in sorted(exponents.items()) if v < 0]
    label = "·".join(num) if num else "1"
    if den:
        label += "/" + "·".join(den)
    return label


def parse_quantity(token: str, registry: UnitRegistry) -> Quantity:
    """Parse ``"<number> <unit>"`` against the registry.

    A number written without its leading zero (``.5 m``) still parses but the
    result carries a decimal-format finding.
    """
    parts = token.strip().split(None, 1)
    if not parts:
        raise MalformedNumber("empty quantity token")
    number_text = parts[0]
    if not _NUMBER_RE.match(number_text):
        raise MalformedNumber(f"malformed numeric literal {number_text!r}")
    findings: list[str] = []
    if number_text.lstrip("+-").startswith("."):
        findings.append("missing leading zero")
    if len(parts) < 2 or not parts[1].strip():
        raise UnknownUnit(f"no unit in quantity {token!r}")
    unit_text = parts[1].strip()
    label, base_symbol, scale, exponents = registry.resolve_expression(unit_text)
    return Quantity(
        value=float(number_text),
        unit=unit_text.rstrip("."),
        dimension=label,
        base_symbol=base_symbol,
        scale=scale,
        exponents=exponents,
        findings=findings,
    )


def find_quantities(text: str, registry: UnitRegistry) -> tuple[list[Quantity], list[tuple[tuple[int, int], str]]]:
    """Scan text for number+unit pairs.

    Returns (resolved quantities, unknown-unit hits).  A following token only
    counts as an unknown unit when it is short and unit-shaped; longer prose
    words after a number are ignored rather than misreported.
    """
    quantities: list[Quantity] = []
    unknown: list[tuple[tuple[int, int], str]] = []
    for m in _QUANTITY_SCAN_RE.finditer(text):
        number_text, unit_text = m.group(1), m.group(2)
        if unit_text is None:
            continue
        unit_text = unit_text.rstrip(".")
        if not unit_text or unit_text.lower() in _NOT_UNITS:
            continue
        span = (m.start(), m.start(2) + len(unit_text))
        try:
            label, base_symbol, scale, exponents = registry.resolve_expression(unit_text)
        except UnknownUnit:
            if len(unit_text) <= 5 or "/" in unit_text:
                unknown.append((span, unit_text))
            continue
        findings = []
        if number_text.lstrip("+-").startswith("."):
            findings.append("missing leading zero")
        quantities.append(Quantity(
            value=float(number_text),
            unit=unit_text,
            dimension=label,
            base_symbol=base_symbol,
            scale=scale,
            exponents=exponents,
            span=span,
            findings=findings,
        ))
    return quantities, unknown


# --- data-file loaders ----------------------------------------------------


def parse_lexicons_file(text: str) -> dict[str, TermLexicon]:
    """Parse the ``[class]`` + one-entry-per-line lexicon format."""
    lexicons: dict[str, list[str]] = {}
    current: str | None = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            lexicons.setdefault(current, [])
            continue
        if current is None:
            raise MalformedFile(f"lexicons line {line_no}: entry before any [class] header")
        entry = line.lower()
        if entry not in lexicons[current]:
            lexicons[current].append(entry)
    result = {}
    for category, entries in lexicons.items():
        if not entries:
            raise MalformedFile(f"lexicon class {category!r} has no entries")
        result[category] = TermLexicon(category=category, entries=tuple(entries))
    return result


def parse_glossary_file(text: str) -> dict[str, GlossaryTerm]:
    """Parse ``term | definition [| expansion]`` rows; a repeated term adds
    another definition, a third column marks an acronym."""
    glossary: dict[str, GlossaryTerm] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        cols = [c.strip() for c in line.split("|")]
        if len(cols) not in (2, 3):
            raise MalformedFile(f"glossary line {line_no}: need 2 or 3 columns")
        term, definition = cols[0], cols[1]
        expansion = cols[2] if len(cols) == 3 else None
        entry = glossary.get(term)
        if entry is None:
            glossary[term] = GlossaryTerm(
                term=term,
                definitions=[definition],
                is_acronym=expansion is not None,
                expansion=expansion,
            )
        else:
            entry.definitions.append(definition)
            if expansion:
                entry.is_acronym = True
                entry.expansion = expansion
    return glossary


def _parse_formula(formula: str, resolve: dict[str, dict[str, int]]) -> dict[str, int]:
    exponents: dict[str, int] = {}
    slash = formula.split("/")
    if len(slash) > 2:
        raise MalformedFile(f"formula {formula!r}: at most one '/'")
    for i, side in enumerate(slash):
        sign = 1 if i == 0 else -1
        for token in re.split(r"[·*]", side):
            token = token.strip()
            if token in ("", "1"):
                continue
            m = re.fullmatch(r"(.+?)(\d)?", token)
            name, power_text = m.group(1), m.group(2)
            power = int(power_text) if power_text else 1
            if name not in resolve:
                raise MalformedFile(f"formula {formula!r}: unknown term {name!r}")
            for label, exp in resolve[name].items():
                exponents[label] = exponents.get(label, 0) + sign * power * exp
                if exponents[label] == 0:
                    del exponents[label]
    return exponents


def parse_units_file(text: str) -> UnitRegistry:
    """Parse the sectioned ``symbol | name | ...`` units format.

    Sections may appear in any order; units are processed before dimension
    formulas so that formulas can reference base dimensions.
    """
    sections: dict[str, list[tuple[int, list[str]]]] = {}
    section = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            sections.setdefault(section, [])
            continue
        if section is None:
            raise MalformedFile(f"units line {line_no}: row outside any section")
        sections[section].append((line_no, [c.strip() for c in line.split("|")]))
    unknown = set(sections) - {"prefixes", "dimensions", "units"}
    if unknown:
        raise MalformedFile(f"units file: unknown sections {sorted(unknown)}")

    prefixes: dict[str, float] = {}
    for line_no, cols in sections.get("prefixes", []):
        if len(cols) != 3:
            raise MalformedFile(f"units line {line_no}: prefix rows need 3 columns")
        prefixes[cols[0]] = float(cols[2])

    units: dict[str, UnitDef] = {}
    base_dims: dict[str, dict[str, int]] = {}
    for line_no, cols in sections.get("units", []):
        if len(cols) < 4:
            raise MalformedFile(f"units line {line_no}: unit rows need >= 4 columns")
        symbol, name, dimension, kind = cols[:4]
        if symbol in units:
            raise MalformedFile(f"units line {line_no}: duplicate symbol {symbol!r}")
        if kind == "base":
            exponents = {dimension: 1}
            base_dims[dimension] = {dimension: 1}
            unit = UnitDef(symbol, name, dimension, kind, exponents=exponents)
        elif kind == "derived":
            if len(cols) != 5:
                raise MalformedFile(f"units line {line_no}: derived rows need a reduction")
            reduction = cols[4]
            unit_exps = {u.symbol: u.exponents for u in units.values()}
            exponents = _parse_formula(reduction, unit_exps)
            unit = UnitDef(symbol, name, dimension, kind, reduction, exponents)
        else:
            raise MalformedFile(f"units line {line_no}: kind must be base or derived")
        units[symbol] = unit

    dimension_formulas: dict[str, dict[str, int]] = {}
    for line_no, cols in sections.get("dimensions", []):
        if len(cols) != 2:
            raise MalformedFile(f"units line {line_no}: dimension rows need 2 columns")
        dimension_formulas[cols[0]] = _parse_formula(cols[1], base_dims)

    return UnitRegistry(prefixes=prefixes, units=units, dimension_formulas=dimension_formulas)
