"""Lexicon scanning, glossary annotation, and the unit registry."""

from __future__ import annotations

import random

import pytest

from mbsr.defaults import default_lexicons, default_units, new_project
from mbsr.errors import MalformedNumber, UnknownClass, UnknownUnit
from mbsr.lexicon import (
    GlossaryTerm,
    annotate_terms,
    find_occurrences,
    find_quantities,
    multiply_defined_terms,
    parse_quantity,
    undefined_terms,
)
from mbsr.model import EntityKind, create_entity, set_attribute

from generators import NOUNS

LEXICONS = default_lexicons()
UNITS = default_units()


def naive_occurrence_exists(text: str, phrases) -> bool:
    """Independent oracle: character-walk substring scan with word-boundary
    checks, no regex."""
    lowered = text.lower()

    def is_word_char(ch: str) -> bool:
        return ch.isalnum() or ch == "_"

    for phrase in phrases:
        p = phrase.lower()
        start = 0
        while True:
            i = lowered.find(p, start)
            if i == -1:
                break
            before_ok = i == 0 or not is_word_char(lowered[i - 1])
            after = i + len(p)
            after_ok = after == len(lowered) or not is_word_char(lowered[after])
            if before_ok and after_ok:
                return True
            start = i + 1
    return False


def test_find_occurrences_example():
    hits = find_occurrences("provide adequate margin", "vague", LEXICONS)
    assert [(span, phrase) for span, phrase in hits] == [((8, 16), "adequate")]


def test_find_occurrences_word_boundary():
    assert find_occurrences("inadequate", "vague", LEXICONS) == []


def test_find_occurrences_empty_text():
    assert find_occurrences("", "vague", LEXICONS) == []


def test_find_occurrences_unknown_class():
    with pytest.raises(UnknownClass):
        find_occurrences("whatever", "nonsense", LEXICONS)


def test_find_occurrences_spans_sorted_non_overlapping_and_exact():
    rng = random.Random(31)
    vague = LEXICONS["vague"].entries
    for _ in range(300):
        words = [rng.choice(NOUNS + vague + ("inadequate", "Adequate"))
                 for _ in range(rng.randint(1, 12))]
        text = " ".join(words)
        hits = find_occurrences(text, "vague", LEXICONS)
        last_end = -1
        for (start, end), phrase in hits:
            assert start >= last_end
            assert text[start:end].lower() == phrase.lower()
            last_end = end
        assert bool(hits) == naive_occurrence_exists(text, vague)


def test_undefined_terms_all_caps_token():
    project = new_project()
    entity = create_entity(project, EntityKind.REQUIREMENT, "REQ-001", "edl")
    entity.text = "The capsule shall survive EDL within 7 min."
    assert undefined_terms(project) == ["EDL"]


def test_undefined_terms_defined_acronym():
    project = new_project()
    entity = create_entity(project, EntityKind.REQUIREMENT, "REQ-001", "edl")
    entity.text = "The capsule shall survive EDL within 7 min."
    project.glossary["EDL"] = GlossaryTerm(
        "EDL", ["entry, descent, and landing"], is_acronym=True,
        expansion="entry, descent, and landing")
    assert undefined_terms(project) == []


def test_undefined_terms_matches_brute_force_scan():
    rng = random.Random(88)
    project = new_project()
    project.glossary["Sample Container"] = GlossaryTerm("Sample Container", ["the box"])
    texts = []
    for i in range(12):
        entity = create_entity(project, EntityKind.REQUIREMENT, f"REQ-{i:03d}", f"r{i}")
        pieces = ["the", rng.choice(NOUNS)]
        if rng.random() < 0.5:
            pieces.append(rng.choice(["EDL", "MSR", "CCD", "Sample Container",
                                      "Thermal Margin", "TBD"]))
        entity.text = " ".join(pieces) + " shall operate within 5 s."
        texts.append(entity.text)
        if rng.random() < 0.3:
            set_attribute(project, entity, 21, "relates to OCS hardware")
            texts.append("relates to OCS hardware")

    # Independent oracle: regex-free token scan over the same fields.
    import re
    expected = {}
    known = {t.lower() for t in project.glossary}
    for text in texts:
        for m in re.finditer(r"\b[A-Z][A-Z0-9]+\b", text):
            token = m.group(0)
            if token in ("TBD", "TBC", "TBR", "TBN"):
                continue
            if token.lower() not in known:
                expected.setdefault(token.lower(), token)
        for m in re.finditer(r"\b[A-Z][a-z0-9]+(?:\s+[A-Z][a-z0-9]+)+\b", text):
            words = m.group(0).split()
            if words[0] in ("The", "A", "An"):
                words = words[1:]
            if len(words) >= 2:
                phrase = " ".join(words)
                if phrase.lower() not in known:
                    expected.setdefault(phrase.lower(), phrase)
    assert undefined_terms(project) == sorted(expected.values())


def test_multiply_defined_terms():
    project = new_project()
    project.glossary["sample"] = GlossaryTerm("sample", ["a thing", "another thing"])
    project.glossary["orbit"] = GlossaryTerm("orbit", ["a path"])
    assert multiply_defined_terms(project) == ["sample"]
    project.glossary["sample"].definitions.pop()
    assert multiply_defined_terms(project) == []


def test_multiply_defined_matches_naive_filter():
    rng = random.Random(7)
    for _ in range(50):
        project = new_project()
        for i in range(rng.randint(0, 10)):
            n_defs = rng.randint(1, 3)
            project.glossary[f"term{i}"] = GlossaryTerm(
                f"term{i}", [f"def {j}" for j in range(n_defs)])
        expected = sorted(t for t, g in project.glossary.items() if len(g.definitions) > 1)
        assert multiply_defined_terms(project) == expected


GLOSSARY = {
    "sample container": GlossaryTerm("sample container", ["the box"]),
    "sample": GlossaryTerm("sample", ["the material"]),
}


def test_annotate_wraps_terms():
    assert annotate_terms("the sample container", GLOSSARY) == "the _sample container_"


def test_annotate_identity_without_terms():
    assert annotate_terms("no hits here", GLOSSARY) == "no hits here"


def test_annotate_longest_match_wins():
    out = annotate_terms("one sample container and one sample", GLOSSARY)
    assert out == "one _sample container_ and one _sample_"


def test_annotate_idempotent():
    rng = random.Random(12)
    for _ in range(100):
        words = [rng.choice(NOUNS + ("sample", "container", "sample container"))
                 for _ in range(rng.randint(1, 10))]
        text = " ".join(words)
        once = annotate_terms(text, GLOSSARY)
        assert annotate_terms(once, GLOSSARY) == once


def test_parse_glossary_file():
    from mbsr.lexicon import parse_glossary_file
    text = (
        "# comment\n"
        "sample | the collected material\n"
        "sample | a statistical subset\n"
        "EDL | terminal mission phase | entry, descent, and landing\n"
    )
    glossary = parse_glossary_file(text)
    assert glossary["sample"].definitions == ["the collected material",
                                              "a statistical subset"]
    assert glossary["EDL"].is_acronym
    assert glossary["EDL"].expansion == "entry, descent, and landing"


def test_parse_quantity_prefix_composition():
    q = parse_quantity("2 kbps", UNITS)
    assert q.value == 2.0
    assert q.unit == "kbps"
    assert q.dimension == "data-rate"
    assert q.base_symbol == "bps"
    assert q.scale == 1e3


def test_parse_quantity_unknown_unit():
    with pytest.raises(UnknownUnit):
        parse_quantity("10 flurbs", UNITS)


def test_parse_quantity_decimal_formats():
    good = parse_quantity("0.5 m", UNITS)
    assert good.findings == []
    bad = parse_quantity(".5 m", UNITS)
    assert bad.value == 0.5
    assert "missing leading zero" in bad.findings


def test_parse_quantity_malformed_number():
    with pytest.raises(MalformedNumber):
        parse_quantity("1,5 m", UNITS)


def test_compound_unit_expression():
    assert UNITS.is_unit_expression("km/h")
    assert UNITS.is_unit_expression("m/s2")
    assert not UNITS.is_unit_expression("launch/landing")
    label, base, _scale, exponents = UNITS.resolve_expression("km/h")
    assert label == "speed"
    assert base == "m/h"
    assert exponents == {"length": 1, "time": -1}


def test_derived_units_reduce_to_base_dimensions():
    base_labels = {u.dimension for u in UNITS.units.values() if u.kind == "base"}
    for unit in UNITS.units.values():
        assert set(unit.exponents) <= base_labels, unit.symbol


def test_derived_unit_exponents_match_hand_reduction():
    # Frozen by-hand reductions over base dimensions.
    expected = {
        "Hz": {"time": -1},
        "N": {"mass": 1, "length": 1, "time": -2},
        "Pa": {"mass": 1, "length": -1, "time": -2},
        "J": {"mass": 1, "length": 2, "time": -2},
        "W": {"mass": 1, "length": 2, "time": -3},
        "V": {"mass": 1, "length": 2, "time": -3, "current": -1},
        "bps": {"data": 1, "time": -1},
        "lx": {"luminous-intensity": 1, "length": -2},
        "%": {},
        "min": {"time": 1},
    }
    for symbol, exponents in expected.items():
        assert UNITS.units[symbol].exponents == exponents, symbol


def test_find_quantities_skips_prose_words():
    quantities, unknown = find_quantities(
        "the recorder shall hold 3 sample images within 20 s", UNITS)
    assert [q.unit for q in quantities] == ["s"]
    assert unknown == []


def test_find_quantities_reports_short_unknown_units():
    _, unknown = find_quantities("the tank shall hold 10 flurb", UNITS)
    assert [token for _span, token in unknown] == ["flurb"]
