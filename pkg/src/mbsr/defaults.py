"""Shipped registry data and the default-project factory.

The attribute/rule/characteristic registries, allocation matrix, lexicons,
and unit registry all load from editable data files under ``mbsr/data``.  A
new project embeds copies of them so the project file stays self-contained.
"""

from __future__ import annotations

from importlib import resources

from .characteristics import (
    AllocationMatrix,
    CharacteristicDef,
    parse_allocation_matrix,
    parse_characteristics_file,
)
from .errors import MalformedFile
from .lexicon import TermLexicon, UnitRegistry, parse_lexicons_file, parse_units_file
from .model import AttributeDef, Project, ProjectConfig
from .rules import RuleDef, parse_rules_file


def _data_text(name: str) -> str:
    return resources.files("mbsr.data").joinpath(name).read_text(encoding="utf-8")


def parse_attributes_file(text: str) -> dict[int, AttributeDef]:
    attributes: dict[int, AttributeDef] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        cols = [c.strip() for c in line.split("|")]
        if len(cols) != 7:
            raise MalformedFile(f"attributes line {line_no}: need 7 columns")
        number_text, name, group, minimum, value_kind, derived, applies_to = cols
        number = int(number_text.lstrip("Aa"))
        attributes[number] = AttributeDef(
            number=number,
            name=name,
            group=group,
            minimum_set=minimum.lower() == "true",
            value_kind=value_kind,
            derived_from_core=None if derived == "-" else derived,
            applies_to=applies_to,
        )
    return attributes


def default_attributes() -> dict[int, AttributeDef]:
    return parse_attributes_file(_data_text("attributes.tsv"))


def default_rules() -> dict[str, RuleDef]:
    return parse_rules_file(_data_text("rules.tsv"))


def default_characteristics() -> dict[str, CharacteristicDef]:
    return parse_characteristics_file(_data_text("characteristics.tsv"))


def default_allocation_matrix() -> AllocationMatrix:
    return parse_allocation_matrix(_data_text("allocation_matrix.csv"))


def default_lexicons() -> dict[str, TermLexicon]:
    return parse_lexicons_file(_data_text("lexicons.txt"))


def default_units() -> UnitRegistry:
    return parse_units_file(_data_text("units.tsv"))


def new_project(name: str = "untitled", config: ProjectConfig | None = None) -> Project:
    """A fresh project with all shipped registries embedded."""
    matrix = default_allocation_matrix()
    rules = default_rules()
    for rid, rdef in rules.items():
        rdef.applicability = matrix.applicability(rid)
    return Project(
        name=name,
        config=config or ProjectConfig(),
        attributes=default_attributes(),
        rules=rules,
        characteristics=default_characteristics(),
        allocation=matrix,
        lexicons=default_lexicons(),
        units=default_units(),
    )


def attribute_number_by_name(project: Project, name: str) -> int | None:
    """Look an attribute up by (normalized) name; None when absent."""
    wanted = name.strip().lower().replace("_", " ")
    for number, attr_def in project.attributes.items():
        if attr_def.name.strip().lower() == wanted:
            return number
    return None
