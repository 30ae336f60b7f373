"""Structured requirements as data: statement slots, writing-rule lint,
characteristic scoring, traceability, and checklist reports."""

from .characteristics import (
    AllocationMatrix,
    CharacteristicDef,
    CharacteristicStatus,
    ScoreStatus,
    load_allocation_matrix,
    metrics,
    run_scoring,
    score,
    set_checks,
)
from .defaults import new_project
from .errors import MbsrError
from .lexicon import (
    GlossaryTerm,
    Quantity,
    TermLexicon,
    UnitRegistry,
    annotate_terms,
    find_occurrences,
    multiply_defined_terms,
    parse_glossary_file,
    parse_quantity,
    undefined_terms,
)
from .model import (
    AttributeDef,
    Entity,
    EntityKind,
    Project,
    ProjectConfig,
    Relationship,
    RelationshipKind,
    add_relationship,
    create_entity,
    get_attribute,
    set_attribute,
    validate_project,
)
from .rules import Finding, RuleDef, RuleReport, Verdict, VerdictStatus, attest, check, lint
from .statement import ParseResult, PatternSlots, Template, assemble, detect_template, parse
from .storage import export_csv, import_csv, load_project, save_project, tbx_scan
from .trace import build_graph, coverage_summary, cycles, orphans, unverified

__all__ = [name for name in dir() if not name.startswith("_")]

__version__ = "0.1.0"
