"""Exception hierarchy shared by all mbsr modules.

Every contract violation raises a named subclass of :class:`MbsrError` so
callers (and the CLI) can distinguish usage errors from data findings.
Findings produced by lint/validation are *values*, never exceptions.
"""

from __future__ import annotations


class MbsrError(Exception):
    """Base class for all mbsr errors."""


# --- core model ---------------------------------------------------------


class DuplicateId(MbsrError):
    pass


class IdPatternMismatch(MbsrError):
    pass


class SlotsOnSetKind(MbsrError):
    pass


class UnknownAttribute(MbsrError):
    pass


class ValueKindMismatch(MbsrError):
    pass


class DerivedWriteThrough(MbsrError):
    """Write to a derived attribute could not be applied to the core field."""


class DanglingEndpoint(MbsrError):
    pass


class IllegalKindForEndpoints(MbsrError):
    pass


class ProjectInvalid(MbsrError):
    """Operation requires a clean project but integrity findings exist."""

    def __init__(self, findings):
        self.findings = list(findings)
        super().__init__(f"project has {len(self.findings)} integrity finding(s)")


# --- statement ----------------------------------------------------------


class MissingSubject(MbsrError):
    pass


class MissingAction(MbsrError):
    pass


class MissingConstraint(MbsrError):
    pass


class NoModal(MbsrError):
    """No standalone 'shall' token found in the statement."""


class EmptySubject(MbsrError):
    pass


# --- lexicon / units ----------------------------------------------------


class UnknownClass(MbsrError):
    pass


class UnknownUnit(MbsrError):
    pass


class MalformedNumber(MbsrError):
    pass


# --- rules --------------------------------------------------------------


class UnknownRule(MbsrError):
    pass


class RuleNotApplicable(MbsrError):
    pass


class AttestAutomatedForbidden(MbsrError):
    pass


# --- characteristics ----------------------------------------------------


class MarginalsMismatch(MbsrError):
    """Allocation matrix marginals disagree with the reference totals."""


class IncompleteReport(MbsrError):
    pass


# --- io -----------------------------------------------------------------


class MalformedFile(MbsrError):
    pass


class SchemaVersionMismatch(MbsrError):
    pass


class MissingHeader(MbsrError):
    pass


class DuplicateIdInFile(MbsrError):
    pass


class NoScoringRun(MbsrError):
    pass


class UnsupportedCombination(MbsrError):
    pass
