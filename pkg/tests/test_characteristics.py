"""Allocation-matrix fidelity, scoring aggregation, set checks, metrics."""

from __future__ import annotations

import random

import pytest

from mbsr.characteristics import (
    CHARACTERISTIC_IDS,
    INDIVIDUAL_CHARACTERISTICS,
    REFERENCE_COLUMN_TOTALS,
    REFERENCE_GRAND_TOTAL,
    REFERENCE_ROW_TOTALS,
    RULE_IDS,
    SET_CHARACTERISTICS,
    AllocationMatrix,
    RuleApplicability,
    ScoreStatus,
    metrics,
    parse_allocation_matrix,
    run_scoring,
    score,
    set_checks,
    validate_matrix,
)
from mbsr.defaults import default_allocation_matrix, new_project
from mbsr.errors import MarginalsMismatch
from mbsr.model import EntityKind, RelationshipKind, create_entity
from mbsr.rules import RuleReport, Verdict, VerdictStatus, attest
from mbsr.statement import PatternSlots

MATRIX = default_allocation_matrix()


def make_report(entity_id, statuses: dict[str, VerdictStatus]) -> RuleReport:
    report = RuleReport(entity_id=entity_id)
    for rid, status in statuses.items():
        report.verdicts.append(Verdict(rule_id=rid, entity_id=entity_id, status=status))
    return report


def individual_entity(project, entity_id="REQ-001", root=True):
    slots = PatternSlots(subject="the rover", action="stop", constraint="within 5 s")
    return create_entity(project, EntityKind.REQUIREMENT, entity_id, "stop", slots=slots,
                         root_flag=root)


def test_shipped_matrix_loads_with_expected_totals():
    # Independent summation of the reference totals.
    assert sum(REFERENCE_ROW_TOTALS.values()) == 146
    assert sum(REFERENCE_COLUMN_TOTALS.values()) == 146
    assert MATRIX.grand_total == REFERENCE_GRAND_TOTAL == 146


def test_matrix_applicability_from_columns():
    assert MATRIX.applicability("R7") is RuleApplicability.INDIVIDUAL
    assert MATRIX.applicability("R42") is RuleApplicability.SET
    assert MATRIX.applicability("R29") is RuleApplicability.SET
    assert MATRIX.applicability("R36") is RuleApplicability.BOTH
    individual = {rid for rid in RULE_IDS
                  if MATRIX.applicability(rid) is not RuleApplicability.SET}
    assert "R42" not in individual


def test_row_perturbation_names_the_row():
    cells = dict(MATRIX.cells)
    cells[("R1", "C3")] += 1
    with pytest.raises(MarginalsMismatch) as err:
        validate_matrix(AllocationMatrix(cells=cells))
    assert "R1 expected 5" in str(err.value)


def test_column_perturbation_names_the_column():
    # Move one count within a row: row totals stay intact, C3 sums to 29.
    cells = dict(MATRIX.cells)
    cells[("R1", "C3")] -= 1
    cells[("R1", "C4")] = cells.get(("R1", "C4"), 0) + 1
    with pytest.raises(MarginalsMismatch) as err:
        validate_matrix(AllocationMatrix(cells=cells))
    assert "C3 expected 30" in str(err.value)


def test_every_single_cell_perturbation_rejected():
    for rid in RULE_IDS:
        for cid in CHARACTERISTIC_IDS:
            for delta in (1, -1):
                cells = dict(MATRIX.cells)
                value = cells.get((rid, cid), 0) + delta
                if value < 0:
                    continue
                cells[(rid, cid)] = value
                with pytest.raises(MarginalsMismatch):
                    validate_matrix(AllocationMatrix(cells=cells))


def test_malformed_matrix_text_rejected():
    from mbsr.errors import MalformedFile
    with pytest.raises(MalformedFile):
        parse_allocation_matrix("rule,C1\nR1,1\n")


def test_score_all_pass_satisfies():
    project = new_project()
    entity = individual_entity(project)
    report = make_report(entity.id, {rid: VerdictStatus.PASS
                                     for rid in RULE_IDS
                                     if MATRIX.applicability(rid) is not RuleApplicability.SET})
    statuses, edges = score(entity, report, MATRIX)
    assert all(s.status is ScoreStatus.SATISFIED for s in statuses)
    assert {(e.kind, e.target) for e in edges} == {
        (RelationshipKind.SATISFY, cid) for cid in INDIVIDUAL_CHARACTERISTICS}


def test_score_one_fail_violates_its_characteristics():
    project = new_project()
    entity = individual_entity(project)
    statuses_map = {rid: VerdictStatus.PASS for rid in RULE_IDS
                    if MATRIX.applicability(rid) is not RuleApplicability.SET}
    statuses_map["R7"] = VerdictStatus.FAIL
    report = make_report(entity.id, statuses_map)
    statuses, edges = score(entity, report, MATRIX)
    by_cid = {s.characteristic_id: s.status for s in statuses}
    for cid in MATRIX.characteristics_for("R7"):
        assert by_cid[cid] is ScoreStatus.VIOLATED
    violate_targets = {e.target for e in edges if e.kind is RelationshipKind.VIOLATE}
    assert violate_targets == set(MATRIX.characteristics_for("R7"))


def test_score_needs_review_undetermined_no_edge():
    project = new_project()
    entity = individual_entity(project)
    statuses_map = {rid: VerdictStatus.PASS for rid in RULE_IDS
                    if MATRIX.applicability(rid) is not RuleApplicability.SET}
    statuses_map["R31"] = VerdictStatus.NEEDS_REVIEW  # manual, unattested
    report = make_report(entity.id, statuses_map)
    statuses, edges = score(entity, report, MATRIX)
    by_cid = {s.characteristic_id: s.status for s in statuses}
    assert by_cid["C2"] is ScoreStatus.UNDETERMINED  # R31 allocates under C2
    edge_targets = {e.target for e in edges}
    assert "C2" not in edge_targets


def test_score_warn_blocks_only_in_strict_mode():
    project = new_project()
    entity = individual_entity(project)
    statuses_map = {rid: VerdictStatus.PASS for rid in RULE_IDS
                    if MATRIX.applicability(rid) is not RuleApplicability.SET}
    statuses_map["R32"] = VerdictStatus.WARN
    report = make_report(entity.id, statuses_map)
    lax, _ = score(entity, report, MATRIX, strict=False)
    assert all(s.status is ScoreStatus.SATISFIED for s in lax)
    strict, _ = score(entity, report, MATRIX, strict=True)
    by_cid = {s.characteristic_id: s.status for s in strict}
    for cid in MATRIX.characteristics_for("R32"):
        assert by_cid[cid] is ScoreStatus.UNDETERMINED


def test_score_produces_no_set_statuses_for_requirements():
    project = new_project()
    entity = individual_entity(project)
    report = make_report(entity.id, {rid: VerdictStatus.PASS
                                     for rid in RULE_IDS
                                     if MATRIX.applicability(rid) is not RuleApplicability.SET})
    statuses, _ = score(entity, report, MATRIX)
    produced = {s.characteristic_id for s in statuses}
    assert produced == set(INDIVIDUAL_CHARACTERISTICS)
    assert not produced & set(SET_CHARACTERISTICS)


def test_edge_exclusivity_random_assignments():
    rng = random.Random(1234)
    project = new_project()
    entity = individual_entity(project)
    individual_rules = [rid for rid in RULE_IDS
                        if MATRIX.applicability(rid) is not RuleApplicability.SET]
    options = list(VerdictStatus)[:4]
    for _ in range(500):
        report = make_report(entity.id, {rid: rng.choice(options)
                                         for rid in individual_rules})
        statuses, edges = score(entity, report, MATRIX, strict=rng.random() < 0.5)
        pairs = {}
        for edge in edges:
            key = (edge.source, edge.target)
            assert key not in pairs
            pairs[key] = edge.kind
        for status in statuses:
            has_fail = any(v == "fail" for _r, v in status.contributing)
            if status.status is ScoreStatus.VIOLATED:
                assert has_fail
            if status.status is ScoreStatus.SATISFIED:
                assert not has_fail


def test_score_idempotent():
    project = new_project()
    entity = individual_entity(project)
    report = make_report(entity.id, {rid: VerdictStatus.PASS
                                     for rid in RULE_IDS
                                     if MATRIX.applicability(rid) is not RuleApplicability.SET})
    first = score(entity, report, MATRIX)
    second = score(entity, report, MATRIX)
    assert first == second


def test_attesting_pass_never_worsens_status():
    # Monotonicity: needs-review -> pass cannot flip satisfied to violated.
    rng = random.Random(990)
    project = new_project()
    slots = PatternSlots(subject="the rover", action="stop", constraint="within 5 s")
    entity = create_entity(project, EntityKind.REQUIREMENT, "REQ-001", "stop",
                           slots=slots, root_flag=True)
    for _ in range(40):
        project.attestations.clear()
        manual_rules = [rid for rid, rdef in project.rules.items()
                        if rdef.automation.value != "automated"
                        and MATRIX.applicability(rid) is not RuleApplicability.SET]
        for rid in rng.sample(manual_rules, rng.randint(0, 3)):
            attest(project, entity.id, rid, "pass", attestor="qa")
        before = {(s.entity_id, s.characteristic_id): s.status
                  for s in run_scoring(project).statuses}
        unattested = [rid for rid in manual_rules
                      if all(a.rule_id != rid for a in project.attestations)]
        if not unattested:
            continue
        attest(project, entity.id, rng.choice(unattested), "pass", attestor="qa")
        after = {(s.entity_id, s.characteristic_id): s.status
                 for s in run_scoring(project).statuses}
        for key, old in before.items():
            if old is ScoreStatus.SATISFIED:
                assert after[key] is not ScoreStatus.VIOLATED
            if old is ScoreStatus.VIOLATED:
                assert after[key] is ScoreStatus.VIOLATED


def make_set_project():
    project = new_project()
    slots_a = PatternSlots(subject="the rover", action="stop", constraint="within 5 s")
    slots_b = PatternSlots(subject="the rover", action="stop", constraint="within 5 s")
    a = create_entity(project, EntityKind.REQUIREMENT, "REQ-001", "a", slots=slots_a, root_flag=True)
    b = create_entity(project, EntityKind.REQUIREMENT, "REQ-002", "b", slots=slots_b, root_flag=True)
    container = create_entity(project, EntityKind.REQUIREMENT_SET, "SET-001", "the set")
    container.members = ["REQ-001", "REQ-002"]
    return project, container, a, b


def test_set_checks_duplicate_statements():
    project, container, a, b = make_set_project()
    findings = set_checks(container, [a, b], project)
    r30 = [f for f in findings if f.rule_id == "R30"]
    assert {f.entity_id for f in r30} == {"REQ-001", "REQ-002"}


def test_set_checks_mixed_units_per_dimension():
    project, container, a, b = make_set_project()
    a.slots = None
    a.text = "the rover shall send data at no less than 2 kbps."
    b.slots = None
    b.text = "the rover shall send data at no less than 1 Mbit/s."
    findings = set_checks(container, [a, b], project)
    r36 = [f for f in findings if f.rule_id == "R36"]
    assert len(r36) == 1
    assert "data-rate" in r36[0].message


def test_set_checks_empty_set():
    project = new_project()
    container = create_entity(project, EntityKind.REQUIREMENT_SET, "SET-001", "empty")
    findings = set_checks(container, [], project)
    assert any(f.rule_id == "R42" and "no members" in f.message for f in findings)


def test_set_checks_unlinked_members():
    project, container, a, b = make_set_project()
    a.root_flag = False
    b.root_flag = False
    b.text = "the rover shall halt within 6 s."
    b.slots = None
    findings = set_checks(container, [a, b], project)
    r41 = {f.entity_id for f in findings if f.rule_id == "R41"}
    assert r41 == {"REQ-001", "REQ-002"}


def test_metrics_clean_project_zero_violated():
    project = new_project()
    individual_entity(project)
    run = run_scoring(project)
    triage = metrics(project, run)
    assert all(c["violated"] == 0 for c in triage.per_characteristic.values())


def test_metrics_single_violation_counts_once():
    project = new_project()
    entity = individual_entity(project)
    entity.slots = None
    entity.text = "the rover shall provide adequate margin within 5 s."
    run = run_scoring(project)
    triage = metrics(project, run)
    assert triage.per_characteristic["C3"]["violated"] == 1
    assert triage.entity_ranking[0] == ("REQ-001", len(MATRIX.characteristics_for("R7")))


def test_metrics_match_brute_force_tally():
    rng = random.Random(321)
    project = new_project()
    for i in range(6):
        entity = individual_entity(project, f"REQ-{i:03d}", root=rng.random() < 0.5)
        if rng.random() < 0.5:
            entity.slots = None
            entity.text = "the rover shall provide adequate margin within 5 s."
    run = run_scoring(project)
    triage = metrics(project, run)
    for cid in CHARACTERISTIC_IDS:
        for bucket in ("satisfied", "violated", "undetermined"):
            expected = sum(1 for s in run.statuses
                           if s.characteristic_id == cid and s.status.value == bucket)
            assert triage.per_characteristic[cid][bucket] == expected
    for rid in RULE_IDS:
        for status in ("pass", "fail", "warn", "needs-review"):
            expected = sum(1 for v in run.verdicts
                           if v.rule_id == rid and v.status.value == status)
            assert triage.per_rule[rid][status] == expected
    ranking = triage.entity_ranking
    assert ranking == sorted(ranking, key=lambda kv: (-kv[1], kv[0]))


def test_needs_and_need_sets_score_like_their_kind():
    project = new_project()
    slots = PatternSlots(subject="the operator", action="review",
                         object="the samples", constraint="within 2 days")
    create_entity(project, EntityKind.NEED, "NEED-001", "review need",
                  slots=slots, root_flag=True)
    container = create_entity(project, EntityKind.NEED_SET, "NSET-001", "needs")
    container.members = ["NEED-001"]
    run = run_scoring(project)
    by_entity: dict[str, set[str]] = {}
    for status in run.statuses:
        by_entity.setdefault(status.entity_id, set()).add(status.characteristic_id)
    assert by_entity["NEED-001"] == set(INDIVIDUAL_CHARACTERISTICS)
    assert by_entity["NSET-001"] == set(SET_CHARACTERISTICS)


def test_attest_set_rule_feeds_set_scoring():
    project = new_project()
    container = create_entity(project, EntityKind.REQUIREMENT_SET, "SET-001", "s")
    slots = PatternSlots(subject="the rover", action="stop", constraint="within 5 s")
    create_entity(project, EntityKind.REQUIREMENT, "REQ-001", "r",
                  slots=slots, root_flag=True)
    container.members = ["REQ-001"]
    run = run_scoring(project)
    r29 = next(v for v in run.verdicts
               if v.entity_id == "SET-001" and v.rule_id == "R29")
    assert r29.status is VerdictStatus.NEEDS_REVIEW
    attest(project, "SET-001", "R29", "pass", attestor="cm")
    run = run_scoring(project)
    r29 = next(v for v in run.verdicts
               if v.entity_id == "SET-001" and v.rule_id == "R29")
    assert r29.status is VerdictStatus.PASS


def test_run_scoring_replaces_prior_edges():
    project = new_project()
    individual_entity(project)
    run_scoring(project)
    first_edges = [(r.kind, r.source, r.target) for r in project.relationships
                   if r.provenance.startswith("run-")]
    run_scoring(project)
    second_edges = [(r.kind, r.source, r.target) for r in project.relationships
                    if r.provenance.startswith("run-")]
    assert first_edges == second_edges
    assert all(r.provenance == "run-2" for r in project.relationships
               if r.provenance.startswith("run-"))
