"""Typed relationship graph and bidirectional-traceability analyses.

The graph is an immutable snapshot of the project's relationship store;
every analysis is pure, deterministic, and returns sorted output.  Only
derive and refine edges define the requirements hierarchy; satisfy, verify,
trace, and violate edges never count toward parentage.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import networkx as nx

from .model import HIERARCHY_KINDS, EntityKind, Project, Relationship, RelationshipKind


@dataclass
class TraceGraph:
    nodes: tuple[str, ...]
    edges: list[Relationship]
    kinds: dict[str, EntityKind]
    root_flagged: frozenset[str]
    by_kind: dict[RelationshipKind, list[Relationship]] = field(default_factory=dict)
    by_source: dict[str, list[Relationship]] = field(default_factory=dict)
    by_target: dict[str, list[Relationship]] = field(default_factory=dict)


def build_graph(project: Project) -> TraceGraph:
    """Index the project's relationships; expects a validated project."""
    nodes = tuple(sorted(project.entities)) + tuple(sorted(project.characteristics,
                                                           key=lambda c: int(c[1:])))
    graph = TraceGraph(
        nodes=nodes,
        edges=list(project.relationships),
        kinds={e.id: e.kind for e in project.entities.values()},
        root_flagged=frozenset(e.id for e in project.entities.values() if e.root_flag),
    )
    for rel in graph.edges:
        graph.by_kind.setdefault(rel.kind, []).append(rel)
        graph.by_source.setdefault(rel.source, []).append(rel)
        graph.by_target.setdefault(rel.target, []).append(rel)
    return graph


def _touched(graph: TraceGraph, entity_id: str, kinds: tuple[RelationshipKind, ...]) -> bool:
    for rel in graph.by_source.get(entity_id, ()):
        if rel.kind in kinds:
            return True
    for rel in graph.by_target.get(entity_id, ()):
        if rel.kind in kinds:
            return True
    return False


def _requirement_ids(graph: TraceGraph) -> list[str]:
    return sorted(eid for eid, kind in graph.kinds.items() if kind is EntityKind.REQUIREMENT)


def orphans(graph: TraceGraph) -> list[str]:
    """Requirements with no derive/refine edge in either direction, except
    those flagged as roots."""
    return [
        eid for eid in _requirement_ids(graph)
        if eid not in graph.root_flagged and not _touched(graph, eid, HIERARCHY_KINDS)
    ]


def unverified(graph: TraceGraph) -> list[str]:
    """Requirements with no verify edge in either direction."""
    return [
        eid for eid in _requirement_ids(graph)
        if not _touched(graph, eid, (RelationshipKind.VERIFY,))
    ]


def cycles(graph: TraceGraph) -> list[list[str]]:
    """Simple cycles in the derive/refine subgraph, each reported once as a
    canonical rotation starting at its smallest id."""
    digraph = nx.DiGraph()
    for rel in graph.edges:
        if rel.kind in HIERARCHY_KINDS:
            digraph.add_edge(rel.source, rel.target)
    found = []
    for cycle in nx.simple_cycles(digraph):
        pivot = cycle.index(min(cycle))
        found.append(cycle[pivot:] + cycle[:pivot])
    found.sort(key=lambda c: (len(c), c))
    return found


@dataclass
class CoverageSummary:
    edge_counts: dict[str, int]
    requirements_total: int
    pct_with_parents: float
    pct_verified: float


def coverage_summary(graph: TraceGraph) -> CoverageSummary:
    """Per-kind edge counts plus hierarchy/verification coverage over
    requirements (vacuously 100% when there are none)."""
    edge_counts = {kind.value: 0 for kind in RelationshipKind}
    for rel in graph.edges:
        edge_counts[rel.kind.value] += 1
    requirement_ids = _requirement_ids(graph)
    total = len(requirement_ids)
    if total == 0:
        return CoverageSummary(edge_counts, 0, 100.0, 100.0)
    parented = sum(1 for eid in requirement_ids if _touched(graph, eid, HIERARCHY_KINDS))
    verified = sum(1 for eid in requirement_ids
                   if _touched(graph, eid, (RelationshipKind.VERIFY,)))
    return CoverageSummary(
        edge_counts=edge_counts,
        requirements_total=total,
        pct_with_parents=round(100.0 * parented / total, 2),
        pct_verified=round(100.0 * verified / total, 2),
    )
