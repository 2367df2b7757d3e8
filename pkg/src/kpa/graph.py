"""Weighted argument graph: vertices are arguments, edges carry key points.

An edge exists only where the prediction produced a key point (a "No" answer
yields no key point and therefore no edge). The weight is the share score.
The subgraph weight of a vertex set is the mean weight of its induced edges,
0 by convention when the induced edge set is empty.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import TopicStanceGroup
from .errors import GraphError
from .jsonl import read_json, write_json
from .pairing import PairPrediction

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Edge:
    u: str
    v: str
    weight: float
    key_point: str

    def __post_init__(self):
        if self.u >= self.v:
            raise GraphError(f"edge endpoints must satisfy u < v, got ({self.u!r}, {self.v!r})")
        if not 0.0 <= self.weight <= 1.0:
            raise GraphError(f"edge weight {self.weight} outside [0, 1]")
        if not self.key_point.strip():
            raise GraphError(f"edge ({self.u!r}, {self.v!r}) lacks a key point")


@dataclass
class ArgumentGraph:
    group: tuple[str, str]  # (topic, stance value)
    vertices: list[str]
    edges: list[Edge]
    adjacency: dict[str, list[Edge]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.adjacency:
            self.adjacency = {v: [] for v in self.vertices}
            for e in self.edges:
                self.adjacency[e.u].append(e)
                self.adjacency[e.v].append(e)

    def vertex_set(self) -> frozenset[str]:
        return frozenset(self.vertices)


def build_graph(
    group: TopicStanceGroup,
    predictions: list[PairPrediction],
    min_weight: float | None = None,
) -> ArgumentGraph:
    """Assemble the group's graph from pair predictions.

    Every group argument becomes a vertex regardless of degree. A prediction
    forms an edge iff it carries a key point; ``min_weight``, when given,
    additionally drops edges scoring below it. Duplicate predictions for one
    unordered pair are ambiguous and rejected.
    """
    vertices = group.argument_ids()
    known = set(vertices)
    edges: list[Edge] = []
    seen: set[tuple[str, str]] = set()
    for p in predictions:
        if p.pair.i not in known or p.pair.j not in known:
            raise GraphError(
                f"prediction references arguments outside group {group.key}: "
                f"({p.pair.i!r}, {p.pair.j!r})"
            )
        key = (p.pair.i, p.pair.j)
        if key in seen:
            raise GraphError(f"duplicate prediction for pair ({p.pair.i!r}, {p.pair.j!r})")
        seen.add(key)
        if p.key_point is None:
            continue
        if min_weight is not None and p.share_score < min_weight:
            continue
        edges.append(Edge(u=p.pair.i, v=p.pair.j, weight=p.share_score, key_point=p.key_point))
    edges.sort(key=lambda e: (e.u, e.v))
    return ArgumentGraph(group=group.key, vertices=vertices, edges=edges)


def _check_members(g: ArgumentGraph, members) -> None:
    unknown = set(members) - set(g.adjacency)
    if unknown:
        raise GraphError(f"vertex set references unknown vertices: {sorted(unknown)}")


def induced_edges(g: ArgumentGraph, members) -> list[Edge]:
    """Edges with both endpoints in ``members``, in (u, v) lexicographic order."""
    _check_members(g, members)
    member_set = set(members)
    found = [
        e
        for v in member_set
        for e in g.adjacency[v]
        if e.u == v and e.v in member_set  # count each edge once, from its u side
    ]
    found.sort(key=lambda e: (e.u, e.v))
    return found


def subgraph_weight(g: ArgumentGraph, members) -> float:
    """Mean weight of the induced edges; 0 when the induced edge set is empty."""
    _check_members(g, members)
    member_set = set(members)
    # Summation in sorted vertex order keeps the float result identical
    # across processes (set iteration order is not).
    total = 0.0
    count = 0
    for v in sorted(member_set):
        for e in g.adjacency[v]:
            if e.u == v and e.v in member_set:
                total += e.weight
                count += 1
    return total / count if count else 0.0


def write_graph(path: Path | str, g: ArgumentGraph) -> None:
    write_json(
        path,
        {
            "topic": g.group[0],
            "stance": g.group[1],
            "vertices": list(g.vertices),
            "edges": [
                {"u": e.u, "v": e.v, "weight": e.weight, "key_point": e.key_point}
                for e in g.edges
            ],
        },
    )


def read_graph(path: Path | str) -> ArgumentGraph:
    doc = read_json(path)
    for f in ("topic", "stance", "vertices", "edges"):
        if f not in doc:
            raise GraphError(f"{path}: missing field {f!r}")
    edges = [
        Edge(u=e["u"], v=e["v"], weight=e["weight"], key_point=e["key_point"])
        for e in doc["edges"]
    ]
    return ArgumentGraph(
        group=(doc["topic"], doc["stance"]), vertices=list(doc["vertices"]), edges=edges
    )
