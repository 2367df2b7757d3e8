"""Soft graph partitioning: k-means initialization plus local-search refinement.

The search repeatedly picks a random (subgraph, member) occurrence, finds the
target subgraph whose gain

    cost = wt(out \\ {v}) - wt(out) + wt(in + {v}) - wt(in)

is largest, and applies the move only when that gain is positive. If removing
the vertex would drop the source subgraph's weight by more than the threshold
``h``, the vertex is retained there as well, so subgraphs may overlap (soft
partition). Each subgraph then contributes one representative key point: the
key point on its heaviest induced edge.
"""

from __future__ import annotations

import hashlib
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import TopicStanceGroup
from .errors import PartitionError
from .graph import ArgumentGraph, Edge, induced_edges, subgraph_weight
from .jsonl import read_json, read_jsonl, write_json
from .text import tokenize

logger = logging.getLogger(__name__)

FALLBACK_DIM = 256


@dataclass
class EmbeddingTable:
    dim: int
    vectors: dict[str, np.ndarray]

    def matrix(self, ids: list[str]) -> np.ndarray:
        missing = [i for i in ids if i not in self.vectors]
        if missing:
            raise PartitionError(f"embeddings missing for arguments: {missing[:10]}")
        try:
            out = np.stack([self.vectors[i] for i in ids])
        except ValueError as e:
            raise PartitionError(f"inconsistent embedding dimensions: {e}") from e
        if out.shape[1] != self.dim:
            raise PartitionError(f"embedding dimension mismatch: {out.shape[1]} != {self.dim}")
        return out


def load_embeddings(path: Path | str) -> EmbeddingTable:
    """Read embeddings.jsonl ({"arg_id", "vector"}) into a table."""
    vectors: dict[str, np.ndarray] = {}
    dim: int | None = None
    for lineno, record in read_jsonl(path):
        where = f"{path}:{lineno}"
        if "arg_id" not in record or "vector" not in record:
            raise PartitionError(f"{where}: expected fields arg_id and vector")
        vec = np.asarray(record["vector"], dtype=np.float64)
        if vec.ndim != 1 or vec.size == 0:
            raise PartitionError(f"{where}: vector must be a non-empty flat list")
        if not np.all(np.isfinite(vec)):
            raise PartitionError(f"{where}: vector contains non-finite values")
        if dim is None:
            dim = int(vec.size)
        elif vec.size != dim:
            raise PartitionError(f"{where}: vector length {vec.size} != {dim}")
        arg_id = str(record["arg_id"])
        if arg_id in vectors:
            raise PartitionError(f"{where}: duplicate embedding for {arg_id!r}")
        vectors[arg_id] = vec
    if dim is None:
        raise PartitionError(f"{path}: no embedding records")
    return EmbeddingTable(dim=dim, vectors=vectors)


def _hash_token(token: str, seed: int) -> int:
    digest = hashlib.blake2b(
        token.encode("utf-8"), digest_size=8, key=str(seed).encode("utf-8")
    ).digest()
    return int.from_bytes(digest, "big")


def fallback_embeddings(
    group: TopicStanceGroup, dim: int = FALLBACK_DIM, seed: int = 42
) -> EmbeddingTable:
    """Seeded feature-hashed bag-of-words embedder for runs without real vectors.

    Each token hashes (keyed by the seed) to a coordinate and a sign; vectors
    are L2-normalized. Deterministic across processes.
    """
    vectors: dict[str, np.ndarray] = {}
    for arg in group.arguments:
        vec = np.zeros(dim, dtype=np.float64)
        for token in tokenize(arg.text):
            h = _hash_token(token, seed)
            sign = 1.0 if (h >> 63) & 1 == 0 else -1.0
            vec[h % dim] += sign
        norm = float(np.linalg.norm(vec))
        if norm > 0:
            vec /= norm
        vectors[arg.arg_id] = vec
    return EmbeddingTable(dim=dim, vectors=vectors)


@dataclass
class PartitionConfig:
    num_subgraphs: int
    threshold: float = 0.008
    max_steps: int = 200
    seed: int = 42
    kmeans_max_iters: int = 100

    def __post_init__(self):
        if self.num_subgraphs < 1:
            raise PartitionError("num_subgraphs must be >= 1")
        if self.threshold < 0:
            raise PartitionError("threshold must be >= 0")
        if self.max_steps < 0:
            raise PartitionError("max_steps must be >= 0")
        if self.kmeans_max_iters < 1:
            raise PartitionError("kmeans_max_iters must be >= 1")


@dataclass(frozen=True)
class MoveRecord:
    step: int
    vertex: str
    from_idx: int
    to_idx: int
    cost: float
    soft: bool


@dataclass
class Partition:
    subgraphs: list[set[str]]
    moves: list[MoveRecord] = field(default_factory=list)

    def clone(self) -> "Partition":
        return Partition(subgraphs=[set(s) for s in self.subgraphs], moves=list(self.moves))

    def covered_vertices(self) -> set[str]:
        out: set[str] = set()
        for s in self.subgraphs:
            out |= s
        return out


def kmeans_init(
    emb: EmbeddingTable,
    vertices: list[str],
    num_subgraphs: int,
    seed: int,
    max_iters: int = 100,
) -> Partition:
    """Lloyd's k-means over argument embeddings as the initial hard partition.

    Initial centroids are ``num_subgraphs`` distinct vertices drawn by seeded
    uniform sampling without replacement. Assignment ties go to the lowest
    centroid index; an emptied cluster is repaired by stealing the point
    farthest from its current centroid (from clusters that can spare one).
    Stops when assignments no longer change, or after ``max_iters`` rounds.
    """
    n = len(vertices)
    if num_subgraphs > n:
        raise PartitionError(f"num_subgraphs {num_subgraphs} exceeds vertex count {n}")
    X = emb.matrix(vertices)  # raises on missing coverage or dimension mismatch

    rng = random.Random(seed)
    centroid_idx = rng.sample(range(n), num_subgraphs)
    centroids = X[centroid_idx].copy()

    assign = np.full(n, -1, dtype=np.int64)
    for _ in range(max_iters):
        dists = np.stack([np.sum((X - c) ** 2, axis=1) for c in centroids], axis=1)
        new_assign = np.argmin(dists, axis=1)  # argmin takes the lowest index on ties

        # Repair empty clusters: move in the point farthest from its centroid,
        # drawn only from clusters that keep at least one member.
        counts = np.bincount(new_assign, minlength=num_subgraphs)
        for k in range(num_subgraphs):
            if counts[k] > 0:
                continue
            best_point = -1
            best_dist = -1.0
            for i in range(n):
                if counts[new_assign[i]] < 2:
                    continue
                d = float(dists[i, new_assign[i]])
                if d > best_dist:
                    best_dist = d
                    best_point = i
            if best_point < 0:
                raise PartitionError("cannot repair empty cluster: no donatable points")
            counts[new_assign[best_point]] -= 1
            counts[k] += 1
            new_assign[best_point] = k

        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for k in range(num_subgraphs):
            members = X[assign == k]
            centroids[k] = members.mean(axis=0)

    subgraphs = [set() for _ in range(num_subgraphs)]
    for i, v in enumerate(vertices):
        subgraphs[int(assign[i])].add(v)
    return Partition(subgraphs=subgraphs)


def move_cost(g: ArgumentGraph, p: Partition, vertex: str, out_idx: int, in_idx: int) -> float:
    """Gain in total subgraph weight from relocating ``vertex`` out -> in."""
    _check_move(p, vertex, out_idx, in_idx)
    out_set = p.subgraphs[out_idx]
    in_set = p.subgraphs[in_idx]
    return (
        subgraph_weight(g, out_set - {vertex})
        - subgraph_weight(g, out_set)
        + subgraph_weight(g, in_set | {vertex})
        - subgraph_weight(g, in_set)
    )


def _check_move(p: Partition, vertex: str, out_idx: int, in_idx: int) -> None:
    if not (0 <= out_idx < len(p.subgraphs)) or not (0 <= in_idx < len(p.subgraphs)):
        raise PartitionError(f"subgraph index out of range: {out_idx}, {in_idx}")
    if in_idx == out_idx:
        raise PartitionError("source and target subgraphs must differ")
    if vertex not in p.subgraphs[out_idx]:
        raise PartitionError(f"vertex {vertex!r} not in source subgraph {out_idx}")
    if vertex in p.subgraphs[in_idx]:
        raise PartitionError(f"vertex {vertex!r} already in target subgraph {in_idx}")


def best_target(
    g: ArgumentGraph, p: Partition, vertex: str, out_idx: int
) -> tuple[int, float]:
    """Highest-gain target subgraph for the vertex; ties go to the lowest index."""
    best_idx = -1
    best_cost = 0.0
    for in_idx in range(len(p.subgraphs)):
        if in_idx == out_idx or vertex in p.subgraphs[in_idx]:
            continue
        cost = move_cost(g, p, vertex, out_idx, in_idx)
        if best_idx < 0 or cost > best_cost:
            best_idx = in_idx
            best_cost = cost
    if best_idx < 0:
        raise PartitionError(f"no eligible target subgraph for vertex {vertex!r}")
    return best_idx, best_cost


def _occurrences(p: Partition) -> list[tuple[int, str]]:
    return [(gi, v) for gi, members in enumerate(p.subgraphs) for v in sorted(members)]


def _sweep_finds_positive(g: ArgumentGraph, p: Partition) -> bool:
    """Deterministic full pass over all occurrences; True iff any move gains."""
    for gi, v in _occurrences(p):
        try:
            _, cost = best_target(g, p, v, gi)
        except PartitionError:
            continue
        if cost > 0:
            return True
    return False


def local_search(g: ArgumentGraph, init: Partition, cfg: PartitionConfig) -> Partition:
    """Refine an initial partition by up to ``cfg.max_steps`` relocation attempts.

    One step selects a (subgraph, member) occurrence uniformly at random,
    evaluates the best target, and applies the move only when its gain is
    positive. The moved vertex stays in the source as well (a soft copy)
    when removal would drop the source weight by more than ``cfg.threshold``
    or when it is the source's sole member. After ``|vertices|`` consecutive
    non-improving steps a deterministic sweep checks whether any positive
    move remains; if none does, the search stops early. Every applied move
    is logged. Deterministic given the seed.
    """
    uncovered = set(g.vertices) - init.covered_vertices()
    if uncovered:
        raise PartitionError(f"initial partition does not cover vertices: {sorted(uncovered)[:10]}")

    part = init.clone()
    part.moves = []
    if cfg.max_steps == 0:
        return part

    rng = random.Random(cfg.seed)
    stale_limit = max(1, len(g.vertices))
    non_improving = 0
    for step in range(1, cfg.max_steps + 1):
        occs = _occurrences(part)
        out_idx, vertex = occs[rng.randrange(len(occs))]
        try:
            in_idx, cost = best_target(g, part, vertex, out_idx)
        except PartitionError:
            in_idx, cost = -1, 0.0

        if cost > 0:
            out_set = part.subgraphs[out_idx]
            part.subgraphs[in_idx].add(vertex)
            if len(out_set) == 1:
                soft = True  # sole member: never emptied
            else:
                drop = subgraph_weight(g, out_set) - subgraph_weight(g, out_set - {vertex})
                soft = drop > cfg.threshold
            if not soft:
                out_set.discard(vertex)
            part.moves.append(
                MoveRecord(
                    step=step,
                    vertex=vertex,
                    from_idx=out_idx,
                    to_idx=in_idx,
                    cost=cost,
                    soft=soft,
                )
            )
            non_improving = 0
        else:
            non_improving += 1
            if non_improving >= stale_limit:
                if not _sweep_finds_positive(g, part):
                    break
                non_improving = 0
    return part


@dataclass
class KeyPointResult:
    index: int
    key_point: str | None
    edge: Edge | None
    members: frozenset[str]
    prevalence: float


def select_key_points(g: ArgumentGraph, p: Partition) -> list[KeyPointResult]:
    """One representative key point per subgraph: its heaviest induced edge.

    Weight ties prefer the lexicographically smallest key-point text, then
    the smallest (u, v). Edgeless subgraphs yield no key point and a
    diagnostic. Prevalence is the member share of the group's arguments.
    """
    total = len(g.vertices)
    results: list[KeyPointResult] = []
    for idx, members in enumerate(p.subgraphs):
        edges = induced_edges(g, members)
        if edges:
            best = min(edges, key=lambda e: (-e.weight, e.key_point, e.u, e.v))
            kp, edge = best.key_point, best
        else:
            logger.warning(
                "subgraph %d of group %s has no induced edge; no key point selected",
                idx,
                g.group,
            )
            kp, edge = None, None
        results.append(
            KeyPointResult(
                index=idx,
                key_point=kp,
                edge=edge,
                members=frozenset(members),
                prevalence=len(members) / total if total else 0.0,
            )
        )
    return results


def prevalence_report(
    results: list[KeyPointResult], group: TopicStanceGroup
) -> list[tuple[str | None, float]]:
    """(key point, member fraction) per subgraph; fractions may sum past 1."""
    total = len(group.arguments)
    return [
        (r.key_point, len(r.members) / total if total else 0.0)
        for r in results
    ]


def write_partition(
    path: Path | str, g: ArgumentGraph, p: Partition, results: list[KeyPointResult]
) -> None:
    doc = {
        "topic": g.group[0],
        "stance": g.group[1],
        "subgraphs": [
            {
                "members": sorted(r.members),
                "key_point": r.key_point,
                "edge": (
                    {"u": r.edge.u, "v": r.edge.v, "weight": r.edge.weight}
                    if r.edge is not None
                    else None
                ),
                "prevalence": r.prevalence,
            }
            for r in results
        ],
        "moves": [
            {
                "step": m.step,
                "vertex": m.vertex,
                "from": m.from_idx,
                "to": m.to_idx,
                "cost": m.cost,
                "soft": m.soft,
            }
            for m in p.moves
        ],
    }
    write_json(path, doc)


def read_partition(path: Path | str) -> dict:
    doc = read_json(path)
    for f in ("topic", "stance", "subgraphs", "moves"):
        if f not in doc:
            raise PartitionError(f"{path}: missing field {f!r}")
    return doc
