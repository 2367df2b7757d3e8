"""End-to-end orchestration: load -> score -> graph -> partition -> select -> evaluate.

Every stage writes its artifact under the output directory, failures are
tagged with the stage they came from, and all randomness is derived from the
single master seed through named sub-streams so each stage can be reproduced
on its own.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path

from . import corpus, graph, metrics, partition, scorer
from .errors import KpaError, PartitionError, StageError
from .metrics import EvalReport
from .pairing import enumerate_pairs
from .text import group_slug

logger = logging.getLogger(__name__)

ARGS_FILE = "arguments.jsonl"
KPS_FILE = "keypoints.jsonl"
LABELS_FILE = "labels.jsonl"


def derive_seed(master: int, stream: str, *parts: str) -> int:
    """Stable per-stream seed so stages are independently reproducible."""
    payload = "\x1f".join([str(master), stream, *parts])
    digest = hashlib.blake2b(payload.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % (2**31)


@dataclass
class PipelineConfig:
    data_dir: Path
    out_dir: Path
    backend: str = "oracle"
    source: str = ""
    embeddings: Path | None = None
    num_subgraphs: int | str = "auto"
    threshold_h: float = 0.008
    max_steps: int = 200
    seed: int = 42
    kmeans_max_iters: int = 100
    sim: str = "token-f1"
    max_in_flight: int = 8
    timeout: float = 30.0
    retries: int = 2
    min_edge_weight: float | None = None
    figures: bool = True


@dataclass
class GroupRun:
    group: corpus.TopicStanceGroup
    graph: graph.ArgumentGraph | None = None
    part: partition.Partition | None = None
    results: list[partition.KeyPointResult] = field(default_factory=list)


def load_stage(data_dir: Path | str) -> corpus.Dataset:
    data_dir = Path(data_dir)
    dataset = corpus.load_dataset(
        data_dir / ARGS_FILE, data_dir / KPS_FILE, data_dir / LABELS_FILE
    )
    report = corpus.validate(dataset)
    for issue in report.issues:
        logger.warning("dataset: %s", issue.message)
    return dataset


def score_stage(
    cfg: PipelineConfig, dataset: corpus.Dataset
) -> dict[tuple[str, str], list]:
    sc = scorer.ScorerConfig(
        backend=scorer.Backend(cfg.backend),
        path_or_endpoint=str(cfg.source),
        timeout=cfg.timeout,
        max_in_flight=cfg.max_in_flight,
        retries=cfg.retries,
    )
    predictions: dict[tuple[str, str], list] = {}
    for g in dataset.groups:
        pairs = enumerate_pairs(g)
        predictions[g.key] = scorer.score_pairs(sc, g, pairs)
    return predictions


def resolve_num_subgraphs(
    cfg_value: int | str, group: corpus.TopicStanceGroup, n_vertices: int
) -> int:
    """"auto" sizes the partition to the group's reference key-point count."""
    if cfg_value == "auto":
        s = len(group.reference_kps)
        if s < 1:
            raise PartitionError(
                f"group {group.key} has no reference key points; "
                "pass an explicit subgraph count"
            )
        if s > n_vertices:
            logger.warning(
                "group %s: reference count %d exceeds %d arguments; clamping",
                group.key,
                s,
                n_vertices,
            )
            s = n_vertices
        return s
    s = int(cfg_value)
    if s > n_vertices:
        raise PartitionError(
            f"num_subgraphs {s} exceeds the {n_vertices} arguments of group {group.key}"
        )
    return s


def embeddings_for_group(
    cfg: PipelineConfig, group: corpus.TopicStanceGroup
) -> partition.EmbeddingTable:
    if cfg.embeddings is None:
        return partition.fallback_embeddings(
            group, seed=derive_seed(cfg.seed, "embedder")
        )
    path = Path(cfg.embeddings)
    if not path.exists():
        raise PartitionError(f"embeddings not found: {path}")
    return partition.load_embeddings(path)


def partition_group(
    cfg: PipelineConfig,
    group: corpus.TopicStanceGroup,
    g: graph.ArgumentGraph,
    emb: partition.EmbeddingTable,
) -> partition.Partition:
    s = resolve_num_subgraphs(cfg.num_subgraphs, group, len(g.vertices))
    init = partition.kmeans_init(
        emb,
        g.vertices,
        s,
        seed=derive_seed(cfg.seed, "kmeans", group.topic, group.stance.value),
        max_iters=cfg.kmeans_max_iters,
    )
    pcfg = partition.PartitionConfig(
        num_subgraphs=s,
        threshold=cfg.threshold_h,
        max_steps=cfg.max_steps,
        seed=derive_seed(cfg.seed, "local-search", group.topic, group.stance.value),
        kmeans_max_iters=cfg.kmeans_max_iters,
    )
    return partition.local_search(g, init, pcfg)


def run_pipeline(cfg: PipelineConfig) -> EvalReport:
    """Run every stage, writing artifacts under cfg.out_dir; returns the report."""
    out_dir = Path(cfg.out_dir)

    try:
        dataset = load_stage(cfg.data_dir)
    except KpaError as e:
        raise StageError("load", e) from e

    try:
        predictions = score_stage(cfg, dataset)
        flat = [p for key in sorted(predictions) for p in predictions[key]]
        scorer.write_predictions(out_dir / "predictions.jsonl", flat)
    except StageError:
        raise
    except KpaError as e:
        raise StageError("score", e) from e

    runs: list[GroupRun] = []
    try:
        for g in dataset.groups:
            ag = graph.build_graph(g, predictions[g.key], min_weight=cfg.min_edge_weight)
            graph.write_graph(
                out_dir / "graphs" / f"{group_slug(g.topic, g.stance.value)}.graph.json", ag
            )
            runs.append(GroupRun(group=g, graph=ag))
    except KpaError as e:
        raise StageError("graph", e) from e

    try:
        for run in runs:
            emb = embeddings_for_group(cfg, run.group)
            run.part = partition_group(cfg, run.group, run.graph, emb)
    except KpaError as e:
        raise StageError("partition", e) from e

    partition_docs: list[dict] = []
    try:
        for run in runs:
            run.results = partition.select_key_points(run.graph, run.part)
            slug = group_slug(run.group.topic, run.group.stance.value)
            path = out_dir / "partitions" / f"{slug}.partition.json"
            partition.write_partition(path, run.graph, run.part, run.results)
            partition_docs.append(partition.read_partition(path))
    except KpaError as e:
        raise StageError("select", e) from e

    try:
        sim = metrics.resolve_similarity(cfg.sim)
        generated = {
            run.group.key: [r.key_point for r in run.results if r.key_point is not None]
            for run in runs
        }
        report = metrics.evaluate(generated, dataset, sim)
        metrics.write_report(out_dir / "report.json", report)
        metrics.write_report_csv(out_dir / "report.csv", report)
        if cfg.figures:
            from . import figures  # defers the matplotlib import

            figures.render_all(report, partition_docs, out_dir / "figures")
    except KpaError as e:
        raise StageError("evaluate", e) from e

    print(format_summary(runs, report))
    return report


def format_summary(runs: list[GroupRun], report: EvalReport) -> str:
    """Plain-text run summary: one row per group plus the macro averages."""
    header = f"{'topic':<32} {'stance':<6} {'args':>5} {'edges':>6} {'subg':>5} {'kps':>4} {'sF1':>7}"
    lines = [header, "-" * len(header)]
    by_key = {(s.topic, s.stance): s for s in report.groups}
    for run in runs:
        key = (run.group.topic, run.group.stance.value)
        score = by_key.get(key)
        n_kps = sum(1 for r in run.results if r.key_point is not None)
        lines.append(
            f"{run.group.topic[:32]:<32} {run.group.stance.value:<6} "
            f"{len(run.graph.vertices):>5} {len(run.graph.edges):>6} "
            f"{len(run.part.subgraphs):>5} {n_kps:>4} "
            f"{(score.sF1 if score else 0.0):>7.4f}"
        )
    macro = " ".join(f"{k}={v:.4f}" for k, v in report.macro.items())
    lines.append("-" * len(header))
    lines.append(f"macro: {macro}")
    return "\n".join(lines)
