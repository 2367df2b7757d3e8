"""Command-line interface: one subcommand per pipeline stage plus `pipeline`.

Flag values win over the JSON config file (``--config``), which wins over
built-in defaults. The environment variable ``KPA_SEED``, when set, overrides
the seed from any source.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import corpus, graph, metrics, partition, pipeline, scorer
from .errors import KpaError, PartitionError, StageError
from .jsonl import write_jsonl
from .pairing import build_training_records, enumerate_pairs, label_pairs
from .pipeline import PipelineConfig, derive_seed
from .text import group_slug

logger = logging.getLogger(__name__)

DEFAULTS = {
    "backend": "oracle",
    "source": "",
    "embeddings": None,
    "num_subgraphs": "auto",
    "threshold_h": 0.008,
    "max_steps": 200,
    "seed": 42,
    "kmeans_max_iters": 100,
    "sim": "token-f1",
    "max_in_flight": 8,
    "timeout": 30.0,
    "retries": 2,
    "max_intra": 5,
    "min_edge_weight": None,
    "figures": True,
}


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise KpaError(f"config file not found: {p}")
    with p.open("r", encoding="utf-8") as f:
        doc = json.load(f)
    if not isinstance(doc, dict):
        raise KpaError(f"config file must hold a JSON object: {p}")
    return doc


class Settings:
    """Flag > config > default resolution for one invocation."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config = _load_config(getattr(args, "config", None))

    def get(self, name: str, default=None):
        value = getattr(self.args, name, None)
        if value is None:
            value = self.config.get(name, DEFAULTS.get(name, default))
        return value

    def seed(self) -> int:
        env = os.environ.get("KPA_SEED")
        if env is not None:
            try:
                return int(env)
            except ValueError:
                raise KpaError(f"KPA_SEED must be an integer, got {env!r}") from None
        return int(self.get("seed"))

    def num_subgraphs(self):
        raw = self.get("num_subgraphs")
        if raw == "auto":
            return "auto"
        try:
            value = int(raw)
        except (TypeError, ValueError):
            raise KpaError(f"--num-subgraphs must be 'auto' or an integer, got {raw!r}") from None
        if value < 1:
            raise KpaError("--num-subgraphs must be >= 1")
        return value

    def require(self, name: str, flag: str):
        value = self.get(name)
        if value is None:
            raise KpaError(f"missing required option {flag} (or config key {name!r})")
        return value


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON config file; flags override its values")
    sub.add_argument("--log-level", default=None, help="logging level (default WARNING)")
    sub.add_argument("--seed", type=int, default=None, help="master random seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kpa",
        description="Key point analysis: pair scoring, argument-graph partitioning, evaluation.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("pairs", help="export labelled training pairs")
    _add_common(p)
    p.add_argument("--data", dest="data_dir", help="directory with the corpus JSONL files")
    p.add_argument("--out", dest="out_path", help="output pairs.jsonl path")
    p.add_argument("--max-intra", dest="max_intra", type=int, default=None)
    p.set_defaults(func=cmd_pairs)

    p = subs.add_parser("score", help="produce pair predictions with a backend")
    _add_common(p)
    p.add_argument("--backend", choices=["file", "http", "oracle"], default=None)
    p.add_argument("--source", default=None, help="predictions file or service URL")
    p.add_argument("--data", dest="data_dir")
    p.add_argument("--out", dest="out_path", help="output predictions.jsonl path")
    p.add_argument("--max-in-flight", dest="max_in_flight", type=int, default=None)
    p.add_argument("--timeout", type=float, default=None)
    p.add_argument("--retries", type=int, default=None)
    p.set_defaults(func=cmd_score)

    p = subs.add_parser("graph", help="build one argument graph per group")
    _add_common(p)
    p.add_argument("--data", dest="data_dir")
    p.add_argument("--predictions", dest="predictions_path")
    p.add_argument("--out", dest="out_dir", help="directory for per-group graph files")
    p.add_argument("--min-edge-weight", dest="min_edge_weight", type=float, default=None)
    p.set_defaults(func=cmd_graph)

    p = subs.add_parser("partition", help="partition graphs and select key points")
    _add_common(p)
    p.add_argument("--graphs", dest="graphs_dir", help="directory of *.graph.json files")
    p.add_argument("--embeddings", dest="embeddings", help="embeddings.jsonl (omit for fallback)")
    p.add_argument("--data", dest="data_dir", help="corpus dir (needed for auto sizing/fallback)")
    p.add_argument("--num-subgraphs", dest="num_subgraphs", default=None, help="'auto' or an integer")
    p.add_argument("--threshold-h", dest="threshold_h", type=float, default=None)
    p.add_argument("--max-steps", dest="max_steps", type=int, default=None)
    p.add_argument("--kmeans-max-iters", dest="kmeans_max_iters", type=int, default=None)
    p.add_argument("--out", dest="out_dir", help="directory for per-group partition files")
    p.set_defaults(func=cmd_partition)

    p = subs.add_parser("eval", help="score generated key points against the references")
    _add_common(p)
    p.add_argument("--generated", dest="generated_dir", help="directory of *.partition.json files")
    p.add_argument("--data", dest="data_dir")
    p.add_argument("--sim", default=None, help="token-f1 | exact | http:<url>")
    p.add_argument("--out", dest="out_path", help="output report.json path")
    p.add_argument("--figures", dest="figures", action=argparse.BooleanOptionalAction, default=None)
    p.set_defaults(func=cmd_eval)

    p = subs.add_parser("pipeline", help="run every stage end to end")
    _add_common(p)
    p.add_argument("--data", dest="data_dir")
    p.add_argument("--out", dest="out_dir", help="output directory for all artifacts")
    p.add_argument("--backend", choices=["file", "http", "oracle"], default=None)
    p.add_argument("--source", default=None)
    p.add_argument("--embeddings", dest="embeddings", default=None)
    p.add_argument("--num-subgraphs", dest="num_subgraphs", default=None)
    p.add_argument("--threshold-h", dest="threshold_h", type=float, default=None)
    p.add_argument("--max-steps", dest="max_steps", type=int, default=None)
    p.add_argument("--kmeans-max-iters", dest="kmeans_max_iters", type=int, default=None)
    p.add_argument("--sim", default=None)
    p.add_argument("--max-in-flight", dest="max_in_flight", type=int, default=None)
    p.add_argument("--timeout", type=float, default=None)
    p.add_argument("--retries", type=int, default=None)
    p.add_argument("--min-edge-weight", dest="min_edge_weight", type=float, default=None)
    p.add_argument("--figures", dest="figures", action=argparse.BooleanOptionalAction, default=None)
    p.set_defaults(func=cmd_pipeline)

    return parser


def cmd_pairs(settings: Settings) -> int:
    data_dir = Path(settings.require("data_dir", "--data"))
    out_path = Path(settings.require("out_path", "--out"))
    max_intra = int(settings.get("max_intra"))
    seed = settings.seed()

    dataset = pipeline.load_stage(data_dir)
    records = []
    for g in dataset.groups:
        if not g.labels:
            logger.warning("group %s has no labels; skipped for pair export", g.key)
            continue
        pairs = enumerate_pairs(g)
        labels = label_pairs(
            pairs,
            g,
            max_intra_per_arg=max_intra,
            seed=derive_seed(seed, "pair-sampling", g.topic, g.stance.value),
        )
        records.extend(build_training_records(g, labels))
    write_jsonl(
        out_path,
        [{"pair_id": r.pair_id, "input": r.input, "output": r.output} for r in records],
    )
    print(f"wrote {len(records)} training pairs to {out_path}")
    return 0


def cmd_score(settings: Settings) -> int:
    data_dir = Path(settings.require("data_dir", "--data"))
    out_path = Path(settings.require("out_path", "--out"))
    cfg = scorer.ScorerConfig(
        backend=scorer.Backend(settings.get("backend")),
        path_or_endpoint=str(settings.get("source") or ""),
        timeout=float(settings.get("timeout")),
        max_in_flight=int(settings.get("max_in_flight")),
        retries=int(settings.get("retries")),
    )
    dataset = pipeline.load_stage(data_dir)
    flat = []
    for g in dataset.groups:
        flat.extend(scorer.score_pairs(cfg, g, enumerate_pairs(g)))
    scorer.write_predictions(out_path, flat)
    print(f"wrote {len(flat)} predictions to {out_path}")
    return 0


def cmd_graph(settings: Settings) -> int:
    data_dir = Path(settings.require("data_dir", "--data"))
    predictions_path = Path(settings.require("predictions_path", "--predictions"))
    out_dir = Path(settings.require("out_dir", "--out"))
    min_weight = settings.get("min_edge_weight")

    dataset = pipeline.load_stage(data_dir)
    count = 0
    for g in dataset.groups:
        preds = scorer.score_from_file(predictions_path, enumerate_pairs(g))
        ag = graph.build_graph(g, preds, min_weight=min_weight)
        graph.write_graph(out_dir / f"{group_slug(g.topic, g.stance.value)}.graph.json", ag)
        count += 1
    print(f"wrote {count} graph file(s) to {out_dir}")
    return 0


def _load_graph_dir(graphs_dir: Path) -> list[graph.ArgumentGraph]:
    files = sorted(graphs_dir.glob("*.graph.json"))
    if not files:
        raise KpaError(f"no *.graph.json files in {graphs_dir}")
    return [graph.read_graph(f) for f in files]


def cmd_partition(settings: Settings) -> int:
    graphs_dir = Path(settings.require("graphs_dir", "--graphs"))
    out_dir = Path(settings.require("out_dir", "--out"))
    num_subgraphs = settings.num_subgraphs()
    threshold_h = float(settings.get("threshold_h"))
    max_steps = int(settings.get("max_steps"))
    kmeans_max_iters = int(settings.get("kmeans_max_iters"))
    seed = settings.seed()
    embeddings_path = settings.get("embeddings")
    data_dir = settings.get("data_dir")

    dataset = pipeline.load_stage(Path(data_dir)) if data_dir else None
    if num_subgraphs == "auto" and dataset is None:
        raise KpaError("--num-subgraphs auto requires --data to read reference counts")
    if embeddings_path is None and dataset is None:
        raise KpaError("either --embeddings or --data (for the fallback embedder) is required")

    table = None
    if embeddings_path is not None:
        p = Path(embeddings_path)
        if not p.exists():
            raise PartitionError(f"embeddings not found: {p}")
        table = partition.load_embeddings(p)

    count = 0
    for ag in _load_graph_dir(graphs_dir):
        topic, stance_value = ag.group
        group = None
        if dataset is not None:
            group = dataset.group(topic, corpus.Stance(stance_value))
        if group is not None:
            s = pipeline.resolve_num_subgraphs(num_subgraphs, group, len(ag.vertices))
        else:
            s = int(num_subgraphs)
            if s > len(ag.vertices):
                raise PartitionError(
                    f"num_subgraphs {s} exceeds the {len(ag.vertices)} vertices of {ag.group}"
                )
        emb = (
            table
            if table is not None
            else partition.fallback_embeddings(group, seed=derive_seed(seed, "embedder"))
        )
        init = partition.kmeans_init(
            emb,
            ag.vertices,
            s,
            seed=derive_seed(seed, "kmeans", topic, stance_value),
            max_iters=kmeans_max_iters,
        )
        pcfg = partition.PartitionConfig(
            num_subgraphs=s,
            threshold=threshold_h,
            max_steps=max_steps,
            seed=derive_seed(seed, "local-search", topic, stance_value),
            kmeans_max_iters=kmeans_max_iters,
        )
        part = partition.local_search(ag, init, pcfg)
        results = partition.select_key_points(ag, part)
        partition.write_partition(
            out_dir / f"{group_slug(topic, stance_value)}.partition.json", ag, part, results
        )
        count += 1
    print(f"wrote {count} partition file(s) to {out_dir}")
    return 0


def cmd_eval(settings: Settings) -> int:
    generated_dir = Path(settings.require("generated_dir", "--generated"))
    data_dir = Path(settings.require("data_dir", "--data"))
    out_path = Path(settings.require("out_path", "--out"))
    sim = metrics.resolve_similarity(str(settings.get("sim")))
    render = settings.get("figures")

    dataset = pipeline.load_stage(data_dir)
    files = sorted(generated_dir.glob("*.partition.json"))
    if not files:
        raise KpaError(f"no *.partition.json files in {generated_dir}")
    docs = [partition.read_partition(f) for f in files]
    generated = {
        (doc["topic"], doc["stance"]): [
            sg["key_point"] for sg in doc["subgraphs"] if sg["key_point"] is not None
        ]
        for doc in docs
    }
    report = metrics.evaluate(generated, dataset, sim)
    metrics.write_report(out_path, report)
    metrics.write_report_csv(out_path.with_suffix(".csv"), report)
    if render:
        from . import figures as figures_mod

        figures_mod.render_all(report, docs, out_path.parent / "figures")
    macro = " ".join(f"{k}={v:.4f}" for k, v in report.macro.items())
    print(f"evaluated {len(report.groups)} group(s); macro: {macro}")
    return 0


def cmd_pipeline(settings: Settings) -> int:
    cfg = PipelineConfig(
        data_dir=Path(settings.require("data_dir", "--data")),
        out_dir=Path(settings.require("out_dir", "--out")),
        backend=str(settings.get("backend")),
        source=str(settings.get("source") or ""),
        embeddings=(Path(settings.get("embeddings")) if settings.get("embeddings") else None),
        num_subgraphs=settings.num_subgraphs(),
        threshold_h=float(settings.get("threshold_h")),
        max_steps=int(settings.get("max_steps")),
        seed=settings.seed(),
        kmeans_max_iters=int(settings.get("kmeans_max_iters")),
        sim=str(settings.get("sim")),
        max_in_flight=int(settings.get("max_in_flight")),
        timeout=float(settings.get("timeout")),
        retries=int(settings.get("retries")),
        min_edge_weight=settings.get("min_edge_weight"),
        figures=bool(settings.get("figures")),
    )
    pipeline.run_pipeline(cfg)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = args.log_level or os.environ.get("KPA_LOG_LEVEL") or "WARNING"
    logging.basicConfig(level=getattr(logging, str(level).upper(), logging.WARNING))
    try:
        settings = Settings(args)
        return args.func(settings)
    except StageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except KpaError as e:
        print(f"error: {args.command}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
