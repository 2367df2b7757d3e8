"""Key point analysis: pairwise share scores, argument-graph partitioning, evaluation."""

from .corpus import Argument, Dataset, KeyPoint, MatchLabel, Stance, TopicStanceGroup, load_dataset, save_dataset, validate
from .errors import KpaError
from .graph import ArgumentGraph, Edge, build_graph, induced_edges, subgraph_weight
from .metrics import EvalReport, SimilarityFn, evaluate, rouge_n, soft_prf, token_f1_sim
from .pairing import (
    ArgumentPair,
    LogitPair,
    PairLabel,
    PairPrediction,
    enumerate_pairs,
    format_input,
    format_output,
    label_pairs,
    parse_output,
    share_score,
)
from .partition import (
    EmbeddingTable,
    KeyPointResult,
    Partition,
    PartitionConfig,
    best_target,
    fallback_embeddings,
    kmeans_init,
    local_search,
    move_cost,
    prevalence_report,
    select_key_points,
)
from .pipeline import PipelineConfig, run_pipeline
from .scorer import Backend, ScorerConfig, oracle_score, score_from_file, score_from_http

__version__ = "0.1.0"

__all__ = [
    "Argument",
    "ArgumentGraph",
    "ArgumentPair",
    "Backend",
    "Dataset",
    "Edge",
    "EmbeddingTable",
    "EvalReport",
    "KeyPoint",
    "KeyPointResult",
    "KpaError",
    "LogitPair",
    "MatchLabel",
    "PairLabel",
    "PairPrediction",
    "Partition",
    "PartitionConfig",
    "PipelineConfig",
    "ScorerConfig",
    "SimilarityFn",
    "Stance",
    "TopicStanceGroup",
    "best_target",
    "build_graph",
    "enumerate_pairs",
    "evaluate",
    "fallback_embeddings",
    "format_input",
    "format_output",
    "induced_edges",
    "kmeans_init",
    "label_pairs",
    "load_dataset",
    "local_search",
    "move_cost",
    "oracle_score",
    "parse_output",
    "prevalence_report",
    "rouge_n",
    "run_pipeline",
    "save_dataset",
    "score_from_file",
    "score_from_http",
    "select_key_points",
    "share_score",
    "soft_prf",
    "subgraph_weight",
    "token_f1_sim",
    "validate",
]
