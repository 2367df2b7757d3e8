"""Acceptance criteria A1-A9.

Each test is one criterion, checked at its stated tolerance; the terminal
summary (hook in conftest.py) prints one PASS/FAIL line per criterion.
"""

from __future__ import annotations

import itertools
import json
import math
import random
import subprocess
import sys
import time
from functools import lru_cache
from pathlib import Path

import pytest

from kpa.cli import main
from kpa.corpus import Stance
from kpa.graph import ArgumentGraph, Edge, subgraph_weight
from kpa.jsonl import read_json
from kpa.metrics import EXACT, TOKEN_F1, rouge_n, soft_prf, token_f1_sim
from kpa.pairing import (
    ArgumentPair,
    LogitPair,
    PairLabel,
    enumerate_pairs,
    format_input,
    format_output,
    label_pairs,
    parse_output,
    share_score,
)
from kpa.partition import (
    EmbeddingTable,
    Partition,
    PartitionConfig,
    fallback_embeddings,
    kmeans_init,
    local_search,
    move_cost,
    select_key_points,
    write_partition,
)
from kpa.pipeline import PipelineConfig, derive_seed, run_pipeline

from conftest import build_noisy_corpus, build_synthetic_corpus, make_group
from oracles import bf_move_cost, bf_rouge, bf_soft_prf, bf_subgraph_weight, partitions_up_to_k_blocks

import numpy as np


def graph_from(weights: dict[tuple[str, str], float], vertices) -> ArgumentGraph:
    edges = [
        Edge(u=u, v=v, weight=w, key_point=f"kp {u}{v}") for (u, v), w in sorted(weights.items())
    ]
    return ArgumentGraph(group=("t", "pro"), vertices=list(vertices), edges=edges)


def random_graph(rng: random.Random, n: int, edge_prob: float = 0.6):
    verts = [f"v{i:02d}" for i in range(n)]
    weights = {
        (u, v): rng.random()
        for u, v in itertools.combinations(verts, 2)
        if rng.random() < edge_prob
    }
    return graph_from(weights, verts), weights, verts


# ---------------------------------------------------------------- A1


def test_a1_oracle_end_to_end(tmp_path):
    """3 topics x 2 stances, 8 key points per group, 5 arguments each, 20%
    of arguments matched to two key points; oracle scores + fallback
    embeddings must recover the reference set exactly, within 60 s."""
    data = build_synthetic_corpus(
        tmp_path / "data", n_topics=3, kps_per_group=8, args_per_kp=5, double_every=5
    )
    t0 = time.monotonic()
    report = run_pipeline(
        PipelineConfig(
            data_dir=data,
            out_dir=tmp_path / "run",
            backend="oracle",
            num_subgraphs="auto",
            threshold_h=0.008,
            max_steps=200,
            seed=42,
            sim="exact",
        )
    )
    elapsed = time.monotonic() - t0
    assert elapsed < 60.0, f"pipeline took {elapsed:.1f}s"
    assert len(report.groups) == 6
    for score in report.groups:
        assert score.sP == 1.0, (score.topic, score.stance, score.sP)
        assert score.sR == 1.0, (score.topic, score.stance, score.sR)
        assert score.sF1 == 1.0, (score.topic, score.stance, score.sF1)


# ---------------------------------------------------------------- A2


@lru_cache(maxsize=None)
def cached_partitions(n: int) -> list[tuple[frozenset, ...]]:
    verts = [f"v{i:02d}" for i in range(n)]
    return [
        tuple(frozenset(b) for b in blocks)
        for blocks in partitions_up_to_k_blocks(verts, 3)
    ]


def test_a2_move_cost_equals_brute_force():
    """All graphs with <= 8 vertices over 200 seeds, all partitions into <= 3
    blocks, every legal move: |move_cost - brute force| < 1e-9."""
    max_dev = 0.0
    checked = 0
    for seed in range(200):
        rng = random.Random(seed)
        n = rng.randint(2, 8)
        g, weights, verts = random_graph(rng, n)
        for blocks in cached_partitions(n):
            bsets = [set(b) for b in blocks]
            p = Partition(subgraphs=bsets)
            for out_idx, block in enumerate(bsets):
                for v in block:
                    for in_idx in range(len(bsets)):
                        if in_idx == out_idx or v in bsets[in_idx]:
                            continue
                        got = move_cost(g, p, v, out_idx, in_idx)
                        want = bf_move_cost(weights, bsets, v, out_idx, in_idx)
                        dev = abs(got - want)
                        max_dev = max(max_dev, dev)
                        checked += 1
    assert checked > 100_000
    assert max_dev < 1e-9, f"max deviation {max_dev}"


# ---------------------------------------------------------------- A3


def test_a3_positive_move_soundness():
    """50 random runs (n <= 30): every logged move has cost > 0; hard moves
    change total weight by exactly the logged cost (< 1e-9); soft copies
    satisfy the retention inequality recomputed from scratch."""
    soft_seen = hard_seen = 0
    for run in range(50):
        rng = random.Random(1000 + run)
        n = rng.randint(8, 30)
        g, weights, verts = random_graph(rng, n, edge_prob=0.35)
        s = rng.randint(2, 5)
        h = rng.choice([0.008, 0.05, 0.3])
        pts = {v: [rng.random(), rng.random(), rng.random()] for v in verts}
        emb = EmbeddingTable(dim=3, vectors={k: np.asarray(v) for k, v in pts.items()})
        init = kmeans_init(emb, verts, s, seed=run)
        cfg = PartitionConfig(num_subgraphs=s, threshold=h, max_steps=120, seed=run)
        out = local_search(g, init, cfg)

        state = [set(b) for b in init.subgraphs]
        for m in out.moves:
            assert m.cost > 0
            recomputed = bf_move_cost(weights, state, m.vertex, m.from_idx, m.to_idx)
            assert abs(recomputed - m.cost) < 1e-9
            total_before = sum(bf_subgraph_weight(weights, b) for b in state)
            drop = bf_subgraph_weight(weights, state[m.from_idx]) - bf_subgraph_weight(
                weights, state[m.from_idx] - {m.vertex}
            )
            sole = len(state[m.from_idx]) == 1
            state[m.to_idx].add(m.vertex)
            if m.soft:
                soft_seen += 1
                assert drop > h or sole, (drop, h, sole)
            else:
                hard_seen += 1
                assert not sole
                state[m.from_idx].discard(m.vertex)
                total_after = sum(bf_subgraph_weight(weights, b) for b in state)
                assert abs((total_after - total_before) - m.cost) < 1e-9
        assert state == out.subgraphs, "replayed state must match the returned partition"
    assert soft_seen > 0 and hard_seen > 0, (soft_seen, hard_seen)


# ---------------------------------------------------------------- A4


def test_a4_zero_step_identity(tmp_path):
    """--max-steps 0 partition artifacts are byte-identical to serialized
    k-means initialization artifacts."""
    data = build_synthetic_corpus(tmp_path / "data", n_topics=1, kps_per_group=4, args_per_kp=4)
    preds = tmp_path / "predictions.jsonl"
    assert main(["score", "--backend", "oracle", "--data", str(data), "--out", str(preds)]) == 0
    graphs_dir = tmp_path / "graphs"
    assert main(
        ["graph", "--data", str(data), "--predictions", str(preds), "--out", str(graphs_dir)]
    ) == 0

    zero_dir = tmp_path / "zero"
    assert main([
        "partition", "--graphs", str(graphs_dir), "--data", str(data),
        "--num-subgraphs", "auto", "--max-steps", "0", "--seed", "7", "--out", str(zero_dir),
    ]) == 0

    # expected bytes: k-means initialization serialized through the same writer
    from kpa.corpus import load_dataset
    from kpa.graph import read_graph

    dataset = load_dataset(
        data / "arguments.jsonl", data / "keypoints.jsonl", data / "labels.jsonl"
    )
    expected_dir = tmp_path / "expected"
    for f in sorted(graphs_dir.glob("*.graph.json")):
        g = read_graph(f)
        group = dataset.group(g.group[0], Stance(g.group[1]))
        emb = fallback_embeddings(group, seed=derive_seed(7, "embedder"))
        init = kmeans_init(
            emb,
            g.vertices,
            len(group.reference_kps),
            seed=derive_seed(7, "kmeans", g.group[0], g.group[1]),
        )
        name = f.name.replace(".graph.json", ".partition.json")
        write_partition(expected_dir / name, g, init, select_key_points(g, init))

    zero_files = sorted(zero_dir.glob("*.partition.json"))
    expected_files = sorted(expected_dir.glob("*.partition.json"))
    assert [f.name for f in zero_files] == [f.name for f in expected_files]
    for za, ze in zip(zero_files, expected_files):
        assert za.read_bytes() == ze.read_bytes(), za.name


# ---------------------------------------------------------------- A5


def run_pipeline_subprocess(data: Path, out: Path, seed: int) -> None:
    proc = subprocess.run(
        [
            sys.executable, "-m", "kpa.cli", "pipeline",
            "--data", str(data), "--out", str(out),
            "--backend", "file", "--source", str(data / "predictions.jsonl"),
            "--seed", str(seed), "--no-figures",
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr


def test_a5_determinism_across_processes(tmp_path):
    """Same seed in two separate processes: byte-identical partition and
    report artifacts. Different seed: the move log changes."""
    data = build_noisy_corpus(tmp_path / "data")

    out_a, out_b, out_c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    run_pipeline_subprocess(data, out_a, seed=42)
    run_pipeline_subprocess(data, out_b, seed=42)
    run_pipeline_subprocess(data, out_c, seed=43)

    parts_a = sorted((out_a / "partitions").glob("*.partition.json"))
    parts_b = sorted((out_b / "partitions").glob("*.partition.json"))
    assert [p.name for p in parts_a] == [p.name for p in parts_b]
    for pa, pb in zip(parts_a, parts_b):
        assert pa.read_bytes() == pb.read_bytes(), pa.name
    assert (out_a / "report.json").read_bytes() == (out_b / "report.json").read_bytes()

    moves_a = [m for f in parts_a for m in read_json(f)["moves"]]
    moves_c = [
        m
        for f in sorted((out_c / "partitions").glob("*.partition.json"))
        for m in read_json(f)["moves"]
    ]
    assert moves_a and moves_c, "expected non-empty move logs on this corpus"
    assert moves_a != moves_c, "a different seed must change the move log"


# ---------------------------------------------------------------- A6

VOCAB = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta"]


def _random_text(rng: random.Random) -> str:
    return " ".join(rng.choice(VOCAB) for _ in range(rng.randint(1, 6)))


def test_a6_metric_oracles():
    """rouge_n and soft_prf match independent brute-force implementations on
    100 randomized cases each, and the worked examples reproduce exactly."""
    rng = random.Random(2024)
    for _ in range(100):
        cand, ref = _random_text(rng), _random_text(rng)
        for n in (1, 2):
            assert rouge_n(cand, ref, n) == pytest.approx(bf_rouge(cand, ref, n), abs=1e-12)
    for _ in range(100):
        gen = [_random_text(rng) for _ in range(rng.randint(1, 4))]
        ref = [_random_text(rng) for _ in range(rng.randint(1, 4))]
        assert soft_prf(gen, ref, TOKEN_F1) == pytest.approx(
            bf_soft_prf(gen, ref, token_f1_sim), abs=1e-12
        )

    p, r, f = rouge_n("mandatory vaccination saves lives", "vaccination saves many lives", 1)
    assert (p, r, f) == (0.75, 0.75, pytest.approx(0.75))

    assert soft_prf(["k1", "k2"], ["k1", "k3"], EXACT) == pytest.approx((0.5, 0.5, 0.5))

    sp, sr = 0.6, 0.4
    assert 2 * sp * sr / (sp + sr) == pytest.approx(0.48)
    got = soft_prf(
        ["g"],
        ["r1", "r2"],
        type(EXACT)(name="fixed", scorer=lambda rf, c: 0.6 if rf == "r1" else 0.2),
    )
    assert got == (0.6, pytest.approx(0.4), pytest.approx(0.48))


# ---------------------------------------------------------------- A7


def test_a7_share_score_function():
    for x in (-50.0, 0.0, 50.0):
        assert abs(share_score(LogitPair(x, x)) - 0.5) < 1e-12
    assert abs(share_score(LogitPair(2.0, 0.0)) - 0.880797) < 1e-6
    rng = random.Random(7)
    for _ in range(1000):
        a = rng.uniform(-700, 700)
        b = rng.uniform(-700, 700)
        assert math.isfinite(share_score(LogitPair(a, b)))
        total = share_score(LogitPair(a, b)) + share_score(LogitPair(b, a))
        assert abs(total - 1.0) < 1e-12


# ---------------------------------------------------------------- A8


def test_a8_pairing_counts_and_cap():
    for n in range(51):
        g = make_group(args={f"a{i:02d}": f"text {i}" for i in range(n)})
        assert len(enumerate_pairs(g)) == n * (n - 1) // 2

    # adversarial: one argument shares key points with 20 others
    args = {"hub": "hub text"} | {f"p{i:02d}": f"partner {i}" for i in range(20)}
    kps = {f"k{i:02d}": f"key point {i}" for i in range(20)}
    matches = [("hub", f"k{i:02d}") for i in range(20)] + [
        (f"p{i:02d}", f"k{i:02d}") for i in range(20)
    ]
    g = make_group(args=args, kps=kps, matches=matches)
    for seed in range(10):
        labels = label_pairs(enumerate_pairs(g), g, max_intra_per_arg=5, seed=seed)
        per_arg: dict[str, int] = {}
        for l in labels:
            if l.intra_cluster:
                per_arg[l.pair.i] = per_arg.get(l.pair.i, 0) + 1
                per_arg[l.pair.j] = per_arg.get(l.pair.j, 0) + 1
        assert per_arg.get("hub", 0) == 5
        assert all(c <= 5 for c in per_arg.values())


# ---------------------------------------------------------------- A9


def test_a9_template_round_trip():
    rng = random.Random(9)
    pair = ArgumentPair(group=("t", "pro"), i="a", j="b")
    for _ in range(1000):
        intra = rng.random() < 0.5
        kp = None
        if intra:
            kp = " ".join(rng.choice(VOCAB) for _ in range(rng.randint(1, 8)))
        label = PairLabel(pair=pair, intra_cluster=intra, shared_kp_text=kp)
        is_yes, recovered = parse_output(format_output(label))
        assert is_yes == intra
        assert recovered == kp

    # reference exemplars, verbatim
    rendered = format_input(
        "We should adopt atheism.",
        Stance.PRO,
        "if we adopt atheism then maybe people will start believing in the scientific community again.",
        Stance.PRO,
        "we should adopt atheism because science can explain how we got here without needing a god to explain it.",
    )
    assert rendered == (
        "We should adopt atheism. | positive. if we adopt atheism then maybe people "
        "will start believing in the scientific community again. | positive. we should "
        "adopt atheism because science can explain how we got here without needing a "
        "god to explain it."
    )
    yes = PairLabel(
        pair=pair, intra_cluster=True, shared_kp_text="Science can adequately explain the Universe"
    )
    assert format_output(yes) == "Yes. Science can adequately explain the Universe"
    assert parse_output("Yes. Science can adequately explain the Universe") == (
        True,
        "Science can adequately explain the Universe",
    )
    assert format_output(PairLabel(pair=pair, intra_cluster=False)) == "No."
    assert parse_output("No.") == (False, None)
