"""Evaluation: Rouge-1/2 on concatenations and soft precision/recall/F1.

Rouge compares the concatenation of generated key points against the
concatenation of reference key points (n-gram multiset overlap). The soft
metrics score each generated key point by its best similarity to any
reference (sP), each reference by its best similarity to any generated key
point (sR), and combine them harmonically (sF1). The similarity function is
pluggable; the built-in default is a unigram-F1 stand-in that needs no model.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .corpus import Dataset
from .errors import EvalError
from .jsonl import write_json
from .text import ngrams, tokenize


@dataclass(frozen=True)
class SimilarityFn:
    """Named scorer mapping (reference, candidate) to [0, 1]; need not be symmetric."""

    name: str
    scorer: Callable[[str, str], float]

    def __call__(self, reference: str, candidate: str) -> float:
        return self.scorer(reference, candidate)


def rouge_n(candidate: str, reference: str, n: int) -> tuple[float, float, float]:
    """N-gram multiset precision/recall/F1 between two texts (n in {1, 2})."""
    if n not in (1, 2):
        raise EvalError(f"rouge_n supports n in {{1, 2}}, got {n}")
    cand = Counter(ngrams(tokenize(candidate), n))
    ref = Counter(ngrams(tokenize(reference), n))
    overlap = sum((cand & ref).values())
    precision = overlap / sum(cand.values()) if cand else 0.0
    recall = overlap / sum(ref.values()) if ref else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


def soft_prf(
    generated: list[str], reference: list[str], sim: SimilarityFn
) -> tuple[float, float, float]:
    """Set-level soft precision/recall/F1 under the given similarity.

    sP averages, over generated key points, the best similarity to any
    reference; sR averages, over references, the best similarity to any
    generated key point; sF1 is their harmonic mean (0 when both are 0).
    """
    if not generated or not reference:
        raise EvalError("soft_prf requires non-empty generated and reference lists")
    sp = sum(max(sim(ref, gen) for ref in reference) for gen in generated) / len(generated)
    sr = sum(max(sim(ref, gen) for gen in generated) for ref in reference) / len(reference)
    sf1 = 2 * sp * sr / (sp + sr) if sp + sr > 0 else 0.0
    return sp, sr, sf1


def token_f1_sim(a: str, b: str) -> float:
    """Unigram F1 between two texts; 1.0 when both are empty, 0.0 when one is."""
    ta, tb = Counter(tokenize(a)), Counter(tokenize(b))
    if not ta and not tb:
        return 1.0
    if not ta or not tb:
        return 0.0
    overlap = sum((ta & tb).values())
    precision = overlap / sum(ta.values())
    recall = overlap / sum(tb.values())
    return 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0


def exact_match_sim(a: str, b: str) -> float:
    return 1.0 if a.strip() == b.strip() else 0.0


TOKEN_F1 = SimilarityFn(name="token-f1", scorer=token_f1_sim)
EXACT = SimilarityFn(name="exact", scorer=exact_match_sim)


def make_http_similarity(url: str, timeout: float = 30.0, retries: int = 2) -> SimilarityFn:
    """Similarity served over HTTP: POST {"reference","candidate"} -> {"similarity"}.

    Shares the scorer module's transport behavior (timeouts, bounded retries
    on transport failure).
    """
    import requests

    from .errors import ScorerError
    from .scorer import Backend, ScorerConfig, _post_with_retries

    session = requests.Session()
    cfg = ScorerConfig(backend=Backend.HTTP, path_or_endpoint=url, timeout=timeout, retries=retries)

    def scorer(reference: str, candidate: str) -> float:
        resp = _post_with_retries(
            session, url, {"reference": reference, "candidate": candidate}, cfg
        )
        if resp.status_code != 200:
            raise ScorerError(f"similarity service returned HTTP {resp.status_code}")
        body = resp.json()
        value = body.get("similarity") if isinstance(body, dict) else None
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ScorerError(f"non-conforming similarity response: {body!r}")
        if not 0.0 <= float(value) <= 1.0:
            raise ScorerError(f"similarity {value} outside [0, 1]")
        return float(value)

    return SimilarityFn(name=f"http:{url}", scorer=scorer)


def resolve_similarity(spec: str) -> SimilarityFn:
    """Map a config string to a similarity: token-f1, exact, or http:<url>."""
    if spec == "token-f1":
        return TOKEN_F1
    if spec == "exact":
        return EXACT
    if spec.startswith(("http://", "https://")):
        return make_http_similarity(spec)
    if spec.startswith("http:"):
        return make_http_similarity(spec[len("http:"):])
    raise EvalError(f"unknown similarity {spec!r} (expected token-f1, exact, or http:<url>)")


@dataclass
class GroupScore:
    topic: str
    stance: str
    rouge1: float
    rouge2: float
    sP: float
    sR: float
    sF1: float
    flags: list[str] = field(default_factory=list)


@dataclass
class EvalReport:
    groups: list[GroupScore]
    macro: dict[str, float]
    sim_name: str


JOINER = ". "
_METRICS = ("rouge1", "rouge2", "sP", "sR", "sF1")


def evaluate(
    generated: dict[tuple[str, str], list[str]],
    dataset: Dataset,
    sim: SimilarityFn = TOKEN_F1,
) -> EvalReport:
    """Score generated key points per (topic, stance) group and macro-average.

    ``generated`` maps group keys to key-point texts in subgraph-index order.
    Rouge runs on ". "-joined concatenations (reference joined in kp_id
    order); the soft metrics run on the two sets. A group with nothing
    generated scores zero everywhere and is flagged.
    """
    known = {g.key: g for g in dataset.groups}
    unknown = sorted(set(generated) - set(known))
    if unknown:
        raise EvalError(f"generated key points for unknown group(s): {unknown}")

    scores: list[GroupScore] = []
    for group in dataset.groups:
        if group.key not in generated:
            continue
        reference = [kp.text for kp in group.reference_kps]
        if not reference:
            raise EvalError(f"group {group.key} has no reference key points")
        gen = [t for t in generated[group.key] if t is not None and t.strip()]
        if not gen:
            scores.append(
                GroupScore(
                    topic=group.topic,
                    stance=group.stance.value,
                    rouge1=0.0,
                    rouge2=0.0,
                    sP=0.0,
                    sR=0.0,
                    sF1=0.0,
                    flags=["no generated key points"],
                )
            )
            continue
        _, _, r1 = rouge_n(JOINER.join(gen), JOINER.join(reference), 1)
        _, _, r2 = rouge_n(JOINER.join(gen), JOINER.join(reference), 2)
        sp, sr, sf1 = soft_prf(gen, reference, sim)
        scores.append(
            GroupScore(
                topic=group.topic,
                stance=group.stance.value,
                rouge1=r1,
                rouge2=r2,
                sP=sp,
                sR=sr,
                sF1=sf1,
            )
        )

    macro = {
        m: (sum(getattr(s, m) for s in scores) / len(scores) if scores else 0.0)
        for m in _METRICS
    }
    return EvalReport(groups=scores, macro=macro, sim_name=sim.name)


def write_report(path: Path | str, report: EvalReport) -> None:
    write_json(
        path,
        {
            "groups": [
                {
                    "topic": s.topic,
                    "stance": s.stance,
                    "rouge1": s.rouge1,
                    "rouge2": s.rouge2,
                    "sP": s.sP,
                    "sR": s.sR,
                    "sF1": s.sF1,
                    "flags": s.flags,
                }
                for s in report.groups
            ],
            "macro": report.macro,
            "config": {"sim": report.sim_name},
        },
    )


def write_report_csv(path: Path | str, report: EvalReport) -> None:
    """Delimited twin of report.json: one row per group plus a macro row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["topic", "stance", *_METRICS])
        for s in report.groups:
            writer.writerow([s.topic, s.stance, *(getattr(s, m) for m in _METRICS)])
        writer.writerow(["<macro>", "", *(report.macro[m] for m in _METRICS)])
