"""Produce pair predictions from a file, an HTTP service, or the gold labels.

All three backends return the same shape (one :class:`PairPrediction` per
requested pair, in request order), so the rest of the pipeline never cares
where scores came from.

predictions.jsonl format, one record per unordered pair:

    {"topic", "stance", "arg_i", "arg_j", "share_score", "key_point"}

where arg_i/arg_j are argument ids and key_point is a string or null.

HTTP protocol (JSON bodies; arg_i/arg_j carry the argument texts):

    POST /v1/score        {"topic","stance_i","arg_i","stance_j","arg_j"}
                          -> 200 {"share_score": number, "key_point": string|null}
    POST /v1/score_batch  {"pairs":[<same objects>]}
                          -> 200 {"results":[<same responses, same order>]}
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import requests

from .corpus import TopicStanceGroup
from .errors import ScorerError
from .jsonl import read_jsonl, write_jsonl
from .pairing import ArgumentPair, PairPrediction

logger = logging.getLogger(__name__)

BATCH_CHUNK = 32


class Backend(Enum):
    FILE = "file"
    HTTP = "http"
    ORACLE = "oracle"


@dataclass
class ScorerConfig:
    backend: Backend
    path_or_endpoint: str = ""
    timeout: float = 30.0
    max_in_flight: int = 8
    retries: int = 2

    def __post_init__(self):
        if self.max_in_flight < 1:
            raise ScorerError("max_in_flight must be >= 1")
        if self.retries < 0:
            raise ScorerError("retries must be >= 0")


def _pair_key(topic: str, stance: str, a: str, b: str) -> tuple[str, str, str, str]:
    lo, hi = (a, b) if a <= b else (b, a)
    return (topic, stance, lo, hi)


def _clean_key_point(raw, where: str) -> str | None:
    if raw is None:
        return None
    if not isinstance(raw, str):
        raise ScorerError(f"{where}: key_point must be a string or null, got {raw!r}")
    text = raw.strip()
    if not text:
        # An affirmative answer with an empty key point cannot form an edge;
        # treat it as a "No" and leave a trace.
        logger.warning("%s: empty key point treated as no shared key point", where)
        return None
    return text


def _check_score(raw, where: str) -> float:
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ScorerError(f"{where}: share_score must be a number, got {raw!r}")
    score = float(raw)
    if not 0.0 <= score <= 1.0:
        raise ScorerError(f"{where}: share_score {score} outside [0, 1]")
    return score


def load_predictions(path: Path | str) -> dict[tuple[str, str, str, str], PairPrediction]:
    """Read predictions.jsonl into a map keyed by normalized pair identity."""
    path = Path(path)
    out: dict[tuple[str, str, str, str], PairPrediction] = {}
    for lineno, record in read_jsonl(path):
        where = f"{path}:{lineno}"
        for f in ("topic", "stance", "arg_i", "arg_j", "share_score"):
            if f not in record:
                raise ScorerError(f"{where}: missing field {f!r}")
        topic = str(record["topic"])
        stance = str(record["stance"])
        a, b = str(record["arg_i"]), str(record["arg_j"])
        key = _pair_key(topic, stance, a, b)
        if key in out:
            raise ScorerError(f"{where}: duplicate prediction for pair ({a!r}, {b!r})")
        score = _check_score(record["share_score"], where)
        kp = _clean_key_point(record.get("key_point"), where)
        pair = ArgumentPair(group=(topic, stance), i=key[2], j=key[3])
        out[key] = PairPrediction(pair=pair, share_score=score, key_point=kp)
    return out


def score_from_file(path: Path | str, pairs: list[ArgumentPair]) -> list[PairPrediction]:
    """Look up precomputed predictions for the requested pairs.

    Records keyed (j, i) are normalized to (i, j) before matching. Every
    requested pair must be present; the error lists the missing ones.
    """
    table = load_predictions(path)
    results: list[PairPrediction] = []
    missing: list[ArgumentPair] = []
    for p in pairs:
        key = (p.group[0], p.group[1], p.i, p.j)
        if key in table:
            results.append(table[key])
        else:
            missing.append(p)
    if missing:
        listing = ", ".join(f"({p.i}, {p.j})" for p in missing[:20])
        suffix = "" if len(missing) <= 20 else f" and {len(missing) - 20} more"
        raise ScorerError(f"{path}: no prediction for {len(missing)} pair(s): {listing}{suffix}")
    return results


def oracle_score(group: TopicStanceGroup, pair: ArgumentPair) -> PairPrediction:
    """Gold-label oracle: 1.0 plus the smallest shared key point, or 0.0.

    Deterministic and symmetric in pair order; used for tests and dry runs.
    """
    if not group.labels:
        raise ScorerError(f"group {group.key} has no gold labels for the oracle backend")
    known = set(group.argument_ids())
    if pair.i not in known or pair.j not in known:
        raise ScorerError(f"pair ({pair.i!r}, {pair.j!r}) outside group {group.key}")
    shared = group.shared_gold_kp_texts(pair.i, pair.j)
    if shared:
        return PairPrediction(pair=pair, share_score=1.0, key_point=shared[0])
    return PairPrediction(pair=pair, share_score=0.0, key_point=None)


def _pair_payload(group: TopicStanceGroup, pair: ArgumentPair) -> dict:
    arg_i = group.argument_by_id(pair.i)
    arg_j = group.argument_by_id(pair.j)
    return {
        "topic": group.topic,
        "stance_i": arg_i.stance.value,
        "arg_i": arg_i.text,
        "stance_j": arg_j.stance.value,
        "arg_j": arg_j.text,
    }


def _parse_response_body(body, where: str, pair: ArgumentPair) -> PairPrediction:
    if not isinstance(body, dict) or "share_score" not in body:
        raise ScorerError(f"{where}: non-conforming response body: {body!r}")
    score = _check_score(body["share_score"], where)
    kp = _clean_key_point(body.get("key_point"), where)
    return PairPrediction(pair=pair, share_score=score, key_point=kp)


def _post_with_retries(session: requests.Session, url: str, payload: dict, cfg: ScorerConfig):
    """POST, retrying transport failures up to cfg.retries extra attempts."""
    last_exc: Exception | None = None
    for attempt in range(cfg.retries + 1):
        try:
            return session.post(url, json=payload, timeout=cfg.timeout)
        except (requests.ConnectionError, requests.Timeout) as e:
            last_exc = e
            if attempt < cfg.retries:
                logger.warning("transport failure on %s (attempt %d): %s", url, attempt + 1, e)
    raise ScorerError(f"transport failure after {cfg.retries + 1} attempt(s): {last_exc}")


def score_from_http(
    cfg: ScorerConfig, group: TopicStanceGroup, pairs: list[ArgumentPair]
) -> list[PairPrediction]:
    """Score pairs against a remote service, batch endpoint first.

    At most ``cfg.max_in_flight`` requests run concurrently. If the batch
    route answers 404/405 the client falls back to one request per pair.
    Failures are isolated per pair and reported together, keyed by pair
    identity; successful pairs are never affected by a failing one.
    """
    if not pairs:
        return []
    base = cfg.path_or_endpoint.rstrip("/")
    session = requests.Session()
    results: dict[ArgumentPair, PairPrediction] = {}
    failures: list[tuple[ArgumentPair, str]] = []

    batch_supported = True
    chunks = [pairs[i : i + BATCH_CHUNK] for i in range(0, len(pairs), BATCH_CHUNK)]
    probe = chunks[0]
    try:
        resp = _post_with_retries(
            session,
            f"{base}/v1/score_batch",
            {"pairs": [_pair_payload(group, p) for p in probe]},
            cfg,
        )
        if resp.status_code in (404, 405):
            batch_supported = False
        elif resp.status_code != 200:
            for p in probe:
                failures.append((p, f"batch HTTP {resp.status_code}"))
        else:
            _merge_batch_response(resp, probe, results, failures)
    except ScorerError as e:
        for p in probe:
            failures.append((p, str(e)))

    def run_batch_chunk(chunk: list[ArgumentPair]) -> None:
        try:
            resp = _post_with_retries(
                session,
                f"{base}/v1/score_batch",
                {"pairs": [_pair_payload(group, p) for p in chunk]},
                cfg,
            )
        except ScorerError as e:
            for p in chunk:
                failures.append((p, str(e)))
            return
        if resp.status_code != 200:
            for p in chunk:
                failures.append((p, f"batch HTTP {resp.status_code}"))
            return
        _merge_batch_response(resp, chunk, results, failures)

    def run_single(pair: ArgumentPair) -> None:
        try:
            resp = _post_with_retries(session, f"{base}/v1/score", _pair_payload(group, pair), cfg)
        except ScorerError as e:
            failures.append((pair, str(e)))
            return
        if resp.status_code != 200:
            failures.append((pair, f"HTTP {resp.status_code}"))
            return
        try:
            results[pair] = _parse_response_body(resp.json(), f"pair ({pair.i}, {pair.j})", pair)
        except (ValueError, ScorerError) as e:
            failures.append((pair, str(e)))

    with ThreadPoolExecutor(max_workers=cfg.max_in_flight) as pool:
        if batch_supported:
            list(pool.map(run_batch_chunk, chunks[1:]))
        else:
            logger.info("batch endpoint unavailable, falling back to per-pair requests")
            failures.clear()
            list(pool.map(run_single, pairs))

    if failures:
        failures.sort(key=lambda f: (f[0].i, f[0].j))
        listing = "; ".join(f"({p.i}, {p.j}): {msg}" for p, msg in failures[:10])
        suffix = "" if len(failures) <= 10 else f" and {len(failures) - 10} more"
        raise ScorerError(f"{len(failures)} pair(s) failed: {listing}{suffix}")
    return [results[p] for p in pairs]


def _merge_batch_response(
    resp,
    chunk: list[ArgumentPair],
    results: dict[ArgumentPair, PairPrediction],
    failures: list[tuple[ArgumentPair, str]],
) -> None:
    try:
        body = resp.json()
    except ValueError as e:
        for p in chunk:
            failures.append((p, f"invalid JSON: {e}"))
        return
    items = body.get("results") if isinstance(body, dict) else None
    if not isinstance(items, list) or len(items) != len(chunk):
        for p in chunk:
            failures.append((p, "batch response does not match request shape"))
        return
    for pair, item in zip(chunk, items):
        try:
            results[pair] = _parse_response_body(item, f"pair ({pair.i}, {pair.j})", pair)
        except ScorerError as e:
            failures.append((pair, str(e)))


def score_pairs(
    cfg: ScorerConfig, group: TopicStanceGroup, pairs: list[ArgumentPair]
) -> list[PairPrediction]:
    """Dispatch to the configured backend; every backend returns the same shape."""
    if cfg.backend is Backend.FILE:
        return score_from_file(cfg.path_or_endpoint, pairs)
    if cfg.backend is Backend.HTTP:
        return score_from_http(cfg, group, pairs)
    if cfg.backend is Backend.ORACLE:
        return [oracle_score(group, p) for p in pairs]
    raise ScorerError(f"unknown backend {cfg.backend!r}")


def write_predictions(path: Path | str, predictions: list[PairPrediction]) -> None:
    records = [
        {
            "topic": p.pair.group[0],
            "stance": p.pair.group[1],
            "arg_i": p.pair.i,
            "arg_j": p.pair.j,
            "share_score": p.share_score,
            "key_point": p.key_point,
        }
        for p in predictions
    ]
    write_jsonl(path, records)
