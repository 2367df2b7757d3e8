"""Pairwise records: template encoding/decoding and the Yes/No share score.

Pairs of same-group arguments are rendered into a single input text

    {topic} | {stance_i}. {arg_i} | {stance_j}. {arg_j}

where the stance words are "positive"/"negative". The expected output is
either "Yes. {key point}" (the pair shares a key point) or "No.". The share
score turns the generator's first-step Yes/No logits into a probability via
a two-way softmax.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .corpus import Stance, TopicStanceGroup
from .errors import PairingError, UnparseableOutputError

STANCE_WORDS = {Stance.PRO: "positive", Stance.CON: "negative"}


@dataclass(frozen=True)
class ArgumentPair:
    """Unordered pair of same-group arguments, canonicalized to i < j."""

    group: tuple[str, str]  # (topic, stance value)
    i: str
    j: str

    def __post_init__(self):
        if self.i == self.j:
            raise PairingError(f"pair of an argument with itself: {self.i!r}")
        if self.i > self.j:
            lo, hi = self.j, self.i
            object.__setattr__(self, "i", lo)
            object.__setattr__(self, "j", hi)


@dataclass(frozen=True)
class PairLabel:
    pair: ArgumentPair
    intra_cluster: bool
    shared_kp_text: str | None = None

    def __post_init__(self):
        if self.intra_cluster and not (self.shared_kp_text or "").strip():
            raise PairingError(f"intra-cluster label for {self.pair} lacks a key point")
        if not self.intra_cluster and self.shared_kp_text is not None:
            raise PairingError(f"inter-cluster label for {self.pair} carries a key point")


@dataclass(frozen=True)
class TrainingRecord:
    pair_id: str
    input: str
    output: str


@dataclass(frozen=True)
class LogitPair:
    logit_yes: float
    logit_no: float

    def __post_init__(self):
        if not (math.isfinite(self.logit_yes) and math.isfinite(self.logit_no)):
            raise PairingError(
                f"logits must be finite, got ({self.logit_yes}, {self.logit_no})"
            )


@dataclass(frozen=True)
class PairPrediction:
    pair: ArgumentPair
    share_score: float
    key_point: str | None = None

    def __post_init__(self):
        if not 0.0 <= self.share_score <= 1.0:
            raise PairingError(f"share_score out of [0,1]: {self.share_score}")
        if self.key_point is not None and not self.key_point.strip():
            raise PairingError("key_point, when present, must be non-empty")


def enumerate_pairs(group: TopicStanceGroup) -> list[ArgumentPair]:
    """All n*(n-1)/2 unordered pairs, in lexicographic (i, j) order."""
    ids = group.argument_ids()  # already sorted by arg_id
    key = group.key
    return [
        ArgumentPair(group=key, i=ids[a], j=ids[b])
        for a in range(len(ids))
        for b in range(a + 1, len(ids))
    ]


def label_pairs(
    pairs: list[ArgumentPair],
    group: TopicStanceGroup,
    max_intra_per_arg: int | None = 5,
    seed: int = 42,
) -> list[PairLabel]:
    """Label pairs as intra-/inter-cluster from gold matches, capping intra use.

    A pair is intra-cluster iff the two arguments share at least one gold key
    point; its target text is the lexicographically smallest shared key point.
    Each argument may appear in at most ``max_intra_per_arg`` retained
    intra-cluster labels; excess pairs are dropped by seeded uniform sampling,
    visiting arguments in arg_id order. Inter-cluster pairs are all retained.
    ``max_intra_per_arg=None`` disables the cap.
    """
    if not group.labels:
        raise PairingError(f"group {group.key} has no gold labels")
    known = set(group.argument_ids())
    for p in pairs:
        if p.i not in known or p.j not in known:
            raise PairingError(f"pair ({p.i!r}, {p.j!r}) references arguments outside {group.key}")

    intra: dict[ArgumentPair, str] = {}
    inter: list[ArgumentPair] = []
    for p in pairs:
        shared = group.shared_gold_kp_texts(p.i, p.j)
        if shared:
            intra[p] = shared[0]
        else:
            inter.append(p)

    retained = set(intra)
    if max_intra_per_arg is not None:
        rng = random.Random(seed)
        for arg_id in sorted({a for p in intra for a in (p.i, p.j)}):
            containing = sorted(
                (p for p in retained if arg_id in (p.i, p.j)), key=lambda p: (p.i, p.j)
            )
            excess = len(containing) - max_intra_per_arg
            if excess > 0:
                retained -= set(rng.sample(containing, excess))

    out: list[PairLabel] = []
    for p in pairs:
        if p in intra:
            if p in retained:
                out.append(PairLabel(pair=p, intra_cluster=True, shared_kp_text=intra[p]))
        else:
            out.append(PairLabel(pair=p, intra_cluster=False))
    return out


def format_input(topic: str, stance_i: Stance, arg_i: str, stance_j: Stance, arg_j: str) -> str:
    """Render the pair-input template; "|" in the texts is passed through verbatim."""
    if not topic.strip() or not arg_i.strip() or not arg_j.strip():
        raise PairingError("topic and argument texts must be non-empty")
    return f"{topic} | {STANCE_WORDS[stance_i]}. {arg_i} | {STANCE_WORDS[stance_j]}. {arg_j}"


def format_output(label: PairLabel) -> str:
    if label.intra_cluster:
        if not (label.shared_kp_text or "").strip():
            raise PairingError("intra-cluster label without a shared key point")
        return f"Yes. {label.shared_kp_text}"
    return "No."


def parse_output(text: str) -> tuple[bool, str | None]:
    """Decode a generated output into (is_yes, key_point).

    "Yes." followed by the key point parses affirmative; any text starting
    with "No" parses negative. The prefix match is case-insensitive. Anything
    else raises UnparseableOutputError (callers decide the drop policy).
    """
    stripped = text.strip()
    lowered = stripped.lower()
    if lowered.startswith("yes."):
        remainder = stripped[len("yes."):].strip()
        return True, remainder or None
    if lowered.startswith("no"):
        return False, None
    raise UnparseableOutputError(f"output matches neither grammar: {text!r}")


def share_score(logits: LogitPair) -> float:
    """P(shared key point) from the first-step Yes/No logits.

    Two-way softmax, computed with the max subtracted before exponentiation
    so logits up to the float64 overflow threshold stay stable.
    """
    m = max(logits.logit_yes, logits.logit_no)
    e_yes = math.exp(logits.logit_yes - m)
    e_no = math.exp(logits.logit_no - m)
    return e_yes / (e_yes + e_no)


def build_training_records(
    group: TopicStanceGroup, labels: list[PairLabel]
) -> list[TrainingRecord]:
    """Assemble exportable (pair_id, input, output) rows for a labelled group."""
    args = {a.arg_id: a for a in group.arguments}
    records = []
    for label in labels:
        p = label.pair
        a_i, a_j = args[p.i], args[p.j]
        records.append(
            TrainingRecord(
                pair_id=f"{p.i}::{p.j}",
                input=format_input(group.topic, a_i.stance, a_i.text, a_j.stance, a_j.text),
                output=format_output(label),
            )
        )
    return records
