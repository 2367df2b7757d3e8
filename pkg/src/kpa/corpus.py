"""Load, validate, and group the argument / key-point corpus.

The corpus lives in three JSONL files:

    arguments.jsonl   {"arg_id", "topic", "stance", "text"}
    keypoints.jsonl   {"kp_id", "topic", "stance", "text"}
    labels.jsonl      {"arg_id", "kp_id", "label"}   (label 1 = argument matches key point)

Records are grouped by (topic, stance); everything downstream (pairing,
graph construction, partitioning, evaluation) operates per group.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import DatasetError
from .jsonl import read_jsonl, write_jsonl

logger = logging.getLogger(__name__)

# Stance vocabulary is "pro"/"con"; converted corpora show up with assorted
# synonyms, which the loader folds in. Anything else is rejected.
_PRO_ALIASES = {"pro", "positive", "pos", "1", "+1"}
_CON_ALIASES = {"con", "negative", "neg", "-1"}


class Stance(Enum):
    PRO = "pro"
    CON = "con"

    @classmethod
    def parse(cls, raw: str) -> "Stance":
        val = str(raw).strip().lower()
        if val in _PRO_ALIASES:
            return cls.PRO
        if val in _CON_ALIASES:
            return cls.CON
        raise DatasetError(f"unrecognized stance value: {raw!r}")


@dataclass(frozen=True)
class Argument:
    arg_id: str
    topic: str
    stance: Stance
    text: str


@dataclass(frozen=True)
class KeyPoint:
    kp_id: str
    topic: str
    stance: Stance
    text: str


@dataclass(frozen=True)
class MatchLabel:
    arg_id: str
    kp_id: str
    label: bool


@dataclass
class TopicStanceGroup:
    """All arguments, reference key points, and gold labels for one (topic, stance).

    ``arguments`` is sorted by arg_id and ``reference_kps`` by kp_id so that
    every downstream enumeration is deterministic. ``kp_texts`` resolves each
    kp_id referenced by this group's labels (normally a subset of
    ``reference_kps``, but cross-group labels are tolerated and flagged by
    :func:`validate`).
    """

    topic: str
    stance: Stance
    arguments: list[Argument] = field(default_factory=list)
    reference_kps: list[KeyPoint] = field(default_factory=list)
    labels: list[MatchLabel] = field(default_factory=list)
    kp_texts: dict[str, str] = field(default_factory=dict)

    @property
    def key(self) -> tuple[str, str]:
        return (self.topic, self.stance.value)

    def argument_ids(self) -> list[str]:
        return [a.arg_id for a in self.arguments]

    def argument_by_id(self, arg_id: str) -> Argument:
        for a in self.arguments:
            if a.arg_id == arg_id:
                return a
        raise DatasetError(f"argument {arg_id!r} not in group {self.key}")

    def gold_kp_ids(self, arg_id: str) -> set[str]:
        """kp_ids positively labelled for the given argument."""
        return {l.kp_id for l in self.labels if l.label and l.arg_id == arg_id}

    def shared_gold_kp_texts(self, arg_a: str, arg_b: str) -> list[str]:
        """Texts of key points positively matched by both arguments, sorted."""
        shared_ids = self.gold_kp_ids(arg_a) & self.gold_kp_ids(arg_b)
        return sorted(self.kp_texts[k] for k in shared_ids)


@dataclass
class Dataset:
    groups: list[TopicStanceGroup]

    def group(self, topic: str, stance: Stance) -> TopicStanceGroup:
        for g in self.groups:
            if g.topic == topic and g.stance == stance:
                return g
        raise DatasetError(f"no group for topic={topic!r} stance={stance.value}")

    def group_keys(self) -> list[tuple[str, str]]:
        return [g.key for g in self.groups]


def _require_fields(record: dict, fields: tuple[str, ...], path: Path, lineno: int) -> None:
    for f in fields:
        if f not in record:
            raise DatasetError(f"{path}:{lineno}: missing field {f!r}")
    extra = set(record) - set(fields)
    if extra:
        logger.warning("%s:%d: ignoring unknown fields %s", path, lineno, sorted(extra))


def _nonempty_text(record: dict, key: str, path: Path, lineno: int) -> str:
    text = str(record[key]).strip()
    if not text:
        raise DatasetError(f"{path}:{lineno}: field {key!r} is empty")
    return text


def load_dataset(args_path: Path | str, kps_path: Path | str, labels_path: Path | str) -> Dataset:
    """Read the three corpus files into a Dataset grouped by (topic, stance).

    Groups are sorted by (topic, stance), arguments by arg_id, and key points
    by kp_id, so identical input files always produce identical Datasets.
    Referential problems (duplicate ids, labels pointing at unknown ids) are
    hard errors; cross-group labels load fine and are reported by
    :func:`validate`.
    """
    args_path, kps_path, labels_path = Path(args_path), Path(kps_path), Path(labels_path)

    arguments: dict[str, Argument] = {}
    for lineno, record in read_jsonl(args_path):
        _require_fields(record, ("arg_id", "topic", "stance", "text"), args_path, lineno)
        try:
            stance = Stance.parse(record["stance"])
        except DatasetError as e:
            raise DatasetError(f"{args_path}:{lineno}: {e}") from None
        arg = Argument(
            arg_id=str(record["arg_id"]),
            topic=str(record["topic"]).strip(),
            stance=stance,
            text=_nonempty_text(record, "text", args_path, lineno),
        )
        if arg.arg_id in arguments:
            raise DatasetError(f"{args_path}:{lineno}: duplicate arg_id {arg.arg_id!r}")
        arguments[arg.arg_id] = arg

    keypoints: dict[str, KeyPoint] = {}
    for lineno, record in read_jsonl(kps_path):
        _require_fields(record, ("kp_id", "topic", "stance", "text"), kps_path, lineno)
        try:
            stance = Stance.parse(record["stance"])
        except DatasetError as e:
            raise DatasetError(f"{kps_path}:{lineno}: {e}") from None
        kp = KeyPoint(
            kp_id=str(record["kp_id"]),
            topic=str(record["topic"]).strip(),
            stance=stance,
            text=_nonempty_text(record, "text", kps_path, lineno),
        )
        if kp.kp_id in keypoints:
            raise DatasetError(f"{kps_path}:{lineno}: duplicate kp_id {kp.kp_id!r}")
        keypoints[kp.kp_id] = kp

    labels: list[MatchLabel] = []
    seen_pairs: set[tuple[str, str]] = set()
    for lineno, record in read_jsonl(labels_path):
        _require_fields(record, ("arg_id", "kp_id", "label"), labels_path, lineno)
        arg_id, kp_id = str(record["arg_id"]), str(record["kp_id"])
        if arg_id not in arguments:
            raise DatasetError(f"{labels_path}:{lineno}: unknown arg_id {arg_id!r}")
        if kp_id not in keypoints:
            raise DatasetError(f"{labels_path}:{lineno}: unknown kp_id {kp_id!r}")
        if (arg_id, kp_id) in seen_pairs:
            raise DatasetError(f"{labels_path}:{lineno}: duplicate label ({arg_id!r}, {kp_id!r})")
        seen_pairs.add((arg_id, kp_id))
        raw = record["label"]
        if raw not in (0, 1, True, False):
            raise DatasetError(f"{labels_path}:{lineno}: label must be 0 or 1, got {raw!r}")
        labels.append(MatchLabel(arg_id=arg_id, kp_id=kp_id, label=bool(raw)))

    groups: dict[tuple[str, str], TopicStanceGroup] = {}

    def group_for(topic: str, stance: Stance) -> TopicStanceGroup:
        key = (topic, stance.value)
        if key not in groups:
            groups[key] = TopicStanceGroup(topic=topic, stance=stance)
        return groups[key]

    for arg in arguments.values():
        group_for(arg.topic, arg.stance).arguments.append(arg)
    for kp in keypoints.values():
        group_for(kp.topic, kp.stance).reference_kps.append(kp)
    for label in labels:
        arg = arguments[label.arg_id]
        g = group_for(arg.topic, arg.stance)
        g.labels.append(label)
        g.kp_texts[label.kp_id] = keypoints[label.kp_id].text

    for g in groups.values():
        g.arguments.sort(key=lambda a: a.arg_id)
        g.reference_kps.sort(key=lambda k: k.kp_id)
        g.labels.sort(key=lambda l: (l.arg_id, l.kp_id))
        for kp in g.reference_kps:
            g.kp_texts.setdefault(kp.kp_id, kp.text)

    ordered = [groups[k] for k in sorted(groups)]
    return Dataset(groups=ordered)


def save_dataset(dataset: Dataset, args_path: Path | str, kps_path: Path | str, labels_path: Path | str) -> None:
    """Serialize a Dataset back to the three JSONL files (round-trips with load)."""
    arg_records, kp_records, label_records = [], [], []
    for g in dataset.groups:
        for a in g.arguments:
            arg_records.append(
                {"arg_id": a.arg_id, "topic": a.topic, "stance": a.stance.value, "text": a.text}
            )
        for k in g.reference_kps:
            kp_records.append(
                {"kp_id": k.kp_id, "topic": k.topic, "stance": k.stance.value, "text": k.text}
            )
        for l in g.labels:
            label_records.append({"arg_id": l.arg_id, "kp_id": l.kp_id, "label": int(l.label)})
    write_jsonl(args_path, arg_records)
    write_jsonl(kps_path, kp_records)
    write_jsonl(labels_path, label_records)


@dataclass
class ValidationIssue:
    severity: str  # "warning" | "error"
    message: str


@dataclass
class ValidationReport:
    issues: list[ValidationIssue] = field(default_factory=list)

    def warning(self, message: str) -> None:
        self.issues.append(ValidationIssue("warning", message))

    def error(self, message: str) -> None:
        self.issues.append(ValidationIssue("error", message))

    def __len__(self) -> int:
        return len(self.issues)

    def is_clean(self) -> bool:
        return not self.issues


def validate(dataset: Dataset) -> ValidationReport:
    """Diagnostic pass over a loaded Dataset; never mutates it.

    Reports arguments with no gold key point, key points matched by no
    argument, and labels whose argument and key point disagree on topic or
    stance. Arguments matched to several key points are legal and not flagged.
    """
    report = ValidationReport()
    kp_by_id: dict[str, KeyPoint] = {}
    arg_by_id: dict[str, Argument] = {}
    for g in dataset.groups:
        for kp in g.reference_kps:
            kp_by_id[kp.kp_id] = kp
        for a in g.arguments:
            arg_by_id[a.arg_id] = a

    matched_args: set[str] = set()
    matched_kps: set[str] = set()
    for g in dataset.groups:
        for label in g.labels:
            if not label.label:
                continue
            matched_args.add(label.arg_id)
            matched_kps.add(label.kp_id)
            arg = arg_by_id[label.arg_id]
            kp = kp_by_id[label.kp_id]
            if arg.stance != kp.stance:
                report.warning(
                    f"cross-stance label: argument {arg.arg_id!r} ({arg.stance.value}) "
                    f"matched to key point {kp.kp_id!r} ({kp.stance.value})"
                )
            elif arg.topic != kp.topic:
                report.warning(
                    f"cross-topic label: argument {arg.arg_id!r} ({arg.topic!r}) "
                    f"matched to key point {kp.kp_id!r} ({kp.topic!r})"
                )

    for g in dataset.groups:
        has_labels = bool(g.labels)
        for a in g.arguments:
            if has_labels and a.arg_id not in matched_args:
                report.warning(f"argument {a.arg_id!r} has no gold key point")
        for kp in g.reference_kps:
            if has_labels and kp.kp_id not in matched_kps:
                report.warning(f"unreferenced key point {kp.kp_id!r}")
    return report
