"""Shared text normalization: one tokenizer for metrics and the fallback embedder."""

from __future__ import annotations

import hashlib
import re
import string

_PUNCT_TABLE = str.maketrans({c: " " for c in string.punctuation})


def tokenize(text: str) -> list[str]:
    """Lowercase, replace punctuation with spaces, split on whitespace."""
    return text.lower().translate(_PUNCT_TABLE).split()


def ngrams(tokens: list[str], n: int) -> list[tuple[str, ...]]:
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def group_slug(topic: str, stance: str) -> str:
    """Filesystem-safe, collision-resistant name for a (topic, stance) group."""
    base = re.sub(r"[^a-zA-Z0-9._-]+", "-", topic).strip("-").lower()[:48]
    digest = hashlib.blake2b(topic.encode("utf-8"), digest_size=4).hexdigest()
    return f"{base or 'topic'}-{digest}__{stance}"
