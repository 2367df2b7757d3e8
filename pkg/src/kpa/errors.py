"""Exception types shared across the pipeline stages."""

from __future__ import annotations


class KpaError(Exception):
    """Base class for all errors raised by this package."""


class DatasetError(KpaError):
    """Corpus files are missing, malformed, or referentially broken."""


class PairingError(KpaError):
    """Pair construction or labelling violated a precondition."""


class UnparseableOutputError(KpaError):
    """A decoded model output matched neither the Yes- nor the No-grammar."""


class ScorerError(KpaError):
    """A prediction backend failed or returned non-conforming data."""


class GraphError(KpaError):
    """Graph construction or subgraph queries violated an invariant."""


class PartitionError(KpaError):
    """Partitioning preconditions or configuration invariants were violated."""


class EvalError(KpaError):
    """Evaluation inputs were inconsistent with the dataset."""


class StageError(KpaError):
    """Pipeline-level wrapper carrying the name of the failing stage."""

    def __init__(self, stage: str, cause: Exception | str):
        self.stage = stage
        self.cause = cause
        super().__init__(f"{stage}: {cause}")
