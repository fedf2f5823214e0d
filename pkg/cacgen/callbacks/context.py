"""
Context objects handed to sampling callbacks.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from ..attention import AttentionRecord

logger = logging.getLogger(__name__)


class AttentionStore:
    """Collects the attention records of one sampling run.

    Records whose step is not a multiple of ``stride`` are skipped; a store
    with ``max_records`` set keeps only the most recent ones.
    """

    def __init__(self, stride: int = 1, max_records: Optional[int] = None):
        if stride < 1:
            raise ValueError(f"stride must be >= 1, got {stride}")
        self.stride = stride
        self.max_records = max_records
        self.records: List[AttentionRecord] = []

    def __call__(self, record: Optional[AttentionRecord]) -> None:
        if record is None or record.step % self.stride:
            return
        self.records.append(record)
        if self.max_records is not None and len(self.records) > self.max_records:
            del self.records[: len(self.records) - self.max_records]

    def __len__(self) -> int:
        return len(self.records)

    def reset(self) -> None:
        self.records = []

    def steps(self) -> List[int]:
        return sorted({r.step for r in self.records})


@dataclass
class SamplingContext:
    """Per-run state shared by the sampler and its callbacks."""

    run_id: str = "run"
    seed: int = 0
    state: Dict[str, Any] = field(default_factory=dict)
    store: Optional[AttentionStore] = None
