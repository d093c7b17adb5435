import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from ..model.types import AnnotatedObject, TableAnnotation, TokenSequence


@dataclass
class TableItem:
    """One table moving through the pipeline."""
    name: str
    table: Optional[TableAnnotation]
    tokens: Optional[TokenSequence] = None
    words: Optional[TokenSequence] = None
    objects: List[AnnotatedObject] = field(default_factory=list)
    detection: Optional[AnnotatedObject] = None
    reports: List[Tuple[str, Any]] = field(default_factory=list)
    reasons: List[str] = field(default_factory=list)

    @property
    def rejected(self) -> bool:
        return bool(self.reasons)

    def reject(self, *reasons: str):
        self.reasons.extend(r for r in reasons if r not in self.reasons)


class BaseStage:
    """A named pipeline step. Stages hold configuration only and are shared across worker threads."""

    def __init__(self, name: str, config: Optional[Dict[str, Any]] = None):
        self.name = name
        self.config = config or {}
        self.log = logging.getLogger(f"stage.{name}")

    def __call__(self, item: TableItem) -> TableItem:
        return self.run(item)

    def run(self, item: TableItem) -> TableItem:
        raise NotImplementedError
