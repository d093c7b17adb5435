"""Quality-control filters applied to completed tables."""
from dataclasses import dataclass
from itertools import combinations
from typing import Dict, List, Literal, Optional, Tuple

import Levenshtein
import numpy as np
from pydantic import BaseModel, ConfigDict

from ..core.errors import MissingBoxes
from ..model.types import TableAnnotation, TokenSequence
from .base import BaseStage, TableItem
from .spatial import assign_tokens, cell_boxes, overlap_fractions

OVERLAP = "overlap"
EDIT_DISTANCE = "edit_distance"
WORD_CONTAINMENT = "word_containment"
OBJECT_COUNT = "object_count"


@dataclass(frozen=True)
class QCThresholds:
    max_edit_distance: float = 0.05
    min_word_containment: float = 0.9
    max_objects: int = 100
    token_overlap: float = 0.5


def check_overlap(table: TableAnnotation) -> bool:
    if table.rows is None or table.columns is None:
        raise MissingBoxes("overlap check needs row and column boxes")
    for boxes in (table.rows, table.columns):
        if any(a.intersection_area(b) > 0 for a, b in combinations(boxes, 2)):
            return False
    return True


def _squeeze(text: str) -> str:
    return "".join(text.split())


def normalized_edit_distance(a: str, b: str) -> float:
    if not a and not b:
        return 0.0
    return Levenshtein.distance(a, b) / max(len(a), len(b))


def cell_edit_distance(table: TableAnnotation, tokens: TokenSequence, min_overlap: float = 0.5) -> float:
    """Mean over cells of the normalized edit distance between markup text and the page text inside the cell."""
    if not table.cells:
        return 0.0
    extracted: Dict[int, List[str]] = {}
    for tok, ci in zip(tokens.tokens, assign_tokens(table, tokens, min_overlap)):
        if ci is not None:
            extracted.setdefault(ci, []).append(tok.text)
    dists = [normalized_edit_distance(_squeeze(c.text), _squeeze("".join(extracted.get(i, []))))
             for i, c in enumerate(table.cells)]
    return float(np.mean(dists))


def word_containment(table: TableAnnotation, words: TokenSequence) -> Tuple[float, bool]:
    """Mean best-cell containment of the words inside the table, and whether no word was inside."""
    if table.table_box is None:
        raise MissingBoxes("word containment needs a table box")
    inside = [w.bbox for w in words.tokens if w.bbox.intersection_area(table.table_box) > 0]
    if not inside:
        return 1.0, True
    frac = overlap_fractions(inside, cell_boxes(table))
    if not frac.shape[1]:
        return 0.0, False
    return float(frac.max(axis=1).mean()), False


def count_objects(table: TableAnnotation) -> int:
    prh_rows = {c.row_start for c in table.cells if c.is_projected_row_header}
    spanning = sum(1 for c in table.cells if c.spanning and not c.is_projected_row_header)
    return 1 + table.n_rows + table.n_cols + (1 if table.header_rows else 0) + len(prh_rows) + spanning


class QCReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    overlap_ok: bool
    mean_cell_edit_distance: float
    mean_word_containment: float
    object_count: int
    vacuous_containment: bool = False
    verdict: Literal["accept", "reject"]
    reasons: Tuple[str, ...] = ()

    @classmethod
    def from_measurements(cls, overlap_ok: bool, edit: float, containment: float, objects: int,
                          thresholds: QCThresholds, vacuous: bool = False) -> "QCReport":
        reasons = []
        if not overlap_ok:
            reasons.append(OVERLAP)
        if edit > thresholds.max_edit_distance:
            reasons.append(EDIT_DISTANCE)
        if containment < thresholds.min_word_containment:
            reasons.append(WORD_CONTAINMENT)
        if objects > thresholds.max_objects:
            reasons.append(OBJECT_COUNT)
        return cls(overlap_ok=overlap_ok, mean_cell_edit_distance=edit, mean_word_containment=containment,
                   object_count=objects, vacuous_containment=vacuous,
                   verdict="reject" if reasons else "accept", reasons=tuple(reasons))


def qc(table: TableAnnotation, tokens: TokenSequence, words: Optional[TokenSequence] = None,
       thresholds: QCThresholds = QCThresholds()) -> QCReport:
    """Run the four filters. ``words`` defaults to ``tokens``."""
    containment, vacuous = word_containment(table, words if words is not None else tokens)
    return QCReport.from_measurements(
        check_overlap(table),
        cell_edit_distance(table, tokens, thresholds.token_overlap),
        containment,
        count_objects(table),
        thresholds,
        vacuous,
    )


class QCStage(BaseStage):
    def thresholds(self) -> QCThresholds:
        return QCThresholds(
            max_edit_distance=float(self.config.get("max_edit_distance", 0.05)),
            min_word_containment=float(self.config.get("min_word_containment", 0.9)),
            max_objects=int(self.config.get("max_objects", 100)),
            token_overlap=float(self.config.get("token_overlap", 0.5)),
        )

    def run(self, item: TableItem) -> TableItem:
        report = qc(item.table, item.tokens or TokenSequence(), item.words, self.thresholds())
        if report.vacuous_containment:
            self.log.warning("%s: no word lies inside the table; containment passes vacuously", item.name)
        if report.verdict == "reject":
            item.reject(*report.reasons)
        item.reports.append((self.name, report))
        return item
