"""Global alignment of markup text against page characters, and text-cell boxes from it."""
import math
from dataclasses import dataclass
from typing import Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from ..core.errors import EmptyTokenStream
from ..model.types import BBox, TableAnnotation, TokenSequence
from .base import BaseStage, TableItem


@dataclass(frozen=True)
class Scoring:
    match: float = 2.0
    mismatch: float = -1.0
    gap: float = -1.0

    def __post_init__(self):
        if not (self.match > 0 >= self.mismatch and self.gap <= 0):
            raise ValueError(f"scores must satisfy match > 0 >= mismatch, gap; got {self}")


@dataclass(frozen=True)
class Alignment:
    pairs: Tuple[Tuple[int, int], ...]
    score: float


def _encode(a: Sequence[Hashable], b: Sequence[Hashable]) -> Tuple[np.ndarray, np.ndarray]:
    vocab: Dict[Hashable, int] = {}
    ca = np.fromiter((vocab.setdefault(x, len(vocab)) for x in a), dtype=np.int64, count=len(a))
    cb = np.fromiter((vocab.setdefault(x, len(vocab)) for x in b), dtype=np.int64, count=len(b))
    return ca, cb


def needleman_wunsch(a: Sequence[Hashable], b: Sequence[Hashable], scores: Scoring = Scoring(),
                     band: Optional[int] = None) -> Alignment:
    """Score-maximizing global alignment; ties prefer diagonal, then up, then left.

    ``band`` limits the DP to diagonals within ``band`` of the corner-to-corner
    strip, so the full-length alignment always stays reachable.
    """
    n, m = len(a), len(b)
    g = float(scores.gap)
    ca, cb = _encode(a, b)
    idx = np.arange(m + 1)
    F = np.empty((n + 1, m + 1))

    lo = hi = None
    if band is not None:
        lo, hi = min(0, m - n) - band, max(0, m - n) + band

    def outside(i: int) -> np.ndarray:
        d = idx - i
        return (d < lo) | (d > hi)

    F[0] = g * idx
    if band is not None:
        F[0, outside(0)] = -np.inf
    for i in range(1, n + 1):
        sub = np.where(cb == ca[i - 1], scores.match, scores.mismatch)
        t = np.empty(m + 1)
        t[0] = g * i
        t[1:] = np.maximum(F[i - 1, :-1] + sub, F[i - 1, 1:] + g)
        if band is not None:
            mask = outside(i)
            t[mask] = -np.inf
        # left moves: F[i, j] = max_k t[k] + g * (j - k)
        row = np.maximum.accumulate(t - g * idx) + g * idx
        if band is not None:
            row[mask] = -np.inf
        F[i] = row

    pairs: List[Tuple[int, int]] = []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            s = scores.match if ca[i - 1] == cb[j - 1] else scores.mismatch
            if math.isclose(F[i, j], F[i - 1, j - 1] + s, abs_tol=1e-9):
                pairs.append((i - 1, j - 1))
                i, j = i - 1, j - 1
                continue
        if i > 0 and (j == 0 or math.isclose(F[i, j], F[i - 1, j] + g, abs_tol=1e-9)):
            i -= 1
        else:
            j -= 1
    pairs.reverse()
    return Alignment(tuple(pairs), float(F[n, m]))


class AlignmentReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    score: float
    # per cell, in table.cells order; None for blank cells
    match_fractions: Tuple[Optional[float], ...]
    unmatched_cells: Tuple[int, ...]
    # indices into the non-whitespace character stream of the tokens
    unmatched_tokens: Tuple[int, ...]


def align_table_text(table: TableAnnotation, tokens: TokenSequence, scores: Scoring = Scoring(),
                     band: Optional[int] = None) -> Tuple[TableAnnotation, AlignmentReport]:
    owners: List[int] = []
    markup: List[str] = []
    # row-major reading order of cells
    for ci in sorted(range(len(table.cells)), key=lambda k: (table.cells[k].row_start, table.cells[k].col_start)):
        for ch in table.cells[ci].text:
            if not ch.isspace():
                markup.append(ch)
                owners.append(ci)
    chars = tokens.characters()
    if markup and not chars:
        raise EmptyTokenStream(f"{len(markup)} markup characters but no page characters")

    alignment = needleman_wunsch(markup, [t.text for t in chars], scores, band)
    boxes: Dict[int, List[BBox]] = {}
    matched_tokens = set()
    for mi, ti in alignment.pairs:
        if markup[mi] == chars[ti].text:
            boxes.setdefault(owners[mi], []).append(chars[ti].bbox)
            matched_tokens.add(ti)

    totals: Dict[int, int] = {}
    for o in owners:
        totals[o] = totals.get(o, 0) + 1

    cells, fractions, unmatched = [], [], []
    for ci, cell in enumerate(table.cells):
        if cell.blank:
            fractions.append(None)
            cells.append(cell)
            continue
        found = boxes.get(ci, [])
        fractions.append(len(found) / totals[ci])
        if not found:
            unmatched.append(ci)
        cells.append(cell.evolve(text_box=BBox.union_all(found) if found else None))

    stray: List[int] = []
    if boxes:
        provisional = BBox.union_all(b for bs in boxes.values() for b in bs)
        stray = [ti for ti, t in enumerate(chars)
                 if ti not in matched_tokens and t.bbox.intersection_area(provisional) > 0]

    report = AlignmentReport(score=alignment.score, match_fractions=tuple(fractions),
                             unmatched_cells=tuple(unmatched), unmatched_tokens=tuple(stray))
    return table.evolve(cells=tuple(cells)), report


class AlignStage(BaseStage):
    def run(self, item: TableItem) -> TableItem:
        scores = Scoring(float(self.config.get("match", 2.0)), float(self.config.get("mismatch", -1.0)),
                         float(self.config.get("gap", -1.0)))
        tokens = item.tokens or TokenSequence()
        item.table, report = align_table_text(item.table, tokens, scores, self.config.get("band"))
        if report.unmatched_cells:
            self.log.warning("%s: %d non-blank cell(s) matched no page character", item.name, len(report.unmatched_cells))
        if report.unmatched_tokens:
            self.log.info("%s: %d page character(s) inside the table left unassigned", item.name, len(report.unmatched_tokens))
        item.reports.append((self.name, report))
        return item
