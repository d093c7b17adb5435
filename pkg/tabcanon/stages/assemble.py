"""Turn detected table objects back into a logical table.

Objects of one category are taken in descending confidence. A later object
that conflicts with one already kept is suppressed, except rows and columns
with a small residual overlap, whose facing edges are snapped to the midpoint.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict

from ..core import metrics
from ..core.errors import DegenerateStructure, NoTableObject
from ..model.grid import grid_box, validate_canonical
from ..model.types import (
    AnnotatedObject, BBox, Cell, ObjectCategory, TableAnnotation, TokenSequence, is_blank,
)
from .base import BaseStage, TableItem
from .spatial import assign_tokens

log = logging.getLogger("tabcanon.assemble")

Span = Tuple[int, int, int, int]


@dataclass(frozen=True)
class AssemblyThresholds:
    child_overlap: float = 0.5
    span_coverage_min: float = 0.25
    token_overlap: float = 0.5


def _order(obj: AnnotatedObject):
    return -obj.score, obj.category.value, tuple(obj.bbox.as_list())


def interval_overlap(a0: float, a1: float, b0: float, b1: float) -> float:
    """Shared length as a fraction of the shorter interval."""
    shorter = min(a1 - a0, b1 - b0)
    if shorter <= 0:
        # a degenerate interval counts as overlapping when it lies inside the other
        return 1.0 if (b0 <= a0 and a1 <= b1) or (a0 <= b0 and b1 <= a1) else 0.0
    return max(min(a1, b1) - max(a0, b0), 0.0) / shorter


@dataclass
class Resolution:
    table: Optional[AnnotatedObject] = None
    rows: List[BBox] = field(default_factory=list)
    columns: List[BBox] = field(default_factory=list)
    header: Optional[AnnotatedObject] = None
    cells: List[Tuple[AnnotatedObject, Span]] = field(default_factory=list)
    suppressed: List[AnnotatedObject] = field(default_factory=list)

    def objects(self) -> List[AnnotatedObject]:
        out = [self.table] if self.table else []
        out += [AnnotatedObject(category=ObjectCategory.ROW, bbox=b) for b in self.rows]
        out += [AnnotatedObject(category=ObjectCategory.COLUMN, bbox=b) for b in self.columns]
        if self.header:
            out.append(self.header)
        return out + [o for o, _ in self.cells]


def _lines(objs: List[AnnotatedObject], axis: str, threshold: float,
           suppressed: List[AnnotatedObject]) -> List[BBox]:
    def extent(b: BBox) -> Tuple[float, float]:
        return (b.y_min, b.y_max) if axis == "row" else (b.x_min, b.x_max)

    kept: List[AnnotatedObject] = []
    for o in sorted(objs, key=_order):
        if any(interval_overlap(*extent(o.bbox), *extent(k.bbox)) >= threshold for k in kept):
            suppressed.append(o)
        else:
            kept.append(o)
    spans = sorted(((list(extent(o.bbox)), o.bbox) for o in kept), key=lambda s: s[0])
    for prev, nxt in zip(spans, spans[1:]):
        if prev[0][1] > nxt[0][0]:
            mid = (prev[0][1] + nxt[0][0]) / 2
            prev[0][1] = nxt[0][0] = mid
    if axis == "row":
        return [BBox.of(b.x_min, lo, b.x_max, hi) for (lo, hi), b in spans]
    return [BBox.of(lo, b.y_min, hi, b.y_max) for (lo, hi), b in spans]


def _grid_fractions(obj: AnnotatedObject, rows: Sequence[BBox], columns: Sequence[BBox]) -> Dict[Tuple[int, int], float]:
    out = {}
    for r, row in enumerate(rows):
        for c, col in enumerate(columns):
            cell = row.intersection(col) or BBox.of(col.x_min, row.y_min, col.x_max, row.y_max)
            out[(r, c)] = cell.overlap_fraction(obj.bbox)
    return out


def resolve(objects: Sequence[AnnotatedObject], thresholds: AssemblyThresholds = AssemblyThresholds()) -> Resolution:
    res = Resolution()
    by_cat: Dict[ObjectCategory, List[AnnotatedObject]] = {}
    for o in objects:
        by_cat.setdefault(o.category, []).append(o)

    tables = sorted(by_cat.get(ObjectCategory.TABLE, []) + by_cat.get(ObjectCategory.TABLE_ROTATED, []), key=_order)
    if tables:
        res.table = tables[0]
        res.suppressed += tables[1:]
    headers = sorted(by_cat.get(ObjectCategory.COLUMN_HEADER, []), key=_order)
    if headers:
        res.header = headers[0]
        res.suppressed += headers[1:]

    def inside(cat: ObjectCategory) -> List[AnnotatedObject]:
        keep = []
        for o in by_cat.get(cat, []):
            if res.table is None or o.bbox.overlap_fraction(res.table.bbox) >= thresholds.child_overlap:
                keep.append(o)
            else:
                res.suppressed.append(o)
        return keep

    res.rows = _lines(inside(ObjectCategory.ROW), "row", thresholds.child_overlap, res.suppressed)
    res.columns = _lines(inside(ObjectCategory.COLUMN), "column", thresholds.child_overlap, res.suppressed)

    pool = sorted(by_cat.get(ObjectCategory.SPANNING_CELL, []) + by_cat.get(ObjectCategory.PROJECTED_ROW_HEADER, []),
                  key=_order)
    taken: set = set()
    for o in pool:
        fractions = _grid_fractions(o, res.rows, res.columns)
        claimed = [pos for pos, f in fractions.items() if f >= thresholds.child_overlap]
        if not claimed:
            res.suppressed.append(o)
            continue
        r0, r1 = min(p[0] for p in claimed), max(p[0] for p in claimed)
        c0, c1 = min(p[1] for p in claimed), max(p[1] for p in claimed)
        rect = [(r, c) for r in range(r0, r1 + 1) for c in range(c0, c1 + 1)]
        multi_row_prh = o.category == ObjectCategory.PROJECTED_ROW_HEADER and r1 > r0
        if multi_row_prh or any(fractions[p] < thresholds.span_coverage_min for p in rect) \
                or any(p in taken for p in rect):
            res.suppressed.append(o)
            continue
        taken.update(rect)
        res.cells.append((o, (r0, r1, c0, c1)))
    return res


def resolve_conflicts(objects: Sequence[AnnotatedObject],
                      thresholds: AssemblyThresholds = AssemblyThresholds()) -> List[AnnotatedObject]:
    """Objects left after suppression, with row and column boxes snapped apart."""
    return resolve(objects, thresholds).objects()


def _in_header(row: BBox, header: BBox, threshold: float) -> bool:
    if row.height <= 0:
        return header.y_min <= row.y_min <= header.y_max
    return (min(row.y_max, header.y_max) - max(row.y_min, header.y_min)) / row.height >= threshold


def _header_rows(header: Optional[AnnotatedObject], rows: Sequence[BBox], threshold: float) -> int:
    """Rows covered by the header object; rows above the first covered one join, and the header stops at the first gap."""
    if header is None:
        return 0
    candidates = [i for i, r in enumerate(rows) if _in_header(r, header.bbox, threshold)]
    if not candidates:
        return 0
    nums = set(range(candidates[0])) | set(candidates)
    h = 0
    while h in nums:
        h += 1
    return h


class AssemblyReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    suppressed: Tuple[AnnotatedObject, ...] = ()
    violations: Tuple[str, ...] = ()


def assemble(objects: Sequence[AnnotatedObject], tokens: TokenSequence,
             thresholds: AssemblyThresholds = AssemblyThresholds()) -> Tuple[TableAnnotation, AssemblyReport]:
    res = resolve(objects, thresholds)
    if res.table is None:
        raise NoTableObject("no table object among the detections")
    if not res.rows or not res.columns:
        raise DegenerateStructure(f"{len(res.rows)} row(s) and {len(res.columns)} column(s) after conflict resolution")
    n_rows, n_cols = len(res.rows), len(res.columns)
    h = _header_rows(res.header, res.rows, thresholds.child_overlap)

    spans: List[Tuple[Span, bool]] = [(span, o.category == ObjectCategory.PROJECTED_ROW_HEADER) for o, span in res.cells]
    covered = {(r, c) for (r0, r1, c0, c1), _ in spans for r in range(r0, r1 + 1) for c in range(c0, c1 + 1)}
    spans += [((r, r, c, c), False) for r in range(n_rows) for c in range(n_cols) if (r, c) not in covered]
    spans.sort(key=lambda s: (s[0][0], s[0][2]))

    cells = []
    for (r0, r1, c0, c1), prh in spans:
        cells.append(Cell(row_start=r0, row_end=r1, col_start=c0, col_end=c1,
                          is_column_header=r1 < h, is_projected_row_header=prh and r0 >= h))
    cells = [c.evolve(grid_box=grid_box(c, res.rows, res.columns)) for c in cells]
    table = TableAnnotation(n_rows=n_rows, n_cols=n_cols, cells=tuple(cells), rows=tuple(res.rows),
                            columns=tuple(res.columns), table_box=res.table.bbox,
                            rotated=res.table.category == ObjectCategory.TABLE_ROTATED)

    held: Dict[int, List] = {}
    for tok, ci in zip(tokens.tokens, assign_tokens(table, tokens, thresholds.token_overlap)):
        if ci is not None:
            held.setdefault(ci, []).append(tok)
    sep = "" if tokens.granularity == "char" else " "
    filled = []
    for i, cell in enumerate(table.cells):
        toks = held.get(i, [])
        text = sep.join(t.text for t in toks)
        if is_blank(text):
            filled.append(cell)
            continue
        boxes = [t.bbox for t in toks if not is_blank(t.text)]
        filled.append(cell.evolve(text=text.strip(), text_box=BBox.union_all(boxes)))
    table = table.evolve(cells=tuple(filled))

    for o in res.suppressed:
        metrics.objects_suppressed.labels(category=o.category.value).inc()
    if res.suppressed:
        log.warning("suppressed %d conflicting object(s)", len(res.suppressed))
    violations = tuple(f"{v.kind}: {v.detail}" for v in validate_canonical(table))
    return table, AssemblyReport(suppressed=tuple(sorted(res.suppressed, key=_order)), violations=violations)


def objects_to_table(objects: Sequence[AnnotatedObject], tokens: TokenSequence,
                     thresholds: AssemblyThresholds = AssemblyThresholds()) -> TableAnnotation:
    return assemble(objects, tokens, thresholds)[0]


class AssembleStage(BaseStage):
    def run(self, item: TableItem) -> TableItem:
        thresholds = AssemblyThresholds(
            child_overlap=float(self.config.get("child_overlap", 0.5)),
            span_coverage_min=float(self.config.get("span_coverage_min", 0.25)),
            token_overlap=float(self.config.get("token_overlap", 0.5)),
        )
        item.table, report = assemble(item.objects, item.tokens or TokenSequence(), thresholds)
        item.reports.append((self.name, report))
        return item
