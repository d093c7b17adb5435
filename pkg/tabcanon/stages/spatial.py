"""Completion, dilation and tightening of table geometry, plus object emission.

Completion gives row m the union of the text boxes of every cell that starts or
ends at m, columns likewise. A non-blank cell spanning rows therefore lands in
each row it starts or ends in, and those rows overlap; QC rejects such tables.

Tightening wraps each row around the tokens it holds and so uses a split rule:
the near edge of index m comes from the cells that start at m, the far edge
from the cells that end at m. When only one side has cells, those cells supply
both edges; when the two edges cross, the union of both sides is used.
"""
import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from ..core.errors import MissingBoxes, NonMonotonicRows, UndefinedColumn, UndefinedRow
from ..model.grid import grid_box
from ..model.types import AnnotatedObject, BBox, Cell, ObjectCategory, TableAnnotation, TokenSequence
from .base import BaseStage, TableItem

Extent = Tuple[float, float]

log = logging.getLogger("tabcanon.spatial")


def box_array(boxes: Sequence[BBox]) -> np.ndarray:
    if not boxes:
        return np.zeros((0, 4))
    return np.array([b.as_list() for b in boxes], dtype=float)


def overlap_fractions(children: Sequence[BBox], parents: Sequence[BBox]) -> np.ndarray:
    """Matrix of the fraction of each child's area inside each parent.

    Zero-area children count as fully inside a parent that contains them.
    """
    a, b = box_array(children), box_array(parents)
    if not len(a) or not len(b):
        return np.zeros((len(a), len(b)))
    w = np.minimum(a[:, None, 2], b[None, :, 2]) - np.maximum(a[:, None, 0], b[None, :, 0])
    h = np.minimum(a[:, None, 3], b[None, :, 3]) - np.maximum(a[:, None, 1], b[None, :, 1])
    inter = np.where((w > 0) & (h > 0), w * h, 0.0)
    area = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    contained = ((b[None, :, 0] <= a[:, None, 0]) & (b[None, :, 1] <= a[:, None, 1])
                 & (a[:, None, 2] <= b[None, :, 2]) & (a[:, None, 3] <= b[None, :, 3]))
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = inter / area[:, None]
    return np.where(area[:, None] > 0, frac, contained.astype(float))


def _by_index(pairs: Sequence[Tuple[Cell, BBox]], n: int, axis: str) -> Tuple[List[List[Extent]], List[List[Extent]]]:
    starts: List[List[Extent]] = [[] for _ in range(n)]
    ends: List[List[Extent]] = [[] for _ in range(n)]
    for cell, box in pairs:
        if axis == "row":
            s, e, ext = cell.row_start, cell.row_end, (box.y_min, box.y_max)
        else:
            s, e, ext = cell.col_start, cell.col_end, (box.x_min, box.x_max)
        starts[s].append(ext)
        ends[e].append(ext)
    return starts, ends


def _union_extents(pairs: Sequence[Tuple[Cell, BBox]], n: int, axis: str) -> List[Optional[Extent]]:
    out: List[Optional[Extent]] = []
    for near, far in zip(*_by_index(pairs, n, axis)):
        both = near + far
        out.append((min(x[0] for x in both), max(x[1] for x in both)) if both else None)
    return out


def _split_extents(pairs: Sequence[Tuple[Cell, BBox]], n: int, axis: str) -> List[Optional[Extent]]:
    out: List[Optional[Extent]] = []
    for near, far in zip(*_by_index(pairs, n, axis)):
        if not near and not far:
            out.append(None)
            continue
        if near and far:
            lo, hi = min(x[0] for x in near), max(x[1] for x in far)
            if lo > hi:
                lo, hi = min(x[0] for x in near + far), max(x[1] for x in near + far)
        else:
            side = near or far
            lo, hi = min(x[0] for x in side), max(x[1] for x in side)
        out.append((lo, hi))
    return out


def _with_geometry(table: TableAnnotation, rows: Sequence[BBox], columns: Sequence[BBox],
                   table_box: BBox) -> TableAnnotation:
    cells = tuple(c.evolve(grid_box=grid_box(c, rows, columns)) for c in table.cells)
    return table.evolve(cells=cells, rows=tuple(rows), columns=tuple(columns), table_box=table_box)


def complete(table: TableAnnotation) -> TableAnnotation:
    pairs = [(c, c.text_box) for c in table.cells if c.text_box is not None]
    if not pairs:
        raise MissingBoxes("no cell has a text box")
    unboxed = [c.span for c in table.cells if not c.blank and c.text_box is None]
    if unboxed:
        log.warning("%d non-blank cell(s) without a text box left out of completion: %s", len(unboxed), unboxed)
    table_box = BBox.union_all(b for _, b in pairs)
    row_ext = _union_extents(pairs, table.n_rows, "row")
    col_ext = _union_extents(pairs, table.n_cols, "column")
    undefined = [m for m, e in enumerate(row_ext) if e is None]
    if undefined:
        raise UndefinedRow(undefined)
    undefined = [n for n, e in enumerate(col_ext) if e is None]
    if undefined:
        raise UndefinedColumn(undefined)
    rows = [BBox.of(table_box.x_min, lo, table_box.x_max, hi) for lo, hi in row_ext]
    columns = [BBox.of(lo, table_box.y_min, hi, table_box.y_max) for lo, hi in col_ext]
    return _with_geometry(table, rows, columns, table_box)


def _require_boxes(table: TableAnnotation):
    if not table.has_boxes:
        raise MissingBoxes("table has no row, column and table boxes; run complete first")


def _dilate_extents(extents: Sequence[Extent], axis: str) -> List[Extent]:
    for i in range(len(extents) - 1):
        (lo0, hi0), (lo1, hi1) = extents[i], extents[i + 1]
        if lo0 > lo1 or hi0 > hi1 or (lo0, hi0) == (lo1, hi1):
            raise NonMonotonicRows("rows" if axis == "row" else "columns", i)
    cuts = [(extents[i][1] + extents[i + 1][0]) / 2 for i in range(len(extents) - 1)]
    out = []
    for i, (lo, hi) in enumerate(extents):
        out.append((cuts[i - 1] if i > 0 else lo, cuts[i] if i < len(cuts) else hi))
    return out


def dilate_table(table: TableAnnotation) -> TableAnnotation:
    """Move facing row (and column) edges to their midpoint so rows and columns tile the table."""
    _require_boxes(table)
    ys = _dilate_extents([(r.y_min, r.y_max) for r in table.rows], "row")
    xs = _dilate_extents([(c.x_min, c.x_max) for c in table.columns], "column")
    x0, x1 = (xs[0][0], xs[-1][1]) if xs else (table.table_box.x_min, table.table_box.x_max)
    y0, y1 = (ys[0][0], ys[-1][1]) if ys else (table.table_box.y_min, table.table_box.y_max)
    rows = [BBox.of(x0, lo, x1, hi) for lo, hi in ys]
    columns = [BBox.of(lo, y0, hi, y1) for lo, hi in xs]
    return _with_geometry(table, rows, columns, BBox.of(x0, y0, x1, y1))


def table_objects(table: TableAnnotation) -> List[AnnotatedObject]:
    """Structure objects of a table with row and column boxes."""
    _require_boxes(table)
    rows, columns = table.rows, table.columns
    objs = [AnnotatedObject(category=ObjectCategory.TABLE, bbox=table.table_box)]
    objs += [AnnotatedObject(category=ObjectCategory.ROW, bbox=r) for r in rows]
    objs += [AnnotatedObject(category=ObjectCategory.COLUMN, bbox=c) for c in columns]
    h = table.header_rows
    if h:
        objs.append(AnnotatedObject(category=ObjectCategory.COLUMN_HEADER, bbox=BBox.union_all(rows[:h])))
    prh: Dict[int, List[BBox]] = {}
    for c in table.sorted_cells():
        if c.is_projected_row_header:
            prh.setdefault(c.row_start, []).append(grid_box(c, rows, columns))
    for r in sorted(prh):
        objs.append(AnnotatedObject(category=ObjectCategory.PROJECTED_ROW_HEADER, bbox=BBox.union_all(prh[r])))
    for c in table.sorted_cells():
        if c.spanning and not c.is_projected_row_header:
            objs.append(AnnotatedObject(category=ObjectCategory.SPANNING_CELL, bbox=grid_box(c, rows, columns)))
    return objs


def dilate(table: TableAnnotation) -> List[AnnotatedObject]:
    return table_objects(dilate_table(table))


def detection_object(table: TableAnnotation) -> AnnotatedObject:
    _require_boxes(table)
    category = ObjectCategory.TABLE_ROTATED if table.rotated else ObjectCategory.TABLE
    return AnnotatedObject(category=category, bbox=table.table_box)


def cell_boxes(table: TableAnnotation) -> List[BBox]:
    """Grid box of every cell, from rows and columns when present."""
    if table.rows is not None and table.columns is not None:
        return [grid_box(c, table.rows, table.columns) for c in table.cells]
    if any(c.grid_box is None for c in table.cells):
        raise MissingBoxes("cells have no grid boxes")
    return [c.grid_box for c in table.cells]


def assign_tokens(table: TableAnnotation, tokens: TokenSequence, min_overlap: float = 0.5) -> List[Optional[int]]:
    """Index of the cell holding the largest share of each token, if that share reaches ``min_overlap``."""
    if not tokens.tokens:
        return []
    frac = overlap_fractions([t.bbox for t in tokens.tokens], cell_boxes(table))
    if not frac.shape[1]:
        return [None] * len(tokens)
    best = frac.argmax(axis=1)  # first maximum, so ties go to the lower cell index
    share = frac[np.arange(len(best)), best]
    return [int(b) if s >= min_overlap and s > 0 else None for b, s in zip(best, share)]


class TightenReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    empty_rows: Tuple[int, ...] = ()
    empty_columns: Tuple[int, ...] = ()
    unassigned_tokens: int = 0


def tighten(table: TableAnnotation, tokens: TokenSequence,
            min_overlap: float = 0.5) -> Tuple[TableAnnotation, TightenReport]:
    """Shrink rows and columns to the tokens their cells hold; empty ones collapse onto their midline."""
    _require_boxes(table)
    assignment = assign_tokens(table, tokens, min_overlap)
    held: Dict[int, List[BBox]] = {}
    for tok, ci in zip(tokens.tokens, assignment):
        if ci is not None:
            held.setdefault(ci, []).append(tok.bbox)
    pairs = [(table.cells[ci], BBox.union_all(boxes)) for ci, boxes in held.items()]
    row_ext = _split_extents(pairs, table.n_rows, "row")
    col_ext = _split_extents(pairs, table.n_cols, "column")

    ys = [e if e is not None else ((r.y_min + r.y_max) / 2,) * 2 for e, r in zip(row_ext, table.rows)]
    xs = [e if e is not None else ((c.x_min + c.x_max) / 2,) * 2 for e, c in zip(col_ext, table.columns)]
    filled_x = [e for e in col_ext if e is not None]
    filled_y = [e for e in row_ext if e is not None]
    tb = table.table_box
    x0, x1 = (min(e[0] for e in filled_x), max(e[1] for e in filled_x)) if filled_x else (tb.x_min, tb.x_max)
    y0, y1 = (min(e[0] for e in filled_y), max(e[1] for e in filled_y)) if filled_y else (tb.y_min, tb.y_max)
    rows = [BBox.of(x0, lo, x1, hi) for lo, hi in ys]
    columns = [BBox.of(lo, y0, hi, y1) for lo, hi in xs]
    report = TightenReport(
        empty_rows=tuple(m for m, e in enumerate(row_ext) if e is None),
        empty_columns=tuple(n for n, e in enumerate(col_ext) if e is None),
        unassigned_tokens=sum(1 for a in assignment if a is None),
    )
    return _with_geometry(table, rows, columns, BBox.of(x0, y0, x1, y1)), report


class CompleteStage(BaseStage):
    def run(self, item: TableItem) -> TableItem:
        item.table = complete(item.table)
        return item


class DilateStage(BaseStage):
    def run(self, item: TableItem) -> TableItem:
        item.objects = dilate(item.table)
        item.detection = detection_object(item.table)
        return item


class TightenStage(BaseStage):
    def run(self, item: TableItem) -> TableItem:
        item.table, report = tighten(item.table, item.tokens or TokenSequence(),
                                     float(self.config.get("token_overlap", 0.5)))
        if report.empty_rows or report.empty_columns:
            self.log.warning("%s: tightening left %d empty row(s) and %d empty column(s)",
                             item.name, len(report.empty_rows), len(report.empty_columns))
        item.reports.append((self.name, report))
        return item
