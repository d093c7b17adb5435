"""Header inference, projected-row-header labeling and the merges that undo oversegmentation."""
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from pydantic import BaseModel, ConfigDict

from ..core import metrics
from ..core.errors import TooFewRows
from ..model.grid import with_grid_boxes
from ..model.types import BBox, Cell, TableAnnotation, is_blank
from .base import BaseStage, TableItem

log = logging.getLogger("tabcanon.canon")

# rows skipped at the top of every table when surveying for projected row headers
SURVEY_SKIP_ROWS = 4
SURVEY_MIN_ROWS = 5


@dataclass(eq=False)
class _Slot:
    """Mutable working copy of a cell."""
    row_start: int
    row_end: int
    col_start: int
    col_end: int
    text: str = ""
    is_column_header: bool = False
    is_projected_row_header: bool = False
    is_row_header: bool = False
    text_box: Optional[BBox] = None
    merges: int = 0

    @classmethod
    def from_cell(cls, cell: Cell) -> "_Slot":
        return cls(cell.row_start, cell.row_end, cell.col_start, cell.col_end, cell.text,
                   cell.is_column_header, cell.is_projected_row_header, cell.is_row_header, cell.text_box)

    @property
    def blank(self) -> bool:
        return is_blank(self.text)

    @property
    def spanning(self) -> bool:
        return self.row_end > self.row_start or self.col_end > self.col_start

    @property
    def size(self) -> int:
        return (self.row_end - self.row_start + 1) * (self.col_end - self.col_start + 1)

    def to_cell(self) -> Cell:
        return Cell(row_start=self.row_start, row_end=self.row_end, col_start=self.col_start, col_end=self.col_end,
                    text=self.text, is_column_header=self.is_column_header,
                    is_projected_row_header=self.is_projected_row_header, is_row_header=self.is_row_header,
                    text_box=None if self.blank else self.text_box)


def _key(c) -> tuple:
    return (c.row_start, c.row_end, c.col_start, c.col_end, c.text,
            c.is_column_header, c.is_projected_row_header, c.is_row_header)


class _Workspace:
    def __init__(self, table: TableAnnotation):
        self.n_rows, self.n_cols = table.n_rows, table.n_cols
        self.grid: List[List[Optional[_Slot]]] = [[None] * self.n_cols for _ in range(self.n_rows)]
        self.slots: List[_Slot] = []
        for cell in table.cells:
            self._place(_Slot.from_cell(cell))

    def _place(self, slot: _Slot):
        self.slots.append(slot)
        for r in range(slot.row_start, slot.row_end + 1):
            for c in range(slot.col_start, slot.col_end + 1):
                self.grid[r][c] = slot

    def ordered(self) -> List[_Slot]:
        return sorted(self.slots, key=lambda s: (s.row_start, s.col_start))

    def in_row(self, r: int, c0: int = 0, c1: Optional[int] = None) -> List[_Slot]:
        c1 = self.n_cols - 1 if c1 is None else c1
        out: List[_Slot] = []
        for c in range(c0, c1 + 1):
            s = self.grid[r][c]
            if not out or out[-1] is not s:
                out.append(s)
        return out

    def in_col(self, c: int, r0: int, r1: int) -> List[_Slot]:
        out: List[_Slot] = []
        for r in range(r0, r1 + 1):
            s = self.grid[r][c]
            if not out or out[-1] is not s:
                out.append(s)
        return out

    def split(self, slot: _Slot):
        self.slots.remove(slot)
        for r in range(slot.row_start, slot.row_end + 1):
            for c in range(slot.col_start, slot.col_end + 1):
                self._place(_Slot(r, r, c, c, "", slot.is_column_header, False, slot.is_row_header))

    def merge(self, group: Sequence[_Slot]) -> Optional[_Slot]:
        """Replace ``group`` by one cell; None when the group does not tile a rectangle."""
        group = list({id(s): s for s in group}.values())
        if len(group) < 2:
            return None
        r0, r1 = min(s.row_start for s in group), max(s.row_end for s in group)
        c0, c1 = min(s.col_start for s in group), max(s.col_end for s in group)
        if sum(s.size for s in group) != (r1 - r0 + 1) * (c1 - c0 + 1):
            return None
        group.sort(key=lambda s: (s.row_start, s.col_start))
        boxes = [s.text_box for s in group if s.text_box is not None and not s.blank]
        fragments = [s.text for s in group if not s.blank]
        merged = _Slot(
            r0, r1, c0, c1,
            text=fragments[0] if len(fragments) == 1 else " ".join(f.strip() for f in fragments),
            is_column_header=any(s.is_column_header for s in group),
            is_projected_row_header=any(s.is_projected_row_header for s in group),
            is_row_header=any(s.is_row_header for s in group),
            text_box=BBox.union_all(boxes) if boxes else None,
            merges=sum(s.merges for s in group) + len(group) - 1,
        )
        for s in group:
            self.slots.remove(s)
        self._place(merged)
        log.debug("merged %d cells into %s", len(group), (r0, r1, c0, c1))
        return merged


def _is_prh_row(in_row: Sequence, r: int, n_cols: int) -> bool:
    if n_cols < 2:
        return False
    filled = [c for c in in_row if not is_blank(c.text)]
    if len(filled) != 1:
        return False
    cell = filled[0]
    return cell.col_start == 0 and cell.row_start == cell.row_end == r


class CanonReport(BaseModel):
    """What canonicalization did to one table.

    The counters cover merges, header growth, projected row headers, blank splits and
    row-header flags. ``changed`` compares every cell before and after, so it is also
    true for edits no counter tracks, such as a stale projected-row-header flag being
    cleared; it can be true while every counter is zero.
    """
    model_config = ConfigDict(frozen=True)

    merges_performed: int = 0
    header_rows_added: int = 0
    prh_rows: Tuple[int, ...] = ()
    prh_labels_added: int = 0
    blank_cells_split: int = 0
    row_header_cells_added: int = 0
    uncanonicalizable: bool = False
    changed: bool = False


def _anchored(ws: _Workspace, col: int, h: int) -> bool:
    above = ws.in_col(col, 0, h - 1)
    if all(s.blank for s in above):
        return True
    return any(not s.blank and s.col_start == s.col_end == col and s.row_end < h for s in above)


def _close(ws: _Workspace, h: int) -> int:
    """Grow ``h`` until no cell crosses the header boundary."""
    while h < ws.n_rows:
        crossing = [s.row_end for s in ws.slots if s.row_start < h <= s.row_end]
        if not crossing:
            break
        h = max(crossing) + 1
    return h


def _infer_header(ws: _Workspace, h0: int) -> Tuple[int, bool]:
    h = h0
    if h == 0 and ws.grid[0][0].blank:
        h = 1
    if h == 0:
        return 0, False
    h = _close(ws, h)
    while h < ws.n_rows and not all(_anchored(ws, j, h) for j in range(ws.n_cols)):
        h = _close(ws, h + 1)
    if h >= ws.n_rows and h > h0:
        return h0, True
    return h, False


def _stacked_same_span(ws: _Workspace, x: _Slot, h: int) -> Optional[List[_Slot]]:
    if x.row_end + 1 >= h:
        return None
    below = ws.in_row(x.row_end + 1, x.col_start, x.col_end)
    if len(below) == 1 and below[0].is_column_header and \
            (below[0].col_start, below[0].col_end) == (x.col_start, x.col_end):
        return [x, below[0]]
    return None


def _blank_below(ws: _Workspace, x: _Slot, h: int) -> Optional[List[_Slot]]:
    if x.row_end + 1 >= h:
        return None
    below = ws.in_row(x.row_end + 1, x.col_start, x.col_end)
    if all(s.blank and s.is_column_header for s in below):
        return [x] + below
    return None


def _blank_above(ws: _Workspace, x: _Slot, h: int) -> Optional[List[_Slot]]:
    if x.row_start == 0:
        return None
    above = ws.in_row(x.row_start - 1, x.col_start, x.col_end)
    if all(s.blank for s in above):
        return [x] + above
    return None


def _merge_header(ws: _Workspace, h: int):
    rules = (_stacked_same_span, _blank_below, _blank_above)
    progress = True
    while progress:
        progress = False
        for rule in rules:
            for x in ws.ordered():
                if not x.is_column_header:
                    continue
                group = rule(ws, x, h)
                if group and ws.merge(group):
                    progress = True
                    break
            if progress:
                break


def _merge_row_header(ws: _Workspace, h: int, prh_rows: Set[int]):
    progress = True
    while progress:
        progress = False
        for x in ws.ordered():
            if not x.is_row_header or x.row_start < h or x.is_projected_row_header:
                continue
            r = x.row_end + 1
            if r >= ws.n_rows or r in prh_rows:
                continue
            below = ws.in_row(r, x.col_start, x.col_end)
            if all(s.blank for s in below) and ws.merge([x] + below):
                progress = True
                break


def canonicalize(table: TableAnnotation) -> Tuple[TableAnnotation, CanonReport]:
    """Rewrite an oversegmented annotation into its canonical form."""
    table.occupancy()
    if table.n_rows == 0 or table.n_cols == 0:
        return table, CanonReport()
    ws = _Workspace(table)
    input_keys = sorted(_key(c) for c in table.cells)
    input_prh_rows = {c.row_start for c in table.cells if c.is_projected_row_header}

    # blank spanning cells become blank grid cells
    split_spans = []
    for s in [s for s in ws.slots if s.blank and s.spanning]:
        split_spans.append((s.row_start, s.row_end, s.col_start, s.col_end))
        ws.split(s)

    h0 = table.header_rows
    h, uncanonicalizable = _infer_header(ws, h0)
    if uncanonicalizable:
        log.warning("column header would absorb every row; header left at %d row(s)", h0)
    for s in ws.slots:
        if s.row_end < h:
            s.is_column_header = True

    prh_rows: List[int] = []
    for s in ws.slots:
        s.is_projected_row_header = False
    for r in range(h, ws.n_rows):
        in_row = ws.in_row(r)
        if _is_prh_row(in_row, r, ws.n_cols):
            prh_rows.append(r)
            next(s for s in in_row if not s.blank).is_projected_row_header = True
    prh_set = set(prh_rows)

    first_col = [s for s in ws.in_col(0, h, ws.n_rows - 1) if s.row_start >= h and s.row_start not in prh_set] \
        if h < ws.n_rows else []
    row_header_added = 0
    if any(s.spanning or s.blank for s in first_col):
        for s in first_col:
            if not s.is_row_header:
                s.is_row_header = True
                row_header_added += 1

    _merge_header(ws, h)
    for r in prh_rows:
        merged = ws.merge(ws.in_row(r))
        if merged is not None:
            merged.is_projected_row_header = True
    _merge_row_header(ws, h, prh_set)

    out = table.evolve(cells=tuple(s.to_cell() for s in ws.ordered()))
    if out.rows is not None and out.columns is not None:
        out = out.evolve(cells=with_grid_boxes(out))

    existing = set(input_keys)
    output_keys = {_key(s): s for s in ws.slots}
    final_spans = {(s.row_start, s.row_end, s.col_start, s.col_end) for s in ws.slots if s.blank}
    report = CanonReport(
        merges_performed=sum(s.merges for k, s in output_keys.items() if k not in existing),
        header_rows_added=max(h - h0, 0),
        prh_rows=tuple(prh_rows),
        prh_labels_added=sum(1 for r in prh_rows if r not in input_prh_rows),
        blank_cells_split=sum(1 for span in split_spans if span not in final_spans),
        row_header_cells_added=row_header_added,
        uncanonicalizable=uncanonicalizable,
        changed=sorted(output_keys) != input_keys,
    )
    return out, report


def detect_prh(table: TableAnnotation, survey_mode: bool = False) -> List[int]:
    """Rows holding a single non-blank cell that starts in the first column.

    Survey mode ignores header flags, skips the top rows and drops PRHs that end the table.
    """
    if survey_mode:
        if table.n_rows < SURVEY_MIN_ROWS:
            raise TooFewRows(f"table has {table.n_rows} rows; the survey needs {SURVEY_MIN_ROWS}")
        start = SURVEY_SKIP_ROWS
    else:
        start = table.header_rows
    occupancy = table.occupancy()
    rows = []
    for r in range(start, table.n_rows):
        in_row = [table.cells[i] for i in dict.fromkeys(occupancy[(r, c)] for c in range(table.n_cols))]
        if _is_prh_row(in_row, r, table.n_cols):
            rows.append(r)
    if survey_mode:
        last = table.n_rows - 1
        while rows and rows[-1] == last:
            rows.pop()
            last -= 1
    return rows


@dataclass
class SurveyCounts:
    investigated: int = 0
    with_prh: int = 0
    oversegmented: int = 0

    @property
    def pct_of_prh(self) -> float:
        return 100.0 * self.oversegmented / self.with_prh if self.with_prh else 0.0

    @property
    def pct_of_investigated(self) -> float:
        return 100.0 * self.oversegmented / self.investigated if self.investigated else 0.0

    def __add__(self, other: "SurveyCounts") -> "SurveyCounts":
        return SurveyCounts(self.investigated + other.investigated, self.with_prh + other.with_prh,
                            self.oversegmented + other.oversegmented)

    def as_dict(self) -> Dict[str, float]:
        return {
            "investigated": self.investigated,
            "with_prh": self.with_prh,
            "oversegmented": self.oversegmented,
            "pct_of_prh": round(self.pct_of_prh, 2),
            "pct_of_investigated": round(self.pct_of_investigated, 2),
        }


def survey_table(table: TableAnnotation) -> SurveyCounts:
    try:
        rows = detect_prh(table, survey_mode=True)
    except TooFewRows:
        return SurveyCounts()
    occupancy = table.occupancy()
    split = any(table.cells[occupancy[(r, c)]].blank for r in rows for c in range(table.n_cols))
    return SurveyCounts(1, int(bool(rows)), int(split))


def survey_oversegmentation(tables: Iterable[TableAnnotation]) -> SurveyCounts:
    total = SurveyCounts()
    for t in tables:
        total = total + survey_table(t)
    return total


class CanonicalizeStage(BaseStage):
    def run(self, item: TableItem) -> TableItem:
        item.table, report = canonicalize(item.table)
        if report.merges_performed:
            metrics.canon_merges.inc(report.merges_performed)
        if report.uncanonicalizable:
            item.reject("uncanonicalizable")
        item.reports.append((self.name, report))
        return item
