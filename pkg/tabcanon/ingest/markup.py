"""Table markup (the HTML table subset) to TableAnnotation."""
import logging, re
from dataclasses import dataclass
from typing import Dict, List, Tuple

import lxml.html
from lxml import etree

from ..core.errors import MalformedMarkup, RaggedGrid
from ..model.types import Cell, TableAnnotation, normalize_text

log = logging.getLogger("tabcanon.ingest")

_OPEN_TABLE = re.compile(r"<table[\s>/]", re.IGNORECASE)
_CLOSE_TABLE = re.compile(r"</table\s*>", re.IGNORECASE)

SECTION_TAGS = ("thead", "tbody", "tfoot")
IGNORED_TAGS = ("caption", "colgroup", "col")
CELL_TAGS = ("td", "th")


@dataclass
class _Placed:
    row: int
    col: int
    rowspan: int
    colspan: int
    text: str
    is_th: bool
    in_thead: bool


def _span(el, attr: str) -> int:
    raw = el.get(attr)
    if raw is None or not raw.strip():
        return 1
    try:
        value = int(raw.strip())
    except ValueError:
        raise MalformedMarkup(f"bad {attr} value {raw!r}")
    # rowspan=0 / colspan=0 and negatives count as a single row or column
    return max(value, 1)


def _cell_text(el) -> str:
    for br in el.iter("br"):
        br.tail = " " + (br.tail or "")
    return normalize_text(el.text_content())


def _rows(table) -> List[Tuple[object, bool]]:
    rows = []
    for child in table:
        if not isinstance(child.tag, str):
            continue  # comments, processing instructions
        tag = child.tag.lower()
        if tag == "tr":
            rows.append((child, False))
        elif tag in SECTION_TAGS:
            for tr in child:
                if not isinstance(tr.tag, str):
                    continue
                if tr.tag.lower() != "tr":
                    raise MalformedMarkup(f"unexpected <{tr.tag}> inside <{tag}>")
                rows.append((tr, tag == "thead"))
        elif tag not in IGNORED_TAGS:
            raise MalformedMarkup(f"unexpected <{child.tag}> inside <table>")
    return rows


def parse_markup(markup: str) -> TableAnnotation:
    if not markup or not markup.strip():
        raise MalformedMarkup("empty markup")
    opened, closed = len(_OPEN_TABLE.findall(markup)), len(_CLOSE_TABLE.findall(markup))
    if opened == 0 and closed == 0:
        markup = f"<table>{markup}</table>"
    elif opened != closed:
        raise MalformedMarkup(f"{opened} <table> tags but {closed} </table> tags")
    try:
        root = lxml.html.fragment_fromstring(markup, create_parent="div")
    except (etree.ParserError, ValueError) as e:
        raise MalformedMarkup(f"unparseable markup: {e}") from e

    tables = list(root.iter("table"))
    if not tables:
        raise MalformedMarkup("no <table> element")
    if len(tables) > 1:
        if any(t is not tables[0] for t in tables[0].iter("table")):
            raise MalformedMarkup("nested tables are not supported")
        raise MalformedMarkup(f"expected one table, found {len(tables)}")

    rows = _rows(tables[0])
    n_rows = len(rows)
    occupied: Dict[Tuple[int, int], int] = {}
    placed: List[_Placed] = []
    for r, (tr, in_thead) in enumerate(rows):
        c = 0
        for td in tr:
            if not isinstance(td.tag, str):
                continue
            if td.tag.lower() not in CELL_TAGS:
                raise MalformedMarkup(f"unexpected <{td.tag}> inside <tr> {r}")
            while (r, c) in occupied:
                c += 1
            rowspan, colspan = _span(td, "rowspan"), _span(td, "colspan")
            if r + rowspan > n_rows:
                log.warning("rowspan of cell at (%d, %d) runs past the last row; clipped", r, c)
                rowspan = n_rows - r
            cell = _Placed(r, c, rowspan, colspan, _cell_text(td), td.tag.lower() == "th", in_thead)
            for rr in range(r, r + rowspan):
                for cc in range(c, c + colspan):
                    if (rr, cc) in occupied:
                        raise MalformedMarkup(f"cells overlap at ({rr}, {cc})")
                    occupied[(rr, cc)] = len(placed)
            placed.append(cell)
            c += colspan

    n_cols = max((cc + 1 for _, cc in occupied), default=0)
    widths = [sum(1 for c in range(n_cols) if (r, c) in occupied) for r in range(n_rows)]
    if any(w != n_cols for w in widths):
        raise RaggedGrid(widths)

    # leading rows that are thead rows or made only of th cells form the column header
    header_rows = 0
    for r, (_, in_thead) in enumerate(rows):
        origins = [p for p in placed if p.row == r]
        if in_thead or (origins and all(p.is_th for p in origins)):
            header_rows = r + 1
        else:
            break

    cells = []
    for p in placed:
        r1, c1 = p.row + p.rowspan - 1, p.col + p.colspan - 1
        in_header = r1 < header_rows
        cells.append(Cell(
            row_start=p.row, row_end=r1, col_start=p.col, col_end=c1, text=p.text,
            is_column_header=in_header,
            is_row_header=p.is_th and p.row >= header_rows,
        ))
    return TableAnnotation(n_rows=n_rows, n_cols=n_cols, cells=tuple(cells))
