"""Builders shared by the test modules.

Layout convention for generated page tokens: column c starts at x = c * COL_W,
row r at y = r * ROW_H. A cell's text starts MARGIN points inside the top-left
corner of its first row and column, one point per character, TEXT_H tall.
"""
import random
from functools import lru_cache
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from tabcanon.model.grid import grid_box
from tabcanon.model.types import BBox, Cell, TableAnnotation, Token, TokenSequence

COL_W = 100.0
ROW_H = 20.0
MARGIN = 5.0
TEXT_H = 10.0

WORDS = ("alpha", "beta", "gamma", "delta", "total", "mean", "dose", "group", "n", "sd", "age", "sex", "12", "3.5")


def cell(r0: int, c0: int, text: str = "", r1: Optional[int] = None, c1: Optional[int] = None, **flags) -> Cell:
    return Cell(row_start=r0, row_end=r0 if r1 is None else r1, col_start=c0, col_end=c0 if c1 is None else c1,
                text=text, **flags)


def table(n_rows: int, n_cols: int, cells: Sequence[Cell], **kw) -> TableAnnotation:
    return TableAnnotation(n_rows=n_rows, n_cols=n_cols, cells=tuple(cells), **kw)


def grid(rows: Sequence[Sequence[str]], header_rows: int = 0) -> TableAnnotation:
    """Table of 1x1 cells; the first ``header_rows`` rows are flagged as column header."""
    cells = [cell(r, c, text, is_column_header=r < header_rows) for r, row in enumerate(rows) for c, text in enumerate(row)]
    return table(len(rows), len(rows[0]) if rows else 0, cells)


def split_header_table() -> TableAnnotation:
    """Oversegmented annotation: a split header group, a blank-padded stub and a split section row."""
    return table(6, 3, [
        cell(0, 0, "Drug", is_column_header=True), cell(0, 1, "Dose", c1=2, is_column_header=True),
        cell(1, 0, is_column_header=True), cell(1, 1, is_column_header=True), cell(1, 2, is_column_header=True),
        cell(2, 0), cell(2, 1, "mg"), cell(2, 2, "kg"),
        cell(3, 0, "Group A"), cell(3, 1), cell(3, 2),
        cell(4, 0, "Aspirin"), cell(4, 1, "10"), cell(4, 2, "0.2"),
        cell(5, 0, "Ibuprofen"), cell(5, 1, "5"), cell(5, 2, "0.1"),
    ])


# ---------------------------------------------------------------- layout

def text_chars(c: Cell, text: Optional[str] = None) -> List[Token]:
    text = c.text if text is None else text
    x = c.col_start * COL_W + MARGIN
    y = c.row_start * ROW_H + MARGIN
    return [Token(text=ch, bbox=BBox.of(x + i, y, x + i + 1, y + TEXT_H)) for i, ch in enumerate(text)]


def text_box(c: Cell) -> Optional[BBox]:
    chars = [t.bbox for t in text_chars(c) if not t.text.isspace()]
    return BBox.union_all(chars) if chars else None


def with_text_boxes(t: TableAnnotation) -> TableAnnotation:
    return t.evolve(cells=tuple(c.evolve(text_box=None if c.blank else text_box(c)) for c in t.cells))


def char_tokens(t: TableAnnotation, overrides: Optional[Dict[Tuple[int, int], str]] = None) -> TokenSequence:
    """Character tokens of every cell in reading order; ``overrides`` replaces the page text of a cell."""
    overrides = overrides or {}
    tokens: List[Token] = []
    for c in t.sorted_cells():
        tokens += text_chars(c, overrides.get((c.row_start, c.col_start)))
    return TokenSequence(granularity="char", tokens=tuple(tokens))


def word_tokens(t: TableAnnotation) -> TokenSequence:
    words: List[Token] = []
    for c in t.sorted_cells():
        chars = text_chars(c)
        run: List[Token] = []
        for ch in chars + [None]:
            if ch is None or ch.text.isspace():
                if run:
                    words.append(Token(text="".join(r.text for r in run), bbox=BBox.union_all(r.bbox for r in run)))
                run = []
            else:
                run.append(ch)
    return TokenSequence(granularity="word", tokens=tuple(words))


def layout(t: TableAnnotation) -> Tuple[TableAnnotation, TokenSequence, TokenSequence]:
    """The table with text boxes, its character tokens and its word tokens."""
    return with_text_boxes(t), char_tokens(t), word_tokens(t)


def gridded(t: TableAnnotation, pad: float = 2.0) -> TableAnnotation:
    """Text boxes plus clean rendered geometry: each row and column is its layout band shrunk by ``pad``.

    Rows and columns never overlap, so spanning tables pass QC, unlike their completion.
    """
    t = with_text_boxes(t)
    rows = tuple(BBox.of(pad, r * ROW_H + pad, t.n_cols * COL_W - pad, (r + 1) * ROW_H - pad)
                 for r in range(t.n_rows))
    columns = tuple(BBox.of(c * COL_W + pad, pad, (c + 1) * COL_W - pad, t.n_rows * ROW_H - pad)
                    for c in range(t.n_cols))
    cells = tuple(c.evolve(grid_box=grid_box(c, rows, columns)) for c in t.cells)
    return t.evolve(cells=cells, rows=rows, columns=columns,
                    table_box=BBox.of(pad, pad, t.n_cols * COL_W - pad, t.n_rows * ROW_H - pad))


def boxed_grid(n_rows: int, n_cols: int, header_rows: int = 0,
               row_boxes: Optional[Sequence[BBox]] = None) -> Tuple[TableAnnotation, TokenSequence]:
    """Table of 1x1 cells with explicit row, column and table boxes plus one word token per cell."""
    width, height = n_cols * COL_W, n_rows * ROW_H
    rows = tuple(row_boxes) if row_boxes is not None else tuple(
        BBox.of(0, r * ROW_H, width, (r + 1) * ROW_H) for r in range(n_rows))
    columns = tuple(BBox.of(c * COL_W, 0, (c + 1) * COL_W, height) for c in range(n_cols))
    t = grid([[f"r{r}c{c}" for c in range(n_cols)] for r in range(n_rows)], header_rows)
    t = t.evolve(rows=rows, columns=columns, table_box=BBox.of(0, 0, width, height))
    words = tuple(Token(text=c.text, bbox=BBox.of(c.col_start * COL_W + MARGIN, c.row_start * ROW_H + MARGIN,
                                                  c.col_start * COL_W + MARGIN + 20, c.row_start * ROW_H + MARGIN + TEXT_H))
                  for c in t.sorted_cells())
    return t, TokenSequence(granularity="word", tokens=words)


# ---------------------------------------------------------------- generators

def random_table(rng: random.Random, max_rows: int = 7, max_cols: int = 5, blank_rate: float = 0.25,
                 span_rate: float = 0.25, prh_rate: float = 0.2) -> TableAnnotation:
    """Any tileable table: header rows, row and column spans, blanks and projected row headers, split or not."""
    n_rows, n_cols = rng.randint(1, max_rows), rng.randint(1, max_cols)
    h = rng.randint(0, min(2, n_rows - 1))
    taken = set()
    cells: List[Cell] = []

    def word() -> str:
        return "" if rng.random() < blank_rate else rng.choice(WORDS)

    for r in range(n_rows):
        free_row = not any((r, c) in taken for c in range(n_cols))
        if r >= h and n_cols >= 2 and free_row and rng.random() < prh_rate:
            flagged = rng.random() < 0.5
            if rng.random() < 0.5:
                cells.append(cell(r, 0, rng.choice(WORDS), c1=n_cols - 1, is_projected_row_header=flagged))
            else:
                cells.append(cell(r, 0, rng.choice(WORDS), is_projected_row_header=flagged))
                cells += [cell(r, c) for c in range(1, n_cols)]
            taken.update((r, c) for c in range(n_cols))
            continue
        region_end = h if r < h else n_rows
        for c in range(n_cols):
            if (r, c) in taken:
                continue
            cs = 1
            if rng.random() < span_rate:
                limit = rng.randint(2, 3)
                while cs < limit and c + cs < n_cols and (r, c + cs) not in taken:
                    cs += 1
            rs = 1
            if rng.random() < span_rate and r + 1 < region_end:
                if not any((r + 1, cc) in taken for cc in range(c, c + cs)):
                    rs = 2
            span = [(rr, cc) for rr in range(r, r + rs) for cc in range(c, c + cs)]
            taken.update(span)
            cells.append(cell(r, c, word(), r1=r + rs - 1, c1=c + cs - 1, is_column_header=r + rs - 1 < h))
    return table(n_rows, n_cols, cells)


def random_layout_table(rng: random.Random) -> TableAnnotation:
    """A table that passes QC under ``gridded`` geometry; every row and column holds a one-row, one-column text cell."""
    n_cols = rng.randint(2, 4)
    cells: List[Cell] = []
    if n_cols >= 3 and rng.random() < 0.5:
        h = 2
        cells.append(cell(0, 0, "Item", r1=1, is_column_header=True))
        cells.append(cell(0, 1, "Group", c1=2, is_column_header=True))
        cells += [cell(1, c, f"sub {c}", is_column_header=True) for c in (1, 2)]
        cells += [cell(0, c, f"head {c}", r1=1, is_column_header=True) for c in range(3, n_cols)]
    else:
        h = 1
        cells += [cell(0, c, f"head {c}", is_column_header=True) for c in range(n_cols)]
    n_body = rng.randint(2, 5)
    for i in range(n_body):
        r = h + i
        last = i == n_body - 1
        if not last and i > 0 and rng.random() < 0.25:
            cells.append(cell(r, 0, f"Section {r}", c1=n_cols - 1, is_projected_row_header=True))
            continue
        c = 0
        while c < n_cols:
            if not last and c >= 1 and c + 1 < n_cols and rng.random() < 0.25:
                cells.append(cell(r, c, f"wide {r}", c1=c + 1))
                c += 2
                continue
            blank = not last and c >= 1 and rng.random() < 0.15
            cells.append(cell(r, c, "" if blank else rng.choice(WORDS)))
            c += 1
    return table(h + n_body, n_cols, cells)


def survey_corpus(rng: random.Random, n_tables: int, n_prh: int, n_split: int) -> List[TableAnnotation]:
    """Tables with an anchored one-row header; ``n_prh`` carry a section row below the skipped rows,
    ``n_split`` of them split into a text cell and blanks."""
    out = []
    for k in range(n_tables):
        n_cols, n_rows = rng.randint(2, 4), rng.randint(6, 8)
        prh_row = rng.randint(4, n_rows - 2) if k < n_prh else None
        cells = [cell(0, c, f"head {c}", is_column_header=True) for c in range(n_cols)]
        for r in range(1, n_rows):
            if r == prh_row:
                if k < n_split:
                    cells.append(cell(r, 0, "Section"))
                    cells += [cell(r, c) for c in range(1, n_cols)]
                else:
                    cells.append(cell(r, 0, "Section", c1=n_cols - 1))
                continue
            c = 0
            while c < n_cols:
                if c >= 1 and c + 1 < n_cols and rng.random() < 0.2:
                    cells.append(cell(r, c, "wide", c1=c + 1))
                    c += 2
                else:
                    cells.append(cell(r, c, rng.choice(WORDS)))
                    c += 1
        out.append(table(n_rows, n_cols, cells))
    rng.shuffle(out)
    return out


def random_matrix_table(rng: random.Random, max_rows: int = 4, max_cols: int = 4) -> TableAnnotation:
    """Small random table with jittered row and column boxes, for grid similarity checks."""
    t = random_table(rng, max_rows, max_cols, blank_rate=0.2, span_rate=0.3, prh_rate=0.0)
    t = t.evolve(cells=tuple(c.evolve(text=rng.choice(("a", "ab", "abc", "b", "bc", ""))) for c in t.cells))
    ys = np.cumsum([0.0] + [rng.uniform(5, 15) for _ in range(t.n_rows)])
    xs = np.cumsum([0.0] + [rng.uniform(20, 60) for _ in range(t.n_cols)])
    dx, dy = rng.uniform(0, 5), rng.uniform(0, 5)
    rows = tuple(BBox.of(dx, dy + ys[r], dx + xs[-1], dy + ys[r + 1]) for r in range(t.n_rows))
    columns = tuple(BBox.of(dx + xs[c], dy, dx + xs[c + 1], dy + ys[-1]) for c in range(t.n_cols))
    return t.evolve(rows=rows, columns=columns, table_box=BBox.of(dx, dy, dx + xs[-1], dy + ys[-1]))


# ---------------------------------------------------------------- corruption

def oversegment(t: TableAnnotation) -> TableAnnotation:
    """Split every spanning cell into its text in the top-left position and blanks elsewhere."""
    cells: List[Cell] = []
    for c in t.cells:
        if not c.spanning:
            cells.append(c)
            continue
        for r, col in c.positions():
            top_left = (r, col) == (c.row_start, c.col_start)
            cells.append(cell(r, col, c.text if top_left else "", is_column_header=c.is_column_header,
                              is_projected_row_header=c.is_projected_row_header and top_left,
                              is_row_header=c.is_row_header))
    return t.evolve(cells=tuple(cells), rows=None, columns=None, table_box=None)


def split_cell(t: TableAnnotation, position: Tuple[int, int]) -> TableAnnotation:
    """``oversegment`` restricted to the one cell whose top-left corner is ``position``."""
    target = next(c for c in t.cells if (c.row_start, c.col_start) == position)
    rest = t.evolve(cells=tuple(c for c in t.cells if c is not target))
    pieces = oversegment(t.evolve(cells=(target,)))
    return rest.evolve(cells=rest.cells + pieces.cells, rows=None, columns=None, table_box=None)


def merge_right(t: TableAnnotation, position: Tuple[int, int]) -> TableAnnotation:
    """Merge the 1x1 cell at ``position`` with its right neighbour, joining their texts."""
    r, c = position
    pair = [x for x in t.cells if x.row_start == r and x.col_start in (c, c + 1)]
    text = " ".join(x.text for x in sorted(pair, key=lambda x: x.col_start) if x.text)
    kept = tuple(x for x in t.cells if x not in pair)
    return t.evolve(cells=kept + (cell(r, c, text, c1=c + 1, is_column_header=pair[0].is_column_header),),
                    rows=None, columns=None, table_box=None)


def retext(t: TableAnnotation, position: Tuple[int, int], text: str) -> TableAnnotation:
    return t.evolve(cells=tuple(c.evolve(text=text) if (c.row_start, c.col_start) == position else c
                                for c in t.cells))


def jitter(t: TableAnnotation, dx: float, dy: float, factor: float = 1.0) -> TableAnnotation:
    """Translate then scale every box of the table."""
    def move(b: Optional[BBox]) -> Optional[BBox]:
        return None if b is None else b.translate(dx, dy).scale(factor)

    return t.evolve(
        cells=tuple(c.evolve(text_box=move(c.text_box), grid_box=move(c.grid_box)) for c in t.cells),
        rows=tuple(move(b) for b in t.rows) if t.rows is not None else None,
        columns=tuple(move(b) for b in t.columns) if t.columns is not None else None,
        table_box=move(t.table_box),
    )


# ---------------------------------------------------------------- oracles

def _best_columns(W: np.ndarray) -> float:
    m, n = W.shape

    @lru_cache(maxsize=None)
    def best(i: int, j: int) -> float:
        if i == m or j == n:
            return 0.0
        return max(best(i + 1, j), best(i, j + 1), W[i, j] + best(i + 1, j + 1))

    return best(0, 0)


def brute_force_total(S: np.ndarray) -> float:
    """Largest selection total, trying every pair of equal-size increasing row subsets."""
    ma, na, mb, nb = S.shape
    top = 0.0
    for k in range(min(ma, mb) + 1):
        for ra in combinations(range(ma), k):
            for rb in combinations(range(mb), k):
                W = np.zeros((na, nb))
                for i, j in zip(ra, rb):
                    W += S[i, :, j, :]
                top = max(top, _best_columns(W))
    return top
