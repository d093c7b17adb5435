"""Grid occupancy, header trees and canonical-form checks."""
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Sequence, Tuple

from ..core.errors import GapError, NotNestedError, OutOfBoundsError, OverlapError
from .types import BBox, Cell, TableAnnotation

Occupancy = Dict[Tuple[int, int], int]

STACKED_SAME_SPAN = "StackedSameSpan"
SINGLE_CHILD = "SingleChild"
NON_UNIQUE_LEAF = "NonUniqueLeaf"
SPLIT_PRH = "SplitPRH"
NOT_NESTED = "NotNested"

# properties canonicalization guarantees
ENFORCED_KINDS = (STACKED_SAME_SPAN, SINGLE_CHILD, SPLIT_PRH)


def build_grid(cells: Sequence[Cell], n_rows: int, n_cols: int) -> Occupancy:
    occupancy: Occupancy = {}
    overlaps, outside = [], []
    for idx, cell in enumerate(cells):
        for pos in cell.positions():
            if pos[0] >= n_rows or pos[1] >= n_cols:
                outside.append(pos)
            elif pos in occupancy:
                overlaps.append(pos)
            else:
                occupancy[pos] = idx
    if outside:
        raise OutOfBoundsError(outside)
    if overlaps:
        raise OverlapError(overlaps)
    if len(occupancy) != n_rows * n_cols:
        raise GapError((r, c) for r in range(n_rows) for c in range(n_cols) if (r, c) not in occupancy)
    return occupancy


def grid_box(cell: Cell, rows: Sequence[BBox], columns: Sequence[BBox]) -> BBox:
    """Union of the cell's rows intersected with the union of its columns."""
    row_union = BBox.union_all(rows[cell.row_start:cell.row_end + 1])
    col_union = BBox.union_all(columns[cell.col_start:cell.col_end + 1])
    box = row_union.intersection(col_union)
    if box is None:
        # rows and columns that miss each other still locate the cell by their extents
        box = BBox.of(col_union.x_min, row_union.y_min, col_union.x_max, row_union.y_max)
    return box


def with_grid_boxes(table: TableAnnotation) -> Tuple[Cell, ...]:
    if table.rows is None or table.columns is None:
        return table.cells
    return tuple(c.evolve(grid_box=grid_box(c, table.rows, table.columns)) for c in table.cells)


@dataclass(frozen=True)
class HeaderNode:
    cell: Cell
    children: Tuple["HeaderNode", ...] = ()

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def leaves(self) -> List[Cell]:
        if self.is_leaf:
            return [self.cell]
        return [leaf for child in self.children for leaf in child.leaves()]


def _sort_key(cell: Cell):
    return cell.col_start, cell.row_start, cell.col_end, cell.row_end


def header_tree(table: TableAnnotation, axis: Literal["column", "row"] = "column") -> Tuple[HeaderNode, ...]:
    """Header cells as a forest; a node's parent is the header cell directly above (columns) or left (rows)."""
    occupancy = table.occupancy()
    if axis == "column":
        members = {i for i, c in enumerate(table.cells) if c.is_column_header}
    else:
        members = {i for i, c in enumerate(table.cells) if c.is_row_header}

    parent: Dict[int, Optional[int]] = {}
    for i in sorted(members, key=lambda k: _sort_key(table.cells[k])):
        cell = table.cells[i]
        if axis == "column":
            if cell.row_start == 0:
                parent[i] = None
                continue
            neighbours = {occupancy[(cell.row_start - 1, c)] for c in range(cell.col_start, cell.col_end + 1)}
        else:
            if cell.col_start == 0:
                parent[i] = None
                continue
            neighbours = {occupancy[(r, cell.col_start - 1)] for r in range(cell.row_start, cell.row_end + 1)}
        neighbours &= members
        if not neighbours:
            parent[i] = None
            continue
        if len(neighbours) > 1:
            raise NotNestedError(f"header cell {cell.span} sits under {len(neighbours)} parents")
        (p,) = neighbours
        above = table.cells[p]
        if axis == "column":
            nested = above.col_start <= cell.col_start and cell.col_end <= above.col_end
        else:
            nested = above.row_start <= cell.row_start and cell.row_end <= above.row_end
        if not nested:
            raise NotNestedError(f"header cell {cell.span} crosses the span of {above.span}")
        parent[i] = p

    def node(i: int) -> HeaderNode:
        kids = sorted((k for k, p in parent.items() if p == i), key=lambda k: _sort_key(table.cells[k]))
        return HeaderNode(table.cells[i], tuple(node(k) for k in kids))

    roots = sorted((k for k, p in parent.items() if p is None), key=lambda k: _sort_key(table.cells[k]))
    return tuple(node(k) for k in roots)


@dataclass(frozen=True)
class Violation:
    kind: str
    spans: Tuple[Tuple[int, int, int, int], ...] = ()
    detail: str = field(default="", compare=False)


def _walk(nodes: Sequence[HeaderNode]):
    for n in nodes:
        yield n
        yield from _walk(n.children)


def validate_canonical(table: TableAnnotation) -> List[Violation]:
    occupancy = table.occupancy()
    cells = table.cells
    out: List[Violation] = []

    # (a) vertically stacked header cells with identical column spans
    for cell in cells:
        if not cell.is_column_header or cell.row_end + 1 >= table.n_rows:
            continue
        below = cells[occupancy[(cell.row_end + 1, cell.col_start)]]
        if below.is_column_header and (below.col_start, below.col_end) == (cell.col_start, cell.col_end):
            out.append(Violation(STACKED_SAME_SPAN, (cell.span, below.span),
                                 f"header cells {cell.span} and {below.span} span the same columns"))

    tree: Tuple[HeaderNode, ...] = ()
    try:
        tree = header_tree(table, "column")
    except NotNestedError as e:
        out.append(Violation(NOT_NESTED, (), str(e)))

    # (b) internal nodes need two children; a same-span single child is already (a)
    for n in _walk(tree):
        if len(n.children) == 1:
            child = n.children[0].cell
            if (child.col_start, child.col_end) != (n.cell.col_start, n.cell.col_end):
                out.append(Violation(SINGLE_CHILD, (n.cell.span, child.span),
                                     f"header cell {n.cell.span} has a single child"))

    # (c) every body column under its own leaf
    h = table.header_rows
    if h:
        seen = set()
        for j in range(table.n_cols):
            leaf = None
            for r in range(h - 1, -1, -1):
                c = cells[occupancy[(r, j)]]
                if c.is_column_header:
                    leaf = c
                    break
            if leaf is None:
                out.append(Violation(NON_UNIQUE_LEAF, (), f"column {j} has no column-header leaf"))
            elif leaf.col_end > leaf.col_start and leaf.span not in seen:
                seen.add(leaf.span)
                out.append(Violation(NON_UNIQUE_LEAF, (leaf.span,),
                                     f"columns {leaf.col_start}-{leaf.col_end} share the leaf {leaf.span}"))

    # (d) a projected row header row holds a single cell
    for r in sorted({c.row_start for c in cells if c.is_projected_row_header}):
        in_row = sorted({occupancy[(r, j)] for j in range(table.n_cols)})
        if len(in_row) > 1:
            out.append(Violation(SPLIT_PRH, tuple(cells[i].span for i in in_row),
                                 f"projected row header row {r} holds {len(in_row)} cells"))
    return out
