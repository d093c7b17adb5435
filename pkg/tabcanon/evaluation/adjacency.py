"""Adjacent-cell content relations and their F-score."""
from collections import Counter
from typing import Dict, Literal, Tuple

from ..model.types import TableAnnotation, normalize_text

Relation = Tuple[str, str, Literal["right", "below"]]


def adjacency_relations(table: TableAnnotation) -> Counter:
    """Multiset of (cell text, nearest non-blank neighbour text, direction), scanning across blank cells."""
    occupancy = table.occupancy()
    cells = table.cells
    seen = set()
    out: Counter = Counter()
    for idx, cell in enumerate(cells):
        if cell.blank:
            continue
        found = []
        for r in range(cell.row_start, cell.row_end + 1):
            c = cell.col_end + 1
            while c < table.n_cols and cells[occupancy[(r, c)]].blank:
                c += 1
            if c < table.n_cols:
                found.append((occupancy[(r, c)], "right"))
        for c in range(cell.col_start, cell.col_end + 1):
            r = cell.row_end + 1
            while r < table.n_rows and cells[occupancy[(r, c)]].blank:
                r += 1
            if r < table.n_rows:
                found.append((occupancy[(r, c)], "below"))
        for other, direction in found:
            if (idx, other, direction) in seen:
                continue
            seen.add((idx, other, direction))
            out[(normalize_text(cell.text), normalize_text(cells[other].text), direction)] += 1
    return out


def adjacency_fscore(truth: TableAnnotation, pred: TableAnnotation) -> Dict[str, float]:
    a, b = adjacency_relations(truth), adjacency_relations(pred)
    total_a, total_b = sum(a.values()), sum(b.values())
    if not total_a and not total_b:
        return {"precision": 1.0, "recall": 1.0, "f": 1.0}
    common = sum((a & b).values())
    precision = common / total_b if total_b else 0.0
    recall = common / total_a if total_a else 0.0
    f = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {"precision": precision, "recall": recall, "f": f}
