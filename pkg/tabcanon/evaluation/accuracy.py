from typing import Iterable, List, Tuple

from ..model.types import TableAnnotation, normalize_text


def text_grid(table: TableAnnotation) -> List[List[str]]:
    occupancy = table.occupancy()
    return [[normalize_text(table.cells[occupancy[(r, c)]].text) for c in range(table.n_cols)]
            for r in range(table.n_rows)]


def content_matches(truth: TableAnnotation, pred: TableAnnotation) -> bool:
    """Same grid shape and the same text at every grid position."""
    if (truth.n_rows, truth.n_cols) != (pred.n_rows, pred.n_cols):
        return False
    return text_grid(truth) == text_grid(pred)


def content_accuracy(pairs: Iterable[Tuple[TableAnnotation, TableAnnotation]]) -> float:
    results = [content_matches(a, b) for a, b in pairs]
    return sum(results) / len(results) if results else 0.0
