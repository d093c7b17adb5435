"""Exception hierarchy.

Every data error is also a ``ValueError`` so it can be raised from pydantic
validators and surface as a ``ValidationError`` with a field location. The
``reason`` slug is what the pipeline records when it rejects a table.
"""
from typing import Iterable, Optional, Sequence, Tuple

Position = Tuple[int, int]


class TabCanonError(Exception):
    reason = "error"


class GridError(TabCanonError, ValueError):
    reason = "grid"

    def __init__(self, positions: Iterable[Position], message: Optional[str] = None):
        self.positions: Tuple[Position, ...] = tuple(sorted(set(positions)))
        shown = list(self.positions[:8])
        more = "" if len(self.positions) <= 8 else f" (+{len(self.positions) - 8} more)"
        super().__init__(message or f"{self.__class__.__name__} at {shown}{more}")


class OverlapError(GridError):
    reason = "grid_overlap"


class GapError(GridError):
    reason = "grid_gap"


class OutOfBoundsError(GridError):
    reason = "out_of_bounds"


class NotNestedError(TabCanonError, ValueError):
    reason = "not_nested"


class MarkupError(TabCanonError, ValueError):
    reason = "malformed_markup"


class MalformedMarkup(MarkupError):
    pass


class RaggedGrid(MarkupError):
    reason = "ragged_grid"

    def __init__(self, widths: Sequence[int]):
        self.widths = tuple(widths)
        super().__init__(f"rows imply inconsistent column counts: {list(self.widths)}")


class SchemaError(TabCanonError, ValueError):
    reason = "schema"

    def __init__(self, path: str, message: str, source: Optional[str] = None):
        self.path = path
        self.source = source
        where = f"{source}: " if source else ""
        super().__init__(f"{where}{path}: {message}")


class EmptyTokenStream(TabCanonError, ValueError):
    reason = "empty_token_stream"


class CompletionError(TabCanonError, ValueError):
    reason = "completion"


class MissingBoxes(CompletionError):
    reason = "missing_boxes"


class UndefinedRow(CompletionError):
    reason = "undefined_row"

    def __init__(self, indices: Iterable[int]):
        self.indices = tuple(indices)
        super().__init__(f"no non-blank cell starts or ends in row(s) {list(self.indices)}")


class UndefinedColumn(CompletionError):
    reason = "undefined_column"

    def __init__(self, indices: Iterable[int]):
        self.indices = tuple(indices)
        super().__init__(f"no non-blank cell starts or ends in column(s) {list(self.indices)}")


class NonMonotonicRows(TabCanonError, ValueError):
    reason = "non_monotonic"

    def __init__(self, axis: str, index: int):
        self.axis = axis
        self.index = index
        super().__init__(f"{axis} {index} and {index + 1} are not in increasing order")


class TooFewRows(TabCanonError, ValueError):
    reason = "too_few_rows"


class AssemblyError(TabCanonError, ValueError):
    reason = "assembly"


class NoTableObject(AssemblyError):
    reason = "no_table_object"


class DegenerateStructure(AssemblyError):
    reason = "degenerate_structure"
