"""Domain value types shared by every stage.

All models are frozen pydantic models; the JSON forms documented in the README
are exactly their ``model_dump_json`` output. Boxes serialize as
``[x_min, y_min, x_max, y_max]`` in page points with y increasing downward.
"""
from enum import Enum
from typing import Iterable, Iterator, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_serializer, model_validator


class BBox(BaseModel):
    model_config = ConfigDict(frozen=True)

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    @model_validator(mode="before")
    @classmethod
    def from_list(cls, v):
        if isinstance(v, (list, tuple)):
            if len(v) != 4:
                raise ValueError(f"bbox needs 4 coordinates, got {len(v)}")
            return dict(zip(("x_min", "y_min", "x_max", "y_max"), v))
        return v

    @model_validator(mode="after")
    def ordered(self):
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError(f"bbox {self.as_list()} has a min coordinate above its max")
        return self

    @model_serializer
    def to_list(self) -> List[float]:
        return self.as_list()

    @classmethod
    def of(cls, x_min: float, y_min: float, x_max: float, y_max: float) -> "BBox":
        return cls(x_min=x_min, y_min=y_min, x_max=x_max, y_max=y_max)

    @classmethod
    def union_all(cls, boxes: Iterable["BBox"]) -> "BBox":
        boxes = list(boxes)
        if not boxes:
            raise ValueError("union of no boxes")
        return cls.of(min(b.x_min for b in boxes), min(b.y_min for b in boxes),
                      max(b.x_max for b in boxes), max(b.y_max for b in boxes))

    def as_list(self) -> List[float]:
        return [self.x_min, self.y_min, self.x_max, self.y_max]

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    def intersection(self, other: "BBox") -> Optional["BBox"]:
        """Common region, or None when the boxes are disjoint. Touching boxes give a degenerate box."""
        x0, y0 = max(self.x_min, other.x_min), max(self.y_min, other.y_min)
        x1, y1 = min(self.x_max, other.x_max), min(self.y_max, other.y_max)
        if x0 > x1 or y0 > y1:
            return None
        return BBox.of(x0, y0, x1, y1)

    def intersection_area(self, other: "BBox") -> float:
        w = min(self.x_max, other.x_max) - max(self.x_min, other.x_min)
        h = min(self.y_max, other.y_max) - max(self.y_min, other.y_min)
        return w * h if w > 0 and h > 0 else 0.0

    def union(self, other: "BBox") -> "BBox":
        return BBox.union_all((self, other))

    def contains(self, other: "BBox") -> bool:
        return (self.x_min <= other.x_min and self.y_min <= other.y_min
                and other.x_max <= self.x_max and other.y_max <= self.y_max)

    def iou(self, other: "BBox") -> float:
        inter = self.intersection_area(other)
        union = self.area + other.area - inter
        if union <= 0:
            return 1.0 if self == other else 0.0
        return inter / union

    def overlap_fraction(self, other: "BBox") -> float:
        """Fraction of this box's area that lies inside ``other``."""
        if self.area <= 0:
            return 1.0 if other.contains(self) else 0.0
        return self.intersection_area(other) / self.area

    def translate(self, dx: float, dy: float) -> "BBox":
        return BBox.of(self.x_min + dx, self.y_min + dy, self.x_max + dx, self.y_max + dy)

    def scale(self, factor: float) -> "BBox":
        return BBox.of(self.x_min * factor, self.y_min * factor, self.x_max * factor, self.y_max * factor)


def is_blank(text: str) -> bool:
    return not text.strip()


def normalize_text(text: str) -> str:
    return " ".join(text.split())


class Cell(BaseModel):
    model_config = ConfigDict(frozen=True)

    row_start: int = Field(ge=0)
    row_end: int = Field(ge=0)
    col_start: int = Field(ge=0)
    col_end: int = Field(ge=0)
    text: str = ""
    is_column_header: bool = False
    is_projected_row_header: bool = False
    is_row_header: bool = False
    text_box: Optional[BBox] = None
    grid_box: Optional[BBox] = None

    @model_validator(mode="after")
    def consistent(self):
        if self.row_start > self.row_end or self.col_start > self.col_end:
            raise ValueError(f"cell span {self.span} is inverted")
        if self.is_projected_row_header:
            if self.row_start != self.row_end:
                raise ValueError(f"projected row header {self.span} spans more than one row")
            if self.is_column_header:
                raise ValueError(f"projected row header {self.span} is flagged as a column header")
        if self.text_box is not None and self.blank:
            raise ValueError(f"blank cell {self.span} has a text box")
        return self

    @property
    def span(self) -> Tuple[int, int, int, int]:
        return self.row_start, self.row_end, self.col_start, self.col_end

    @property
    def blank(self) -> bool:
        return is_blank(self.text)

    @property
    def spanning(self) -> bool:
        return self.row_end > self.row_start or self.col_end > self.col_start

    @property
    def n_positions(self) -> int:
        return (self.row_end - self.row_start + 1) * (self.col_end - self.col_start + 1)

    def positions(self) -> Iterator[Tuple[int, int]]:
        for r in range(self.row_start, self.row_end + 1):
            for c in range(self.col_start, self.col_end + 1):
                yield r, c

    def evolve(self, **changes) -> "Cell":
        return Cell(**{**dict(self), **changes})


class TableAnnotation(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_rows: int = Field(ge=0)
    n_cols: int = Field(ge=0)
    cells: Tuple[Cell, ...] = ()
    rows: Optional[Tuple[BBox, ...]] = None
    columns: Optional[Tuple[BBox, ...]] = None
    table_box: Optional[BBox] = None
    rotated: bool = False

    @model_validator(mode="after")
    def tiled(self):
        from .grid import build_grid

        build_grid(self.cells, self.n_rows, self.n_cols)
        if self.rows is not None and len(self.rows) != self.n_rows:
            raise ValueError(f"{len(self.rows)} row boxes for {self.n_rows} rows")
        if self.columns is not None and len(self.columns) != self.n_cols:
            raise ValueError(f"{len(self.columns)} column boxes for {self.n_cols} columns")
        header_rows = {r for c in self.cells if c.is_column_header for r in range(c.row_start, c.row_end + 1)}
        if header_rows:
            h = max(header_rows) + 1
            if header_rows != set(range(h)):
                raise ValueError(f"column header rows {sorted(header_rows)} are not a prefix of the table")
            stray = [c.span for c in self.cells if c.row_end < h and not c.is_column_header]
            if stray:
                raise ValueError(f"cells {stray} lie inside the column header but are not flagged")
        return self

    @property
    def header_rows(self) -> int:
        """Number of leading rows that form the column header."""
        return max((c.row_end + 1 for c in self.cells if c.is_column_header), default=0)

    @property
    def has_boxes(self) -> bool:
        return self.rows is not None and self.columns is not None and self.table_box is not None

    @property
    def complex(self) -> bool:
        return any(c.spanning for c in self.cells)

    def occupancy(self):
        from .grid import build_grid

        return build_grid(self.cells, self.n_rows, self.n_cols)

    def cell_at(self, row: int, col: int) -> Cell:
        for c in self.cells:
            if c.row_start <= row <= c.row_end and c.col_start <= col <= c.col_end:
                return c
        raise IndexError(f"no cell at ({row}, {col})")

    def sorted_cells(self) -> Tuple[Cell, ...]:
        return tuple(sorted(self.cells, key=lambda c: (c.row_start, c.col_start)))

    def evolve(self, **changes) -> "TableAnnotation":
        return TableAnnotation(**{**dict(self), **changes})


class ObjectCategory(str, Enum):
    TABLE = "table"
    TABLE_ROTATED = "table-rotated"
    COLUMN = "table-column"
    ROW = "table-row"
    COLUMN_HEADER = "table-column-header"
    PROJECTED_ROW_HEADER = "table-projected-row-header"
    SPANNING_CELL = "table-spanning-cell"


DETECTION_CATEGORIES = (ObjectCategory.TABLE, ObjectCategory.TABLE_ROTATED)
STRUCTURE_CATEGORIES = (
    ObjectCategory.TABLE,
    ObjectCategory.COLUMN,
    ObjectCategory.ROW,
    ObjectCategory.COLUMN_HEADER,
    ObjectCategory.PROJECTED_ROW_HEADER,
    ObjectCategory.SPANNING_CELL,
)


class AnnotatedObject(BaseModel):
    model_config = ConfigDict(frozen=True)

    category: ObjectCategory
    bbox: BBox
    score: float = Field(default=1.0, ge=0.0)


class Token(BaseModel):
    model_config = ConfigDict(frozen=True)

    text: str = Field(min_length=1)
    bbox: BBox


class TokenSequence(BaseModel):
    model_config = ConfigDict(frozen=True)

    granularity: Literal["char", "word"] = "char"
    tokens: Tuple[Token, ...] = ()

    @model_validator(mode="after")
    def char_tokens_single(self):
        if self.granularity == "char":
            bad = [i for i, t in enumerate(self.tokens) if len(t.text) != 1]
            if bad:
                raise ValueError(f"character tokens {bad[:8]} are not single characters")
        return self

    def __len__(self) -> int:
        return len(self.tokens)

    def characters(self) -> List[Token]:
        """Non-whitespace characters in order; word tokens lend their box to every character."""
        out = []
        for t in self.tokens:
            for ch in t.text:
                if not ch.isspace():
                    out.append(t if len(t.text) == 1 else Token(text=ch, bbox=t.bbox))
        return out

    def joined(self) -> str:
        sep = "" if self.granularity == "char" else " "
        return sep.join(t.text for t in self.tokens)
