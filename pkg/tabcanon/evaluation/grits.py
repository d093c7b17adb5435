"""Grid table similarity.

Both tables become matrices with one entry per grid position. The score is
2 * best / (|A| + |B|), where ``best`` is the largest total entry similarity
over pairs of equal-shape, order-preserving row and column selections.
"""
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterator, List, Literal, Optional, Sequence, Tuple, Union

import Levenshtein
import numpy as np

from ..core.errors import MissingBoxes
from ..model.grid import grid_box
from ..model.types import BBox, TableAnnotation, normalize_text

Variant = Literal["top", "cont", "loc"]
VARIANTS: Tuple[str, ...] = ("top", "cont", "loc")

# matrices up to this many entries are searched exhaustively
EXACT_SEARCH_ENTRIES = 25
# the heuristic climbs from every selection of one side when it has at most this many
ALTERNATING_SEEDS = 2000

Pairs = Tuple[Tuple[int, int], ...]


@dataclass(frozen=True)
class CellMatrix:
    """Grid positions of a table mapped to the cells that occupy them."""
    ids: np.ndarray
    texts: Tuple[str, ...]
    boxes: Tuple[Optional[BBox], ...]
    spans: Tuple[Tuple[int, int, int, int], ...]

    @classmethod
    def from_table(cls, table: TableAnnotation) -> "CellMatrix":
        ids = np.zeros((table.n_rows, table.n_cols), dtype=np.int64)
        for (r, c), i in table.occupancy().items():
            ids[r, c] = i
        boxes: List[Optional[BBox]] = [c.grid_box for c in table.cells]
        if table.rows is not None and table.columns is not None:
            boxes = [grid_box(c, table.rows, table.columns) for c in table.cells]
        return cls(ids, tuple(normalize_text(c.text) for c in table.cells), tuple(boxes),
                   tuple(c.span for c in table.cells))

    @classmethod
    def of(cls, table: Union["CellMatrix", TableAnnotation]) -> "CellMatrix":
        return table if isinstance(table, CellMatrix) else cls.from_table(table)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.ids.shape

    @property
    def size(self) -> int:
        return int(self.ids.size)

    def relative_rects(self) -> np.ndarray:
        """(rows, cols, 4) array of each entry's cell span relative to the entry: row0, row1, col0, col1."""
        m, n = self.shape
        spans = np.array(self.spans, dtype=float).reshape(-1, 4)
        if not m or not n:
            return np.zeros((m, n, 4))
        s = spans[self.ids]
        i = np.arange(m, dtype=float)[:, None]
        j = np.arange(n, dtype=float)[None, :]
        return np.stack([s[..., 0] - i, s[..., 1] + 1 - i, s[..., 2] - j, s[..., 3] + 1 - j], axis=-1)


def _rect_iou(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """IoU of every rectangle in ``a`` against every one in ``b``; rectangles are (y0, y1, x0, x1)."""
    a = a[:, :, None, None, :]
    b = b[None, None, :, :, :]
    h = np.clip(np.minimum(a[..., 1], b[..., 1]) - np.maximum(a[..., 0], b[..., 0]), 0, None)
    w = np.clip(np.minimum(a[..., 3], b[..., 3]) - np.maximum(a[..., 2], b[..., 2]), 0, None)
    inter = h * w
    union = (a[..., 1] - a[..., 0]) * (a[..., 3] - a[..., 2]) + (b[..., 1] - b[..., 0]) * (b[..., 3] - b[..., 2]) - inter
    same = np.all(a == b, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(union > 0, inter / union, np.where(same, 1.0, 0.0))


def text_similarity(a: str, b: str) -> float:
    """2 * LCS / (len(a) + len(b)); identical when both are empty."""
    if not a and not b:
        return 1.0
    return Levenshtein.ratio(a, b)


def similarity_tensor(A: CellMatrix, B: CellMatrix, variant: Variant) -> np.ndarray:
    """S[i, j, k, l] = similarity of entry (i, j) of A with entry (k, l) of B."""
    (ma, na), (mb, nb) = A.shape, B.shape
    if not A.size or not B.size:
        return np.zeros((ma, na, mb, nb))
    if variant == "top":
        return _rect_iou(A.relative_rects(), B.relative_rects())
    if variant == "cont":
        pair = np.array([[text_similarity(x, y) for y in B.texts] for x in A.texts]).reshape(len(A.texts), len(B.texts))
    elif variant == "loc":
        if any(b is None for b in A.boxes) or any(b is None for b in B.boxes):
            raise MissingBoxes("location similarity needs a box for every cell")
        pair = np.array([[x.iou(y) for y in B.boxes] for x in A.boxes]).reshape(len(A.boxes), len(B.boxes))
    else:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    return pair[A.ids[:, :, None, None], B.ids[None, None, :, :]]


def best_matching(W: np.ndarray) -> Tuple[Pairs, float]:
    """Order-preserving matching of rows of W to columns of W with the largest total weight."""
    m, n = W.shape
    D = np.zeros((m + 1, n + 1))
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            D[i, j] = max(D[i - 1, j], D[i, j - 1], D[i - 1, j - 1] + W[i - 1, j - 1])
    pairs = []
    i, j = m, n
    while i > 0 and j > 0:
        if D[i, j] == D[i - 1, j]:
            i -= 1
        elif D[i, j] == D[i, j - 1]:
            j -= 1
        else:
            pairs.append((i - 1, j - 1))
            i, j = i - 1, j - 1
    pairs.reverse()
    return tuple(pairs), float(D[m, n])


def _column_weights(S: np.ndarray, rows: Pairs) -> np.ndarray:
    if not rows:
        return np.zeros((S.shape[1], S.shape[3]))
    ra, rb = zip(*rows)
    return S[list(ra), :, list(rb), :].sum(axis=0)


def _row_weights(S: np.ndarray, cols: Pairs) -> np.ndarray:
    if not cols:
        return np.zeros((S.shape[0], S.shape[2]))
    ca, cb = zip(*cols)
    return S[:, list(ca), :, list(cb)].sum(axis=0)


def monotone_matchings(m: int, n: int) -> Iterator[Pairs]:
    """Every order-preserving partial matching between range(m) and range(n)."""
    for k in range(min(m, n) + 1):
        for a in combinations(range(m), k):
            for b in combinations(range(n), k):
                yield tuple(zip(a, b))


@dataclass(frozen=True)
class Selection:
    rows: Pairs
    columns: Pairs
    total: float


def _exact(S: np.ndarray) -> Selection:
    ma, na, mb, nb = S.shape
    best = Selection((), (), 0.0)
    if math.comb(ma + mb, ma) <= math.comb(na + nb, na):
        for rows in monotone_matchings(ma, mb):
            cols, total = best_matching(_column_weights(S, rows))
            if total > best.total:
                best = Selection(rows, cols, total)
    else:
        for cols in monotone_matchings(na, nb):
            rows, total = best_matching(_row_weights(S, cols))
            if total > best.total:
                best = Selection(rows, cols, total)
    return best


def _climb(S: np.ndarray, rows: Pairs) -> Selection:
    cols, total = best_matching(_column_weights(S, rows))
    while True:
        new_rows, _ = best_matching(_row_weights(S, cols))
        new_cols, new_total = best_matching(_column_weights(S, new_rows))
        if new_total <= total + 1e-12:
            return Selection(rows, cols, total)
        rows, cols, total = new_rows, new_cols, new_total


def _seeds(S: np.ndarray) -> Iterator[Pairs]:
    """Row selections to start climbing from; every one of them when there are few."""
    ma, na, mb, nb = S.shape
    if math.comb(ma + mb, ma) <= ALTERNATING_SEEDS:
        yield from monotone_matchings(ma, mb)
        return
    if math.comb(na + nb, na) <= ALTERNATING_SEEDS:
        for cols in monotone_matchings(na, nb):
            yield best_matching(_row_weights(S, cols))[0]
        return
    yield tuple((i, i) for i in range(min(ma, mb)))
    yield tuple((ma - 1 - i, mb - 1 - i) for i in reversed(range(min(ma, mb))))
    yield best_matching(S.max(axis=(1, 3)))[0]
    yield best_matching(_row_weights(S, best_matching(S.max(axis=(0, 2)))[0]))[0]


def _alternating(S: np.ndarray) -> Selection:
    best = Selection((), (), 0.0)
    for rows in _seeds(S):
        found = _climb(S, rows)
        if found.total > best.total + 1e-12:
            best = found
    return best


def search(S: np.ndarray, exact: Optional[bool] = None) -> Selection:
    """Best row and column selections for a similarity tensor.

    ``exact`` defaults to an exhaustive search when both matrices are small.
    """
    ma, na, mb, nb = S.shape
    if not S.size:
        return Selection((), (), 0.0)
    if exact is None:
        exact = max(ma * na, mb * nb) <= EXACT_SEARCH_ENTRIES
    return _exact(S) if exact else _alternating(S)


def grits_search(A: Union[CellMatrix, TableAnnotation], B: Union[CellMatrix, TableAnnotation],
                 variant: Variant, exact: Optional[bool] = None) -> Selection:
    return search(similarity_tensor(CellMatrix.of(A), CellMatrix.of(B), variant), exact)


def grits(A: Union[CellMatrix, TableAnnotation], B: Union[CellMatrix, TableAnnotation],
          variant: Variant, exact: Optional[bool] = None) -> float:
    A, B = CellMatrix.of(A), CellMatrix.of(B)
    if not A.size and not B.size:
        return 1.0
    best = search(similarity_tensor(A, B, variant), exact)
    return 2.0 * best.total / (A.size + B.size)


def selection_total(S: np.ndarray, rows: Sequence[Tuple[int, int]], cols: Sequence[Tuple[int, int]]) -> float:
    return float(sum(S[ra, ca, rb, cb] for ra, rb in rows for ca, cb in cols))
