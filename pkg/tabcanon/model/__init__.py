from .types import (
    AnnotatedObject,
    BBox,
    Cell,
    DETECTION_CATEGORIES,
    ObjectCategory,
    STRUCTURE_CATEGORIES,
    TableAnnotation,
    Token,
    TokenSequence,
    is_blank,
    normalize_text,
)
from .grid import HeaderNode, Violation, build_grid, grid_box, header_tree, validate_canonical

__all__ = [
    "AnnotatedObject", "BBox", "Cell", "DETECTION_CATEGORIES", "ObjectCategory", "STRUCTURE_CATEGORIES",
    "TableAnnotation", "Token", "TokenSequence", "is_blank", "normalize_text",
    "HeaderNode", "Violation", "build_grid", "grid_box", "header_tree", "validate_canonical",
]
