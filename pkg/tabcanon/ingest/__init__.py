from .markup import parse_markup
from .jsonio import (
    table_files,
    table_name,
    load_any_table,
    load_objects,
    load_table,
    load_tokens,
    save_objects,
    save_report,
    save_table,
    save_tokens,
)

__all__ = [
    "parse_markup", "load_any_table", "load_objects", "load_table", "load_tokens",
    "save_objects", "save_report", "save_table", "save_tokens", "table_files", "table_name",
]
