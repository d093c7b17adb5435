"""JSON files for tables, tokens, objects and reports."""
from pathlib import Path
from typing import Dict, List, Sequence, Type, Union

from pydantic import BaseModel, TypeAdapter, ValidationError

from ..core.errors import SchemaError
from ..model.types import AnnotatedObject, TableAnnotation, TokenSequence
from .markup import parse_markup

PathLike = Union[str, Path]

_objects = TypeAdapter(List[AnnotatedObject])


def json_path(loc: Sequence) -> str:
    out = "$"
    for part in loc:
        out += f"[{part}]" if isinstance(part, int) else f".{part}"
    return out


def _validate(adapter, text: str, source: Path):
    try:
        return adapter(text)
    except ValidationError as e:
        err = e.errors()[0]
        raise SchemaError(json_path(err["loc"]), err["msg"], source=str(source)) from e


def _read(path: PathLike) -> str:
    return Path(path).read_text(encoding="utf-8")


def _write(path: PathLike, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text + "\n", encoding="utf-8")


def load_model(model: Type[BaseModel], path: PathLike):
    return _validate(model.model_validate_json, _read(path), Path(path))


def load_table(path: PathLike) -> TableAnnotation:
    return load_model(TableAnnotation, path)


def load_any_table(path: PathLike) -> TableAnnotation:
    """Table JSON, or markup when the file ends in .html / .htm."""
    if Path(path).suffix.lower() in (".html", ".htm"):
        return parse_markup(_read(path))
    return load_table(path)


def save_table(table: TableAnnotation, path: PathLike):
    _write(path, table.model_dump_json(indent=2, exclude_none=True))


def load_tokens(path: PathLike) -> TokenSequence:
    return load_model(TokenSequence, path)


def save_tokens(tokens: TokenSequence, path: PathLike):
    _write(path, tokens.model_dump_json(indent=2))


def load_objects(path: PathLike) -> List[AnnotatedObject]:
    return _validate(_objects.validate_json, _read(path), Path(path))


def save_objects(objects: Sequence[AnnotatedObject], path: PathLike):
    _write(path, _objects.dump_json(list(objects), indent=2).decode("utf-8"))


def save_report(report: BaseModel, path: PathLike):
    _write(path, report.model_dump_json(indent=2))


TABLE_SUFFIXES = (".table.json", ".html", ".htm")


def table_name(path: PathLike) -> str:
    name = Path(path).name
    for suffix in TABLE_SUFFIXES:
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return Path(path).stem


def table_files(directory: PathLike) -> Dict[str, Path]:
    """Table inputs of a directory keyed by table name; table JSON wins over markup."""
    found: Dict[str, Path] = {}
    for suffix in TABLE_SUFFIXES:
        for path in sorted(Path(directory).glob(f"*{suffix}")):
            if path.is_file():
                found.setdefault(path.name[: -len(suffix)], path)
    return dict(sorted(found.items()))
