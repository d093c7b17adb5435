import json, logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from ..core import metrics
from ..core.config import Settings
from ..core.errors import SchemaError, TabCanonError
from ..ingest import load_any_table, load_tokens, save_objects, save_table, table_files
from .align import AlignStage
from .assemble import AssembleStage
from .base import BaseStage, TableItem
from .canon import CanonicalizeStage
from .qc import QCStage
from .spatial import CompleteStage, DilateStage, TightenStage

STAGE_TYPES = {
    "align": AlignStage,
    "complete": CompleteStage,
    "canonicalize": CanonicalizeStage,
    "qc": QCStage,
    "dilate": DilateStage,
    "tighten": TightenStage,
    "assemble": AssembleStage,
}

MANIFEST = "manifest.json"

log = logging.getLogger("tabcanon.pipeline")


def stage_config(settings: Settings) -> Dict[str, Any]:
    return {
        "match": settings.MATCH_SCORE,
        "mismatch": settings.MISMATCH_SCORE,
        "gap": settings.GAP_SCORE,
        "band": settings.ALIGN_BAND,
        "max_edit_distance": settings.MAX_EDIT_DISTANCE,
        "min_word_containment": settings.MIN_WORD_CONTAINMENT,
        "max_objects": settings.MAX_OBJECTS,
        "token_overlap": settings.TOKEN_OVERLAP,
        "child_overlap": settings.CHILD_OVERLAP,
        "span_coverage_min": settings.SPAN_COVERAGE_MIN,
    }


def dump_json(data: Any) -> str:
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _dump_report(report: Any) -> Any:
    return report.model_dump(mode="json") if hasattr(report, "model_dump") else report


class PipelineManager:
    """Runs the configured stages over every table of a directory."""

    def __init__(self, settings: Settings, stages: Optional[Sequence[str]] = None):
        self.settings = settings
        config = stage_config(settings)
        self.stage_names = list(stages if stages is not None else settings.PIPELINE_STAGES)
        self._stages: List[BaseStage] = [STAGE_TYPES[n](n, config) for n in self.stage_names]
        self.jobs = settings.JOBS

    def load(self, name: str, path: Path) -> TableItem:
        """Read one table and its tokens; bad markup becomes a rejection, unreadable files raise."""
        directory = path.parent
        tokens = load_tokens(directory / f"{name}.tokens.json")
        words_path = directory / f"{name}.words.json"
        words = load_tokens(words_path) if words_path.exists() else None
        item = TableItem(name=name, table=None, tokens=tokens, words=words)
        try:
            item.table = load_any_table(path)
        except SchemaError:
            raise
        except TabCanonError as e:
            log.warning("%s: %s", name, e)
            item.reject(e.reason)
        return item

    def process(self, item: TableItem) -> TableItem:
        for stage in self._stages:
            if item.rejected:
                break
            try:
                item = stage(item)
            except SchemaError:
                raise
            except TabCanonError as e:
                stage.log.warning("%s: %s", item.name, e)
                item.reject(e.reason)
        return item

    def run_items(self, items: Sequence[TableItem]) -> List[TableItem]:
        if self.jobs <= 1:
            return [self.process(i) for i in items]
        with ThreadPoolExecutor(max_workers=self.jobs) as pool:
            return list(pool.map(self.process, items))

    def write(self, item: TableItem, out_dir: Path):
        verdict = "reject" if item.rejected else "accept"
        report = {
            "table": item.name,
            "verdict": verdict,
            "reasons": list(item.reasons),
            "stages": [{"stage": name, "report": _dump_report(r)} for name, r in item.reports],
        }
        (out_dir / f"{item.name}.report.json").write_text(dump_json(report), encoding="utf-8")
        if item.rejected:
            return
        save_table(item.table, out_dir / f"{item.name}.table.json")
        if item.objects:
            save_objects(item.objects, out_dir / f"{item.name}.objects.json")
        if item.detection is not None:
            save_objects([item.detection], out_dir / f"{item.name}.detection.json")

    def run(self, input_dir: Path, out_dir: Path) -> Dict[str, Any]:
        input_dir, out_dir = Path(input_dir), Path(out_dir)
        if not input_dir.is_dir():
            raise FileNotFoundError(f"input directory not found: {input_dir}")
        out_dir.mkdir(parents=True, exist_ok=True)
        items = [self.load(name, path) for name, path in table_files(input_dir).items()]
        results = self.run_items(items)

        reasons: Counter = Counter()
        tables = {}
        for item in results:
            self.write(item, out_dir)
            verdict = "reject" if item.rejected else "accept"
            tables[item.name] = {"verdict": verdict, "reasons": list(item.reasons)}
            reasons.update(item.reasons)
            metrics.tables_processed.labels(verdict=verdict).inc()
            for r in item.reasons:
                metrics.tables_rejected.labels(reason=r).inc()
            log.info("%s: %s%s", item.name, verdict, f" ({', '.join(item.reasons)})" if item.reasons else "")

        manifest = {
            "accepted": sum(1 for i in results if not i.rejected),
            "rejected": sum(1 for i in results if i.rejected),
            "reasons": dict(sorted(reasons.items())),
            "tables": tables,
        }
        (out_dir / MANIFEST).write_text(dump_json(manifest), encoding="utf-8")
        return manifest
