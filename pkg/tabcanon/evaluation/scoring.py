"""Corpus scoring of predicted tables against ground truth, grouped by table complexity."""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

from ..core.errors import MissingBoxes
from ..ingest import load_any_table, load_objects, load_tokens, table_files
from ..model.types import TableAnnotation, TokenSequence
from ..stages.assemble import AssemblyThresholds, objects_to_table
from ..stages.spatial import tighten
from .accuracy import content_matches
from .adjacency import adjacency_fscore
from .grits import grits

log = logging.getLogger("tabcanon.scoring")

METRICS = ("accuracy", "grits-top", "grits-cont", "grits-loc", "adjacency")
COLUMNS = {
    "accuracy": "Acc_Cont",
    "grits-top": "GriTS_Top",
    "grits-cont": "GriTS_Cont",
    "grits-loc": "GriTS_Loc",
    "adjacency": "Adj_Cont",
}
GROUPS = ("Simple", "Complex", "All")


def parse_metrics(spec: str) -> List[str]:
    names = [m.strip().lower() for m in spec.split(",") if m.strip()]
    unknown = [m for m in names if m not in METRICS]
    if unknown:
        raise ValueError(f"unknown metric(s) {unknown}; choose from {list(METRICS)}")
    return [m for m in METRICS if m in names]


@dataclass
class TableScore:
    name: str
    complex: bool
    values: Dict[str, Optional[float]] = field(default_factory=dict)


def _tightened(table: TableAnnotation, tokens: Optional[TokenSequence], min_overlap: float) -> TableAnnotation:
    if tokens is None or not table.has_boxes:
        return table
    return tighten(table, tokens, min_overlap)[0]


def score_pair(truth: TableAnnotation, pred: TableAnnotation, metrics: Sequence[str] = METRICS,
               tokens: Optional[TokenSequence] = None, token_overlap: float = 0.5) -> Dict[str, Optional[float]]:
    """Every requested metric for one table; location is scored on boxes tightened to ``tokens``.

    Location is None when either table lacks cell boxes.
    """
    out: Dict[str, Optional[float]] = {}
    for metric in metrics:
        if metric == "accuracy":
            out[metric] = float(content_matches(truth, pred))
        elif metric == "adjacency":
            out[metric] = adjacency_fscore(truth, pred)["f"]
        elif metric == "grits-loc":
            try:
                out[metric] = grits(_tightened(truth, tokens, token_overlap), _tightened(pred, tokens, token_overlap), "loc")
            except MissingBoxes as e:
                log.warning("location not scored: %s", e)
                out[metric] = None
        else:
            out[metric] = grits(truth, pred, metric.split("-", 1)[1])
    return out


def aggregate(scores: Iterable[TableScore], metrics: Sequence[str] = METRICS) -> List[Dict[str, object]]:
    """One row per complexity group with the mean of each metric over the tables that have it; None when none do."""
    scores = list(scores)
    rows = []
    for group in GROUPS:
        members = [s for s in scores if group == "All" or s.complex == (group == "Complex")]
        row: Dict[str, object] = {"group": group, "tables": len(members)}
        for metric in metrics:
            values = [s.values[metric] for s in members if s.values.get(metric) is not None]
            row[COLUMNS[metric]] = sum(values) / len(values) if values else None
        rows.append(row)
    return rows


def load_prediction(pred_dir: Path, name: str, tokens: Optional[TokenSequence],
                    thresholds: AssemblyThresholds) -> TableAnnotation:
    """A predicted table, assembled from ``<name>.objects.json`` when no table file exists."""
    files = table_files(pred_dir)
    if name in files:
        return load_any_table(files[name])
    objects = pred_dir / f"{name}.objects.json"
    if objects.exists():
        return objects_to_table(load_objects(objects), tokens or TokenSequence(), thresholds)
    log.warning("no prediction for table %s; scoring it as empty", name)
    return TableAnnotation(n_rows=0, n_cols=0)


def score_directories(gt_dir: Path, pred_dir: Path, metrics: Sequence[str] = METRICS,
                      thresholds: AssemblyThresholds = AssemblyThresholds()) -> List[TableScore]:
    gt_dir, pred_dir = Path(gt_dir), Path(pred_dir)
    out = []
    for name, path in table_files(gt_dir).items():
        truth = load_any_table(path)
        token_path = gt_dir / f"{name}.tokens.json"
        tokens = load_tokens(token_path) if token_path.exists() else None
        if tokens is None and "grits-loc" in metrics:
            log.warning("no tokens for table %s; location is scored on untightened boxes", name)
        pred = load_prediction(pred_dir, name, tokens, thresholds)
        values = score_pair(truth, pred, metrics, tokens, thresholds.token_overlap)
        out.append(TableScore(name, truth.complex, values))
        log.info("scored %s", name)
    return out
