import csv, io, json, logging, sys
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, List, Optional

import typer
from pydantic import ValidationError

from ..core.config import Settings, load_settings
from ..core.errors import SchemaError, TabCanonError
from ..core.logging import setup_logging
from ..core.metrics import write_metrics
from ..evaluation.scoring import METRICS, aggregate, parse_metrics, score_directories
from ..ingest import load_any_table, load_objects, load_tokens, save_objects, save_report, save_table, table_files
from ..model.types import TableAnnotation
from ..stages.align import Scoring, align_table_text
from ..stages.assemble import AssemblyThresholds, assemble as assemble_objects
from ..stages.canon import canonicalize as canonicalize_table, survey_oversegmentation
from ..stages.manager import PipelineManager, dump_json
from ..stages.qc import QCThresholds, qc as run_qc
from ..stages.spatial import complete as complete_table, detection_object, dilate as dilate_table

app = typer.Typer(add_completion=False, help="Table-structure ground truth: canonicalize, verify, emit objects, score.")

log = logging.getLogger("tabcanon.cli")

EXIT_DATA = 1
EXIT_INPUT = 2


@app.callback()
def main(ctx: typer.Context,
         config: Optional[Path] = typer.Option(None, "--config", help="KEY=value settings file"),
         log_level: Optional[str] = typer.Option(None, "--log-level")):
    ctx.obj = {"config": config, "log_level": log_level}


def _settings(ctx: typer.Context, **overrides: Any) -> Settings:
    obj = ctx.obj or {}
    try:
        s = load_settings(obj.get("config"), LOG_LEVEL=obj.get("log_level"), **overrides)
    except (OSError, ValueError) as e:
        typer.echo(f"error: {e}", err=True)
        raise typer.Exit(EXIT_INPUT)
    setup_logging(s.LOG_LEVEL, s.LOG_FILE)
    return s


@contextmanager
def _guard():
    """Map failures to exit codes: 2 for unreadable or invalid input, 1 for data errors."""
    try:
        yield
    except (SchemaError, OSError) as e:
        typer.echo(f"error: {e}", err=True)
        raise typer.Exit(EXIT_INPUT)
    except ValidationError as e:
        typer.echo(f"error: {e}", err=True)
        raise typer.Exit(EXIT_INPUT)
    except (TabCanonError, ValueError) as e:
        typer.echo(f"error: {e}", err=True)
        raise typer.Exit(EXIT_DATA)


def _emit_table(table: TableAnnotation, out: Optional[Path]):
    if out is None:
        typer.echo(table.model_dump_json(indent=2, exclude_none=True))
    else:
        save_table(table, out)


def _emit_text(text: str, out: Optional[Path]):
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")


def _csv(rows: List[Dict[str, Any]]) -> str:
    buf = io.StringIO()
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: "" if v is None else (f"{v:.4f}" if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


@app.command()
def align(ctx: typer.Context,
          table: Path = typer.Argument(..., help="table JSON or HTML markup"),
          tokens: Path = typer.Argument(..., help="page character tokens JSON"),
          out: Optional[Path] = typer.Option(None, "-o", "--out"),
          report: Optional[Path] = typer.Option(None, "--report"),
          match: Optional[float] = typer.Option(None, "--match"),
          mismatch: Optional[float] = typer.Option(None, "--mismatch"),
          gap: Optional[float] = typer.Option(None, "--gap"),
          band: Optional[int] = typer.Option(None, "--band")):
    """Attach text boxes to cells by aligning markup text with page characters."""
    s = _settings(ctx, MATCH_SCORE=match, MISMATCH_SCORE=mismatch, GAP_SCORE=gap, ALIGN_BAND=band)
    with _guard():
        t, r = align_table_text(load_any_table(table), load_tokens(tokens),
                                Scoring(s.MATCH_SCORE, s.MISMATCH_SCORE, s.GAP_SCORE), s.ALIGN_BAND)
        _emit_table(t, out)
        if report:
            save_report(r, report)


@app.command()
def complete(ctx: typer.Context,
             table: Path = typer.Argument(...),
             out: Optional[Path] = typer.Option(None, "-o", "--out")):
    """Derive row, column, table and grid boxes from cell text boxes."""
    _settings(ctx)
    with _guard():
        _emit_table(complete_table(load_any_table(table)), out)


@app.command()
def canonicalize(ctx: typer.Context,
                 table: Path = typer.Argument(...),
                 out: Optional[Path] = typer.Option(None, "-o", "--out"),
                 report: Optional[Path] = typer.Option(None, "--report")):
    """Infer headers and projected row headers and merge oversegmented cells."""
    _settings(ctx)
    with _guard():
        t, r = canonicalize_table(load_any_table(table))
        _emit_table(t, out)
        if report:
            save_report(r, report)


@app.command()
def qc(ctx: typer.Context,
       table: Path = typer.Argument(..., help="completed table JSON"),
       tokens: Path = typer.Option(..., "--tokens", help="page tokens JSON"),
       words: Optional[Path] = typer.Option(None, "--words", help="word tokens for the containment filter"),
       report: Optional[Path] = typer.Option(None, "--report"),
       max_edit: Optional[float] = typer.Option(None, "--max-edit"),
       min_containment: Optional[float] = typer.Option(None, "--min-containment"),
       max_objects: Optional[int] = typer.Option(None, "--max-objects")):
    """Run the quality filters; a rejection is a verdict, not a failure."""
    s = _settings(ctx, MAX_EDIT_DISTANCE=max_edit, MIN_WORD_CONTAINMENT=min_containment, MAX_OBJECTS=max_objects)
    with _guard():
        thresholds = QCThresholds(s.MAX_EDIT_DISTANCE, s.MIN_WORD_CONTAINMENT, s.MAX_OBJECTS, s.TOKEN_OVERLAP)
        r = run_qc(load_any_table(table), load_tokens(tokens), load_tokens(words) if words else None, thresholds)
        if report:
            save_report(r, report)
        else:
            typer.echo(r.model_dump_json(indent=2))
    log.info("qc verdict %s", r.verdict)


@app.command()
def dilate(ctx: typer.Context,
           table: Path = typer.Argument(..., help="completed table JSON"),
           out: Optional[Path] = typer.Option(None, "-o", "--out", help="structure objects JSON"),
           detection: Optional[Path] = typer.Option(None, "--detection", help="page-level table object JSON")):
    """Emit structure objects from dilated rows and columns."""
    _settings(ctx)
    with _guard():
        t = load_any_table(table)
        objects = dilate_table(t)
        if out is None:
            typer.echo(dump_json([o.model_dump(mode="json") for o in objects]), nl=False)
        else:
            save_objects(objects, out)
        if detection:
            save_objects([detection_object(t)], detection)


@app.command()
def survey(ctx: typer.Context,
           directory: Path = typer.Argument(..., help="directory of table JSON or markup files"),
           fmt: str = typer.Option("json", "--format", help="json|csv"),
           canonical: bool = typer.Option(False, "--canonicalize", help="canonicalize every table first"),
           out: Optional[Path] = typer.Option(None, "-o", "--out")):
    """Count tables with projected row headers and how many of those are split across cells."""
    _settings(ctx)
    with _guard():
        if not directory.is_dir():
            raise FileNotFoundError(f"not a directory: {directory}")
        tables = (load_any_table(p) for p in table_files(directory).values())
        if canonical:
            tables = (canonicalize_table(t)[0] for t in tables)
        counts = survey_oversegmentation(tables).as_dict()
        _emit_text(_csv([counts]) if fmt == "csv" else dump_json(counts), out)


@app.command()
def score(ctx: typer.Context,
          gt: Path = typer.Option(..., "--gt", help="ground-truth directory"),
          pred: Path = typer.Option(..., "--pred", help="prediction directory (tables or objects)"),
          metric_names: str = typer.Option(",".join(METRICS), "--metrics"),
          fmt: str = typer.Option("csv", "--format", help="json|csv"),
          out: Optional[Path] = typer.Option(None, "-o", "--out")):
    """Score predictions per complexity group."""
    s = _settings(ctx)
    try:
        chosen = parse_metrics(metric_names)
    except ValueError as e:
        raise typer.BadParameter(str(e), param_hint="--metrics")
    with _guard():
        thresholds = AssemblyThresholds(s.CHILD_OVERLAP, s.SPAN_COVERAGE_MIN, s.TOKEN_OVERLAP)
        rows = aggregate(score_directories(gt, pred, chosen, thresholds), chosen)
        _emit_text(_csv(rows) if fmt == "csv" else dump_json(rows), out)


@app.command()
def assemble(ctx: typer.Context,
             objects: Path = typer.Argument(..., help="objects JSON"),
             tokens: Path = typer.Option(..., "--tokens"),
             out: Optional[Path] = typer.Option(None, "-o", "--out"),
             report: Optional[Path] = typer.Option(None, "--report")):
    """Build a table from detected objects."""
    s = _settings(ctx)
    with _guard():
        thresholds = AssemblyThresholds(s.CHILD_OVERLAP, s.SPAN_COVERAGE_MIN, s.TOKEN_OVERLAP)
        t, r = assemble_objects(load_objects(objects), load_tokens(tokens), thresholds)
        _emit_table(t, out)
        if report:
            save_report(r, report)


@app.command()
def pipeline(ctx: typer.Context,
             input_dir: Path = typer.Argument(..., help="directory with <name>.table.json|.html and <name>.tokens.json"),
             out_dir: Path = typer.Option(..., "-o", "--out"),
             stages: Optional[str] = typer.Option(None, "--stages", help="comma-separated stage names"),
             jobs: Optional[int] = typer.Option(None, "--jobs"),
             max_edit: Optional[float] = typer.Option(None, "--max-edit"),
             min_containment: Optional[float] = typer.Option(None, "--min-containment"),
             max_objects: Optional[int] = typer.Option(None, "--max-objects"),
             metrics_file: Optional[Path] = typer.Option(None, "--metrics-file")):
    """Run the stage sequence over a directory and write a manifest. Rejected tables do not fail the run."""
    s = _settings(ctx, PIPELINE_STAGES=stages, JOBS=jobs, MAX_EDIT_DISTANCE=max_edit,
                  MIN_WORD_CONTAINMENT=min_containment, MAX_OBJECTS=max_objects)
    with _guard():
        manifest = PipelineManager(s).run(input_dir, out_dir)
        if metrics_file:
            write_metrics(metrics_file)
    typer.echo(json.dumps({"accepted": manifest["accepted"], "rejected": manifest["rejected"]}))
