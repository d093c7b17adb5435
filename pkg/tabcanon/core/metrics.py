from pathlib import Path
from prometheus_client import CollectorRegistry, Counter, write_to_textfile

registry = CollectorRegistry()

tables_processed = Counter("tabcanon_tables_processed", "Tables run through the pipeline", ["verdict"], registry=registry)
tables_rejected = Counter("tabcanon_tables_rejected", "Tables rejected by the pipeline", ["reason"], registry=registry)
canon_merges = Counter("tabcanon_canon_merges", "Cell merges performed by canonicalization", registry=registry)
objects_suppressed = Counter("tabcanon_objects_suppressed", "Detected objects suppressed during assembly", ["category"], registry=registry)


def write_metrics(path: Path):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    write_to_textfile(str(path), registry)
