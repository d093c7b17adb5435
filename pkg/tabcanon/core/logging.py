import logging, json, sys
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Optional


class JsonFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        data = {
            "level": record.levelname,
            "name": record.name,
            "msg": record.getMessage(),
        }
        if record.exc_info:
            data["exc_info"] = self.formatException(record.exc_info)
        return json.dumps(data, ensure_ascii=False)


def setup_logging(level: str = "INFO", log_file: Optional[str] = None):
    root = logging.getLogger()
    root.setLevel(getattr(logging, level.upper(), logging.INFO))

    # replace our own handlers on repeated calls
    for h in list(root.handlers):
        if getattr(h, "_tabcanon", False):
            root.removeHandler(h)
            h.close()

    fmt = JsonFormatter()
    # stderr keeps JSON/CSV reports on stdout parseable
    sh = logging.StreamHandler(sys.stderr)
    sh.setFormatter(fmt)
    sh._tabcanon = True
    root.addHandler(sh)

    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        fh = RotatingFileHandler(log_file, maxBytes=2_000_000, backupCount=3, encoding="utf-8")
        fh.setFormatter(fmt)
        fh._tabcanon = True
        root.addHandler(fh)
