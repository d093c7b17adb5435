from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic import Field, field_validator, model_validator
from dotenv import dotenv_values
from pathlib import Path
from typing import Any, List, Optional, Union
import json, logging

ENV_PREFIX = "TABCANON_"
DEFAULT_STAGES = ["align", "complete", "canonicalize", "complete", "qc", "dilate"]
KNOWN_STAGES = ("align", "complete", "canonicalize", "qc", "dilate", "tighten", "assemble")


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix=ENV_PREFIX, env_file=".env", env_file_encoding="utf-8",
                                      case_sensitive=False, extra="ignore")

    LOG_LEVEL: str = "INFO"
    LOG_FILE: Optional[str] = None

    # alignment
    MATCH_SCORE: float = 2.0
    MISMATCH_SCORE: float = -1.0
    GAP_SCORE: float = -1.0
    ALIGN_BAND: Optional[int] = Field(default=None, ge=0)

    # quality control
    MAX_EDIT_DISTANCE: float = Field(default=0.05, ge=0.0, le=1.0)
    MIN_WORD_CONTAINMENT: float = Field(default=0.9, ge=0.0, le=1.0)
    MAX_OBJECTS: int = Field(default=100, ge=0)

    # overlap rules
    TOKEN_OVERLAP: float = Field(default=0.5, gt=0.0, le=1.0)
    CHILD_OVERLAP: float = Field(default=0.5, gt=0.0, le=1.0)
    SPAN_COVERAGE_MIN: float = Field(default=0.25, gt=0.0, le=1.0)

    PIPELINE_STAGES: Union[List[str], str] = Field(default_factory=lambda: list(DEFAULT_STAGES))
    JOBS: int = Field(default=1, ge=1)

    @field_validator("LOG_LEVEL")
    @classmethod
    def valid_level(cls, v: str) -> str:
        v2 = v.upper().strip()
        if not isinstance(logging.getLevelName(v2), int):
            raise ValueError(f"LOG_LEVEL must be a logging level name, got {v!r}")
        return v2

    @field_validator("PIPELINE_STAGES", mode="before")
    @classmethod
    def parse_stages(cls, v):
        # Accept JSON array or comma-separated string
        if isinstance(v, (list, tuple)):
            return [str(x).strip() for x in v]
        s = str(v).strip()
        if not s:
            return list(DEFAULT_STAGES)
        if s.startswith("["):
            try:
                arr = json.loads(s)
                if isinstance(arr, list):
                    return [str(x).strip() for x in arr]
            except Exception:
                pass
        return [x.strip() for x in s.split(",") if x.strip()]

    @field_validator("PIPELINE_STAGES")
    @classmethod
    def stages_known(cls, v: List[str]) -> List[str]:
        unknown = [s for s in v if s not in KNOWN_STAGES]
        if unknown:
            raise ValueError(f"unknown pipeline stage(s) {unknown}; known: {list(KNOWN_STAGES)}")
        return v

    @model_validator(mode="after")
    def scores_ok(self):
        if not (self.MATCH_SCORE > 0 >= self.MISMATCH_SCORE and self.GAP_SCORE <= 0):
            raise ValueError("alignment scores must satisfy MATCH_SCORE > 0 >= MISMATCH_SCORE, GAP_SCORE")
        return self


def load_settings(path: Optional[Path] = None, **overrides: Any) -> Settings:
    """Settings from the environment, then a ``KEY=value`` file, then explicit overrides.

    Keys in the file may carry the ``TABCANON_`` prefix or not. ``None``
    overrides are ignored so unset CLI flags fall through.
    """
    values: dict = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"config file not found: {path}")
        for key, raw in dotenv_values(path).items():
            name = key.upper()
            if name.startswith(ENV_PREFIX):
                name = name[len(ENV_PREFIX):]
            if name not in Settings.model_fields:
                raise ValueError(f"{path}: unknown setting {key!r}")
            if raw is not None:
                values[name] = raw
    values.update({k: v for k, v in overrides.items() if v is not None})
    return Settings(**values)
