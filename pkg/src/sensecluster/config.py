"""Engine configuration shared by the service and the CLI."""

from __future__ import annotations

from pathlib import Path

from pydantic import BaseModel, Field, field_validator

from .engine import DEFAULT_TOP_K


class EngineConfig(BaseModel):
    """Paths plus scorer slots plus run knobs. Paths are resolved on the
    machine executing the run (the service host)."""

    graph_nodes: str
    graph_edges: str
    inventory: str
    scorer_v: str = "gloss"
    scorer_nv: str = "gloss"
    scorer_coarse: str = "gloss"
    k: int = Field(default=DEFAULT_TOP_K, ge=1)
    seed: int = 0
    workers: int = Field(default=4, ge=1)
    in_flight: int = Field(default=4, ge=1)
    stopwords: str | None = None
    report: str = "tty"
    explain: bool = False

    @field_validator("report")
    @classmethod
    def _known_report(cls, value: str) -> str:
        if value not in ("tty", "csv", "json"):
            raise ValueError(f"report must be tty|csv|json, got {value!r}")
        return value

    def validate_paths(self) -> None:
        for label, path in (
            ("graph_nodes", self.graph_nodes),
            ("graph_edges", self.graph_edges),
            ("inventory", self.inventory),
            ("stopwords", self.stopwords),
        ):
            if path is not None and not Path(path).is_file():
                from .errors import ConfigError

                raise ConfigError(f"{label} file not found: {path}")
