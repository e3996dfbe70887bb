"""
Run Dependencies - per-command context shared by the CLI and sweeps.

Collects the parameters, configs, seed and output files of one command so
that every written file can be accompanied by a manifest for exact re-runs.
"""

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import __version__
from .config import CSV_SCHEMA_VERSION
from .models import RunManifest


@dataclass
class RunDeps:
    """Runtime context of one CLI command.

    Attributes:
        command: Subcommand name (threshold, table1, optimize, ...)
        params: Parsed flags that define the problem
        configs: Numerical configs in effect (dumped pydantic models)
        seed: Root seed when the command samples
        started: Monotonic start time for wall_time
        output_paths: Files written so far (deduped, in write order)
        csv_schema: Schema tag of the CSV this command writes, if any
    """
    command: str
    params: dict = field(default_factory=dict)
    configs: dict = field(default_factory=dict)
    seed: Optional[int] = None
    started: float = field(default_factory=time.monotonic)
    output_paths: list[str] = field(default_factory=list)
    csv_schema: Optional[str] = None

    def has_outputs(self) -> bool:
        return bool(self.output_paths)

    def add_output(self, path: str) -> None:
        """Record a written file (deduped)."""
        if path and path not in self.output_paths:
            self.output_paths.append(path)

    def add_config(self, name: str, config) -> None:
        self.configs[name] = config.model_dump() if hasattr(config, "model_dump") else config

    def use_csv_schema(self, name: str) -> None:
        self.csv_schema = f"{name}/{CSV_SCHEMA_VERSION}"

    def manifest(self) -> RunManifest:
        return RunManifest(
            command=self.command,
            params=self.params,
            configs=self.configs,
            seed=self.seed,
            tool_version=__version__,
            wall_time=time.monotonic() - self.started,
            output_paths=list(self.output_paths),
            csv_schema=self.csv_schema,
        )

    def write_manifest(self, output: str) -> str:
        """Write ``<output>.manifest.json`` next to an output file and return its path."""
        path = f"{output}.manifest.json"
        Path(path).write_text(json.dumps(self.manifest().model_dump(mode="json"), indent=2, sort_keys=True) + "\n")
        return path
