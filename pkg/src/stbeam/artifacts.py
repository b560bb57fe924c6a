"""
Output files of a run: CSV tables and the JSON run manifest.

Every CSV is UTF-8 with LF line endings, a header row whose column names carry
their units, and floats written with 17 significant digits. The manifest lists
each emitted file with its SHA-256, so a rerun can be verified byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd
from pydantic import BaseModel, Field

from stbeam.constants import APP_NAME, CSV_FLOAT_FORMAT
from stbeam.field_engine import SPEED_OF_LIGHT

logger = logging.getLogger(__name__)


class OutputFile(BaseModel):
    name: str = Field(description="File name relative to the manifest")
    sha256: str
    bytes: int


class RunManifest(BaseModel):
    """Provenance record written next to every run's outputs."""

    tool: str = APP_NAME
    tool_version: str
    command: str
    scenario: str
    config_digest: str = Field(description="SHA-256 of the expanded scenario and delay model")
    model: str
    seed: int
    constants: Dict[str, float] = Field(default_factory=lambda: {"speed_of_light_m_per_s": SPEED_OF_LIGHT})
    parameters: Dict[str, Any] = Field(default_factory=dict, description="Derived run parameters, e.g. cut instants")
    outputs: List[OutputFile] = Field(default_factory=list)


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def scenario_digest(expanded: Dict[str, Any], model: str) -> str:
    payload = canonical_json({"scenario": expanded, "model": model})
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def file_sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


class ArtifactWriter:
    """Writes ``<prefix>_<suffix>`` files and remembers them for the manifest."""

    def __init__(self, prefix: str):
        self.prefix = prefix
        self.written: List[Path] = []

    def path_for(self, suffix: str) -> Path:
        return Path(f"{self.prefix}_{suffix}")

    def write_csv(self, suffix: str, frame: pd.DataFrame) -> Path:
        path = self.path_for(suffix)
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(
            path,
            index=False,
            float_format=CSV_FLOAT_FORMAT,
            lineterminator="\n",
            encoding="utf-8",
        )
        self.written.append(path)
        logger.info("Wrote %s (%d rows)", path, len(frame))
        return path

    def write_manifest(self, manifest: RunManifest, parameters: Optional[Dict[str, Any]] = None) -> Path:
        """Checksum every file written so far and emit ``<prefix>_manifest.json``."""
        outputs = [OutputFile(name=p.name, sha256=file_sha256(p), bytes=p.stat().st_size) for p in self.written]
        update: Dict[str, Any] = {"outputs": outputs}
        if parameters:
            update["parameters"] = {**manifest.parameters, **parameters}
        manifest = manifest.model_copy(update=update)
        path = self.path_for("manifest.json")
        text = json.dumps(manifest.model_dump(mode="json"), sort_keys=True, indent=2) + "\n"
        path.write_text(text, encoding="utf-8", newline="\n")
        logger.info("Wrote manifest %s listing %d file(s)", path, len(outputs))
        return path
