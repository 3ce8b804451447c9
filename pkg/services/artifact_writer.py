"""Deterministic CSV/JSON artifacts.

Artifacts never carry timestamps, hostnames or worker counts, so a rerun with
the same scenario and seed reproduces them byte for byte.  Rationals are
written as ``"p/q"`` strings; CSV uses '.' decimals and '\\n' line ends.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, List, Sequence, Union

import numpy as np

from utils.logger import get_logger

logger = get_logger("artifact_writer")


def to_jsonable(value: Any) -> Any:
    if isinstance(value, Fraction):
        return str(value) if value.denominator != 1 else value.numerator
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value) or math.isinf(value):
            return str(value)
        return value
    if isinstance(value, int):
        return value
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [to_jsonable(v) for v in value]
    if hasattr(value, "to_dict"):
        return to_jsonable(value.to_dict())
    return str(value)


def dumps(payload: Any) -> str:
    return json.dumps(to_jsonable(payload), indent=2, sort_keys=True) + "\n"


def _cell(value: Any) -> Any:
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return int(value)
    return value


@dataclass(frozen=True)
class CsvArtifact:
    header: Sequence[str]
    rows: Sequence[Sequence[Any]]


@dataclass(frozen=True)
class JsonArtifact:
    payload: Any


Artifact = Union[CsvArtifact, JsonArtifact]


class ArtifactWriter:
    """Single writer for one output directory."""

    def __init__(self, directory: Union[str, Path]) -> None:
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.written: List[str] = []

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        path = self.directory / name
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_cell(v) for v in row])
        self.written.append(name)
        return path

    def write_json(self, name: str, payload: Any) -> Path:
        path = self.directory / name
        with path.open("w", encoding="utf-8", newline="\n") as handle:
            handle.write(dumps(payload))
        self.written.append(name)
        return path

    def write(self, name: str, artifact: Artifact) -> Path:
        if isinstance(artifact, CsvArtifact):
            return self.write_csv(name, artifact.header, artifact.rows)
        return self.write_json(name, artifact.payload)
