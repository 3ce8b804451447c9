"""Scenario files.

A scenario is a flat ``key = value`` file; ``#`` starts a comment and blank
lines are ignored.  Suite options use dotted keys (``nontight.mode = full``).
Numbers are decimal strings and are parsed exactly.

    name        = nontight-n64          (required)
    suite       = nontight             (required: clt|nontight|variance|mixing|moments|divergence|all)
    sequence    = explicit:2,64,65600  (required, see parse_sequence)
    truncation  = 2                    (default: every level)
    noise       = gaussian             (gaussian|rademacher)
    noise_stream = 0
    seed        = 0
    trials      = 1000
    workers     = 1
    output      = output/runs/nontight-n64
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, Mapping, Optional, Tuple, TypeVar

from config import settings
from process.field import NOISE_LAWS, NoiseSpec, ProcessConfig
from process.sequence import ensure_usable, parse_sequence
from utils.errors import LabError, ScenarioError
from utils.logger import get_logger

logger = get_logger("scenario")

T = TypeVar("T")

SUITE_NAMES = ("clt", "nontight", "variance", "mixing", "moments", "divergence")
SUITE_SELECTORS = SUITE_NAMES + ("all",)
TOP_LEVEL_KEYS = (
    "name",
    "suite",
    "sequence",
    "truncation",
    "noise",
    "noise_stream",
    "seed",
    "trials",
    "workers",
    "output",
)
REQUIRED_KEYS = ("name", "suite", "sequence")


def _nonnegative_int(text: str) -> int:
    value = int(text.strip())
    if value < 0:
        raise ValueError(f"{value} is negative")
    return value


def parse_int_list(text: str) -> Tuple[int, ...]:
    return tuple(int(part) for part in text.split(",") if part.strip())


def parse_fraction_list(text: str) -> Tuple[Fraction, ...]:
    return tuple(Fraction(part.strip()) for part in text.split(",") if part.strip())


@dataclass(frozen=True)
class Scenario:
    name: str
    suite: str
    config: ProcessConfig
    trials: int = 1000
    workers: int = 1
    output: Optional[str] = None
    options: Mapping[str, str] = field(default_factory=dict)
    lines: Mapping[str, int] = field(default_factory=dict)
    source: Optional[str] = None

    @property
    def seed(self) -> int:
        return self.config.seed

    @property
    def suites(self) -> Tuple[str, ...]:
        return SUITE_NAMES if self.suite == "all" else (self.suite,)

    def option(self, suite: str, key: str, default: T, cast: Callable[[str], T] = str) -> T:
        """Typed suite option; a bad value is reported with its line and key."""
        dotted = f"{suite}.{key}"
        if dotted not in self.options:
            return default
        try:
            return cast(self.options[dotted])
        except (ValueError, ZeroDivisionError, LabError) as exc:
            raise ScenarioError(
                f"invalid value '{self.options[dotted]}': {exc}",
                line=self.lines.get(dotted),
                field=dotted,
            ) from exc

    def output_dir(self, override: Optional[str] = None) -> Path:
        return Path(override or self.output or Path(settings.OUTPUT_DIR) / self.name)

    def with_suite(self, suite: str) -> Scenario:
        if suite not in SUITE_SELECTORS:
            raise ScenarioError(f"unknown suite '{suite}'", field="suite")
        return Scenario(
            self.name,
            suite,
            self.config,
            self.trials,
            self.workers,
            self.output,
            self.options,
            self.lines,
            self.source,
        )

    def to_json(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "suite": self.suite,
            "config": self.config.to_json(),
            "trials": self.trials,
            "workers": self.workers,
            "options": dict(sorted(self.options.items())),
        }


def _split_lines(text: str) -> Iterable[Tuple[int, str, str]]:
    seen: Dict[str, int] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError("expected 'key = value'", line=number)
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not key:
            raise ScenarioError("missing key before '='", line=number)
        if key in seen:
            raise ScenarioError(
                f"duplicate key (first set on line {seen[key]})", line=number, field=key
            )
        seen[key] = number
        yield number, key, value


def _typed(values: Mapping[str, str], lines: Mapping[str, int], key: str, cast, default):
    if key not in values:
        return default
    try:
        return cast(values[key])
    except (ValueError, ZeroDivisionError) as exc:
        raise ScenarioError(
            f"invalid value '{values[key]}': {exc}", line=lines[key], field=key
        ) from exc


def parse_scenario(text: str, source: Optional[str] = None) -> Scenario:
    values: Dict[str, str] = {}
    lines: Dict[str, int] = {}
    options: Dict[str, str] = {}
    for number, key, value in _split_lines(text):
        lines[key] = number
        if "." in key:
            suite = key.split(".", 1)[0]
            if suite not in SUITE_NAMES:
                raise ScenarioError(f"unknown suite prefix '{suite}'", line=number, field=key)
            options[key] = value
        elif key in TOP_LEVEL_KEYS:
            values[key] = value
        else:
            raise ScenarioError("unknown key", line=number, field=key)

    for key in REQUIRED_KEYS:
        if not values.get(key):
            raise ScenarioError("required key is missing", field=key)

    suite = values["suite"]
    if suite not in SUITE_SELECTORS:
        raise ScenarioError(
            f"unknown suite '{suite}' (expected one of {', '.join(SUITE_SELECTORS)})",
            line=lines["suite"],
            field="suite",
        )
    try:
        seq = parse_sequence(values["sequence"])
    except LabError as exc:
        exc.details.setdefault("line", lines["sequence"])
        raise
    ensure_usable(seq)

    noise_law = values.get("noise", NOISE_LAWS[0])
    if noise_law not in NOISE_LAWS:
        raise ScenarioError(
            f"unknown noise law '{noise_law}'", line=lines["noise"], field="noise"
        )
    truncation = _typed(values, lines, "truncation", _nonnegative_int, seq.K)
    if truncation > seq.K:
        raise ScenarioError(
            f"truncation {truncation} exceeds the {seq.K} configured levels",
            line=lines["truncation"],
            field="truncation",
        )
    config = ProcessConfig(
        seq=seq,
        truncation=truncation,
        noise=NoiseSpec(noise_law, _typed(values, lines, "noise_stream", _nonnegative_int, 0)),
        seed=_typed(values, lines, "seed", _nonnegative_int, 0),
    )
    workers = _typed(values, lines, "workers", _nonnegative_int, settings.WORKERS)
    scenario = Scenario(
        name=values["name"],
        suite=suite,
        config=config,
        trials=_typed(values, lines, "trials", _nonnegative_int, 1000),
        workers=max(1, workers),
        output=values.get("output"),
        options=options,
        lines=lines,
        source=source,
    )
    logger.debug(f"parsed scenario {scenario.name} ({suite}) from {source or '<text>'}")
    return scenario


def load_scenario(path: str) -> Scenario:
    file_path = Path(path)
    try:
        text = file_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
    return parse_scenario(text, source=str(file_path))
