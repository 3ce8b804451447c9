from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

from services.artifact_writer import Artifact, CsvArtifact, JsonArtifact
from services.scenario import Scenario
from utils.errors import LabError
from utils.logger import get_event_logger, get_logger
from utils.metrics import metrics

CAPACITY_KINDS = ("capacity", "enumeration_budget")


@dataclass(frozen=True)
class CheckOutcome:
    passed: bool
    observed: Any = None
    expected: Any = None
    detail: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class CheckRecord:
    suite: str
    name: str
    claim: str
    passed: bool
    observed: Any = None
    expected: Any = None
    detail: Dict[str, Any] = field(default_factory=dict)
    error: Optional[Dict[str, Any]] = None

    @property
    def capacity_failure(self) -> bool:
        return self.error is not None and self.error.get("kind") in CAPACITY_KINDS

    def to_dict(self) -> Dict[str, Any]:
        payload = {
            "suite": self.suite,
            "name": self.name,
            "claim": self.claim,
            "passed": self.passed,
            "observed": self.observed,
            "expected": self.expected,
            "detail": dict(sorted(self.detail.items())),
        }
        if self.error is not None:
            payload["error"] = self.error
        return payload


@dataclass
class SuiteResult:
    suite: str
    checks: List[CheckRecord]
    artifacts: Dict[str, Artifact]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)


class BaseSuite:
    """Base class providing common suite functionality.

    - Centralized logger and bound event logger per suite
    - Check recording with LabError -> failed check conversion
    - Artifact collection (written by the scenario runner)
    - Run timing and metrics
    """

    name = "base"

    def __init__(self, scenario: Scenario, logger_name: Optional[str] = None) -> None:
        self.scenario = scenario
        self.config = scenario.config
        self.logger = get_logger(logger_name or f"suite_{self.name}")
        self.events = get_event_logger(
            logger_name or f"suite_{self.name}", scenario=scenario.name, suite=self.name
        )
        self.checks: List[CheckRecord] = []
        self.artifacts: Dict[str, Artifact] = {}

    # ----- Options -----
    def option(self, key: str, default: Any, cast: Callable[[str], Any] = str) -> Any:
        return self.scenario.option(self.name, key, default, cast)

    @property
    def trials(self) -> int:
        return self.option("trials", self.scenario.trials, int)

    @property
    def workers(self) -> int:
        return self.scenario.workers

    # ----- Artifacts -----
    def add_csv(self, name: str, header, rows) -> None:
        self.artifacts[name] = CsvArtifact(list(header), [tuple(row) for row in rows])

    def add_json(self, name: str, payload: Any) -> None:
        self.artifacts[name] = JsonArtifact(payload)

    # ----- Checks -----
    def record_check(self, name: str, claim: str, outcome: CheckOutcome) -> CheckRecord:
        record = CheckRecord(
            suite=self.name,
            name=name,
            claim=claim,
            passed=bool(outcome.passed),
            observed=outcome.observed,
            expected=outcome.expected,
            detail=dict(outcome.detail),
        )
        self._store(record)
        return record

    def record_error(self, name: str, claim: str, exc: LabError) -> CheckRecord:
        record = CheckRecord(
            suite=self.name, name=name, claim=claim, passed=False, error=exc.to_dict()
        )
        self.logger.warning(
            f"check {name} could not be evaluated: {exc}"
            + (f" (hint: {exc.hint})" if exc.hint else "")
        )
        self._store(record)
        return record

    def _store(self, record: CheckRecord) -> None:
        self.checks.append(record)
        outcome = "passed" if record.passed else ("error" if record.error else "failed")
        metrics.checks_total.labels(suite=self.name, outcome=outcome).inc()
        self.events.info("check_recorded", check=record.name, claim=record.claim, outcome=outcome)

    def execute_check(
        self, name: str, claim: str, func: Callable[[], CheckOutcome]
    ) -> Tuple[bool, Optional[CheckOutcome]]:
        """Evaluate one check; a LabError becomes a failed check carrying its hint.

        Returns (passed, outcome)
        """
        try:
            outcome = func()
        except LabError as exc:
            self.record_error(name, claim, exc)
            return False, None
        self.record_check(name, claim, outcome)
        return outcome.passed, outcome

    def compute(self, name: str, claim: str, func: Callable[[], Any]) -> Optional[Any]:
        """Run an expensive step shared by several checks; failures are recorded as ``name``."""
        try:
            return func()
        except LabError as exc:
            self.record_error(name, claim, exc)
            return None

    # ----- Lifecycle -----
    def run(self) -> None:
        raise NotImplementedError

    def execute(self) -> SuiteResult:
        started = time.perf_counter()
        metrics.suites_in_progress.inc()
        self.events.info("suite_started", seed=self.scenario.seed, trials=self.scenario.trials)
        try:
            self.run()
        finally:
            metrics.suites_in_progress.dec()
        duration = time.perf_counter() - started
        result = SuiteResult(self.name, list(self.checks), dict(self.artifacts))
        status = "passed" if result.passed else "failed"
        metrics.suite_runs_total.labels(suite=self.name, status=status).inc()
        metrics.suite_duration_seconds.labels(suite=self.name).observe(duration)
        self.events.info(
            "suite_finished", status=status, checks=len(result.checks), duration_seconds=duration
        )
        self.logger.info(
            f"{self.name} finished: {sum(c.passed for c in result.checks)}/"
            f"{len(result.checks)} checks passed in {duration:.2f}s",
            extra={"suite": self.name, "scenario": self.scenario.name, "duration_seconds": duration},
        )
        return result
