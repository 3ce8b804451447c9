"""Runs the suites of one scenario and writes its artifacts and summary.json."""

from __future__ import annotations

import time
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from services.artifact_writer import ArtifactWriter
from services.scenario import Scenario, load_scenario
from suites import SUITES
from suites.base_suite import CheckRecord
from utils.logger import get_event_logger, get_logger

logger = get_logger("scenario_runner")

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INVALID_INPUT = 2
EXIT_CAPACITY = 3

SUMMARY_NAME = "summary.json"


def exit_code_for(checks: List[CheckRecord]) -> int:
    if any(check.capacity_failure for check in checks):
        return EXIT_CAPACITY
    if any(not check.passed for check in checks):
        return EXIT_CHECK_FAILED
    return EXIT_OK


def build_summary(scenario: Scenario, checks: List[CheckRecord], artifacts: List[str]) -> Dict[str, Any]:
    return {
        "scenario": scenario.name,
        "suite": scenario.suite,
        "seed": scenario.seed,
        "config": scenario.config.to_json(),
        "trials": scenario.trials,
        "options": dict(sorted(scenario.options.items())),
        "checks": [check.to_dict() for check in checks],
        "passed": all(check.passed for check in checks),
        "exit_code": exit_code_for(checks),
        "artifacts": sorted(artifacts),
    }


def run_scenario(
    scenario: Union[str, Path, Scenario],
    output_dir: Optional[Union[str, Path]] = None,
    workers: Optional[int] = None,
) -> int:
    """Execute every suite the scenario selects; returns the process exit code.

    LabErrors raised outside a check (bad options, unusable sequences)
    propagate to the caller.
    """
    if not isinstance(scenario, Scenario):
        scenario = load_scenario(str(scenario))
    if workers is not None:
        scenario = replace(scenario, workers=max(1, int(workers)))
    directory = scenario.output_dir(None if output_dir is None else str(output_dir))
    events = get_event_logger("scenario_runner", scenario=scenario.name)

    started = time.perf_counter()
    events.info("scenario_started", suite=scenario.suite, seed=scenario.seed)
    checks: List[CheckRecord] = []
    writer = ArtifactWriter(directory)
    for name in scenario.suites:
        result = SUITES[name](scenario).execute()
        checks.extend(result.checks)
        for artifact_name, artifact in sorted(result.artifacts.items()):
            writer.write(artifact_name, artifact)

    summary = build_summary(scenario, checks, writer.written)
    writer.write_json(SUMMARY_NAME, summary)
    code = summary["exit_code"]
    duration = time.perf_counter() - started
    events.info(
        "scenario_finished",
        exit_code=code,
        checks=len(checks),
        failed=sum(not c.passed for c in checks),
        duration_seconds=duration,
    )
    logger.info(
        f"scenario {scenario.name}: {sum(c.passed for c in checks)}/{len(checks)} checks passed, "
        f"exit {code}, artifacts in {directory}"
    )
    return code
