#!/usr/bin/env python3
"""
Batch runner for the shipped scenarios.

Runs every scenario under scenarios/ once, then merges the summaries into a
report. Exits nonzero when any check fails.
"""

import sys
import time
from pathlib import Path

from config import config
from services.report_builder import emit_report
from services.scenario import load_scenario
from services.scenario_runner import EXIT_CAPACITY, EXIT_INVALID_INPUT, run_scenario
from utils.errors import CapacityError, LabError
from utils.logger import get_logger

logger = get_logger("run_scenarios")

SCENARIO_DIR = Path(__file__).resolve().parent / "scenarios"


def run_all(output_root: Path):
    """Run all shipped scenarios once"""
    logger.info("Starting batch scenario run")
    start_time = time.time()
    results = {}
    summaries = []

    for path in sorted(SCENARIO_DIR.glob("*.scn")):
        name = path.stem
        try:
            scenario = load_scenario(str(path))
            directory = output_root / scenario.name
            results[name] = run_scenario(scenario, directory)
            summaries.append(directory / "summary.json")
        except CapacityError as e:
            logger.error(f"Scenario {name} exceeded a budget: {e}")
            results[name] = EXIT_CAPACITY
        except LabError as e:
            logger.error(f"Scenario {name} is invalid: {e}")
            results[name] = EXIT_INVALID_INPUT
        logger.info(f"Scenario {name} finished with exit {results[name]}")

    if summaries:
        emit_report(summaries, output_root / "report")
    duration = time.time() - start_time
    logger.info(f"Batch run completed in {duration:.2f} seconds: {results}")
    return max(results.values(), default=0), results


if __name__ == "__main__":
    code, _ = run_all(Path(config.OUTPUT_DIR))
    if code == 0:
        logger.info("All scenarios passed")
    else:
        logger.error("Batch run had failures")
    sys.exit(code)
