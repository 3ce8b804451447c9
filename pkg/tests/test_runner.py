"""
Integration tests for the suites and the scenario runner.

Tests cover:
- Exit codes for passing, failing and over-budget scenarios
- Byte-identical artifacts across reruns with the same seed
- Suite checks recorded with their claims
"""

import json
from pathlib import Path

import pytest

from services.scenario import load_scenario, parse_scenario
from services.scenario_runner import (
    EXIT_CAPACITY,
    EXIT_CHECK_FAILED,
    EXIT_OK,
    exit_code_for,
    run_scenario,
)
from suites import SUITES
from suites.base_suite import BaseSuite, CheckOutcome, CheckRecord
from utils.errors import InvalidSequenceError, RangeError

SCENARIO_DIR = Path(__file__).resolve().parents[1] / "scenarios"


def _scenario(suite, *extra, sequence="explicit:2,64,65600"):
    lines = [f"name = test-{suite}", f"suite = {suite}", f"sequence = {sequence}", "seed = 3", *extra]
    return parse_scenario("\n".join(lines) + "\n")


def _summary(directory):
    return json.loads((directory / "summary.json").read_text(encoding="utf-8"))


def _tree_bytes(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())}


@pytest.mark.unit
class TestExitCodes:
    def test_exit_code_for(self):
        ok = CheckRecord("s", "a", "d", True)
        failed = CheckRecord("s", "b", "d", False)
        capacity = CheckRecord("s", "c", "d", False, error={"kind": "enumeration_budget"})

        assert exit_code_for([ok]) == EXIT_OK
        assert exit_code_for([ok, failed]) == EXIT_CHECK_FAILED
        assert exit_code_for([failed, capacity]) == EXIT_CAPACITY

    def test_lab_error_becomes_failed_check(self):
        class Faulty(BaseSuite):
            name = "faulty"

            def run(self):
                def broken():
                    raise RangeError("N must be positive")

                self.execute_check("broken", "c", broken)
                self.execute_check("fine", "c", lambda: CheckOutcome(passed=True))

        result = Faulty(_scenario("variance")).execute()

        assert [c.passed for c in result.checks] == [False, True]
        assert result.checks[0].error["kind"] == "range"
        assert not result.passed


@pytest.mark.integration
class TestScenarioRuns:
    """Full runs of small scenarios."""

    def test_divergence_is_reproducible(self, tmp_path):
        scenario = load_scenario(str(SCENARIO_DIR / "divergence.scn"))

        assert run_scenario(scenario, tmp_path / "a") == EXIT_OK
        assert run_scenario(scenario, tmp_path / "b", workers=4) == EXIT_OK
        assert _tree_bytes(tmp_path / "a") == _tree_bytes(tmp_path / "b")

    def test_mixing_chain(self, tmp_path):
        code = run_scenario(SCENARIO_DIR / "mixing-chain-n8.scn", tmp_path)
        summary = _summary(tmp_path)
        names = {c["name"] for c in summary["checks"]}

        assert code == EXIT_OK
        assert {"oracle_below_level_bound", "bound_chain", "bound_chain_oracle"} <= names
        assert all(c["claim"] == "d" for c in summary["checks"])
        assert "mixing_chain.json" in summary["artifacts"]

    def test_mixing_rate(self, tmp_path):
        assert run_scenario(SCENARIO_DIR / "mixing-rate.scn", tmp_path) == EXIT_OK

        checks = {c["name"]: c for c in _summary(tmp_path)["checks"]}
        assert checks["rate_stable_under_refinement"]["passed"]

    def test_focus_mode_below_k0_is_rejected(self, tmp_path):
        scenario = _scenario(
            "nontight", "nontight.mode = focus", "nontight.level = 2", sequence="delta:0.1"
        )

        with pytest.raises(InvalidSequenceError):
            run_scenario(scenario, tmp_path)

    def test_oracle_over_budget(self, tmp_path):
        code = run_scenario(_scenario("mixing", "mixing.oracle_level = 8"), tmp_path)
        failed = [c for c in _summary(tmp_path)["checks"] if not c["passed"]]

        assert code == EXIT_CAPACITY
        assert [c["name"] for c in failed] == ["oracle_below_level_bound"]
        assert failed[0]["error"]["kind"] == "enumeration_budget"

    def test_variance_without_monte_carlo(self, tmp_path):
        scenario = _scenario(
            "variance", "truncation = 2", "variance.mc_trials = 0", "variance.identity_fields = 3"
        )

        assert run_scenario(scenario, tmp_path) == EXIT_OK
        names = [c["name"] for c in _summary(tmp_path)["checks"]]
        assert "monte_carlo_variance" not in names
        assert "partial_sum_identities" in names

    def test_moments(self, tmp_path):
        assert run_scenario(_scenario("moments"), tmp_path) == EXIT_OK
        assert (tmp_path / "bell.csv").read_text(encoding="utf-8").splitlines()[11] == "10,115975"

    def test_suite_registry(self):
        assert sorted(SUITES) == ["clt", "divergence", "mixing", "moments", "nontight", "variance"]


@pytest.mark.slow
class TestMonteCarloScenarios:
    def test_nontight_level_mode(self, tmp_path):
        scenario = _scenario(
            "nontight", "truncation = 2", "trials = 2000", "nontight.level = 2"
        )

        assert run_scenario(scenario, tmp_path) == EXIT_OK

    def test_nontight_full_scenario(self, tmp_path):
        assert run_scenario(SCENARIO_DIR / "nontight-full.scn", tmp_path) == EXIT_OK

        checks = {c["name"]: c for c in _summary(tmp_path)["checks"]}
        assert checks["window_hit_exceeds_bound"]["passed"]
        assert checks["endpoint_contrast"]["passed"]
