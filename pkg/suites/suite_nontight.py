from fractions import Fraction

from checks.stats import MODE_LEVEL, NONTIGHT_MODES, nontight_prob, threshold_N0
from process.sequence import require_lacunary_from
from utils.errors import ScenarioError
from .base_suite import BaseSuite, CheckOutcome


def _mode(text: str) -> str:
    if text not in NONTIGHT_MODES:
        raise ValueError(f"expected one of {', '.join(NONTIGHT_MODES)}")
    return text


class NonTightSuite(BaseSuite):
    """Window-maximum exceedance of the partial sums against the analytic bounds."""

    name = "nontight"

    def run(self) -> None:
        mode = self.option("mode", MODE_LEVEL, _mode)
        k = self.option("level", min(2, self.config.truncation), int)
        if not 1 <= k <= self.config.truncation:
            raise ScenarioError(
                f"level {k} is not simulated (truncation {self.config.truncation})",
                field="nontight.level",
            )
        if mode != MODE_LEVEL:
            require_lacunary_from(self.config.seq.truncated(self.config.truncation), k)
        threshold = self.option("threshold", Fraction(1), Fraction)
        report = self.compute(
            "window_hit_exceeds_bound",
            "b",
            lambda: nontight_prob(
                self.config,
                k,
                mode,
                threshold,
                self.trials,
                workers=self.workers,
            ),
        )
        if report is None:
            return
        self.add_json("nontight.json", report.to_dict())

        estimate = report.window_hit
        self.execute_check(
            "window_hit_exceeds_bound",
            "b",
            lambda: CheckOutcome(
                passed=report.window_ok,
                observed=estimate.lower(),
                expected=estimate.bound,
                detail={
                    "estimate": estimate.estimate,
                    "standard_error": estimate.standard_error,
                    "trials": estimate.trials,
                    "mode": mode,
                    "n_k": report.n_k,
                },
            ),
        )
        if mode == MODE_LEVEL:
            self.execute_check(
                "level_above_n0",
                "b",
                lambda: CheckOutcome(
                    passed=report.n0_ok, observed=report.n_k, expected=threshold_N0()
                ),
            )
        else:
            self.execute_check(
                "endpoint_contrast",
                "b",
                lambda: CheckOutcome(
                    passed=report.contrast_ok,
                    observed=report.endpoint_contrast,
                    expected=3.0,
                    detail={
                        "endpoint_estimate": report.endpoint_hit.estimate,
                        "window_estimate": estimate.estimate,
                        "intrusion_bound": report.intrusion_bound,
                        "intrusion_rate": report.intrusion_rate,
                    },
                ),
            )
