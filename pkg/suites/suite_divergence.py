from checks.stats import transfer_divergence
from .base_suite import BaseSuite, CheckOutcome


class DivergenceSuite(BaseSuite):
    """Per-level lower bounds on E[|g| 1(F_k)]; their sum grows without bound in K."""

    name = "divergence"

    def run(self) -> None:
        K = self.option("K", self.config.truncation, int)
        report = self.compute(
            "divergence_terms", "b", lambda: transfer_divergence(self.config, K)
        )
        if report is None:
            return
        self.add_csv("divergence.csv", ["k", "n_k", "term", "partial_sum"], report.csv_rows())
        self.add_json("divergence.json", report.to_dict())

        self.execute_check(
            "divergence_terms_positive",
            "b",
            lambda: CheckOutcome(passed=report.positive, observed=min(report.terms), expected=0.0),
        )
        self.execute_check(
            "divergence_terms_comparable",
            "b",
            lambda: CheckOutcome(
                passed=report.ratio_ok,
                observed=list(report.terms),
                expected=0.9,
            ),
        )
        self.execute_check(
            "divergence_floor",
            "b",
            lambda: CheckOutcome(
                passed=report.floor_ok,
                observed=min(report.terms),
                expected=report.floor,
                detail={"partial_sum": report.partial_sums[-1]},
            ),
        )
