import math

from checks.stats import clt_test, ks_distance, normal_quantile_sample
from services.scenario import parse_int_list
from .base_suite import BaseSuite, CheckOutcome

DEFAULT_SCALES = (256, 1024, 4096)


class CLTSuite(BaseSuite):
    """KS distance of S_n(Y)/sqrt(n) to the standard normal along a grid of scales."""

    name = "clt"

    def run(self) -> None:
        scales = self.option("scales", DEFAULT_SCALES, parse_int_list)
        trials = self.trials

        def self_test() -> CheckOutcome:
            size = max(trials, 1)
            observed = ks_distance(normal_quantile_sample(size))
            expected = 0.5 / size
            return CheckOutcome(
                passed=math.isclose(observed, expected, rel_tol=1e-6),
                observed=observed,
                expected=expected,
            )

        self.execute_check("ks_self_test", "a", self_test)

        reports = []
        for n in scales:
            report = self.compute(
                "ks_below_threshold",
                "a",
                lambda n=n: clt_test(self.config, n, trials, workers=self.workers),
            )
            if report is None:
                return
            reports.append(report)

        self.add_csv(
            "clt.csv",
            [
                "n",
                "trials",
                "ks_distance",
                "ks_band",
                "null_band",
                "mean",
                "mean_se",
                "variance",
            ],
            [
                (
                    r.n,
                    r.trials,
                    r.ks,
                    r.ks_band,
                    r.null_band,
                    r.mean.estimate,
                    r.mean.standard_error,
                    r.variance,
                )
                for r in reports
            ],
        )
        self.add_json("clt.json", {"scales": [r.to_dict() for r in reports]})

        if not reports:
            return
        final = reports[-1]
        self.execute_check(
            "ks_below_threshold",
            "a",
            lambda: CheckOutcome(
                passed=final.passed,
                observed=final.ks,
                expected=final.threshold,
                detail={"n": final.n},
            ),
        )

        def nonincreasing() -> CheckOutcome:
            steps = [
                (a.n, b.n, b.ks - a.ks) for a, b in zip(reports, reports[1:])
            ]
            band = final.ks_band
            return CheckOutcome(
                passed=all(rise <= band for _, _, rise in steps),
                observed=max((rise for _, _, rise in steps), default=0.0),
                expected=band,
                detail={"ks": [r.ks for r in reports]},
            )

        self.execute_check("ks_nonincreasing", "a", nonincreasing)
