from fractions import Fraction

from checks.stats import variance_level_exact, variance_monte_carlo, variance_profile
from config import settings
from process.field import eval_transfer_level, sample_level_field
from process.sums import coefficient_map, sum_closed, sum_direct
from services.scenario import parse_int_list
from utils.streams import substream
from .base_suite import BaseSuite, CheckOutcome

DEFAULT_N_VALUES = tuple(2**e for e in range(2, 13))
IDENTITY_LEVELS = (2, 3, 5, 8)
# per-trial relative spread of S_N^2 is about 5.4 at n_k=64, N=256
MONTE_CARLO_TRIALS = 200_000


class VarianceSuite(BaseSuite):
    """Exact variance profile, the split at i(N), partial-sum identities and a Monte Carlo cross-check."""

    name = "variance"

    def run(self) -> None:
        n_values = self.option("n_values", DEFAULT_N_VALUES, parse_int_list)
        if self.option("n_values", None) is None:
            n_values = [N for N in n_values if N >= self.config.seq.levels[0]]
        report = self.compute(
            "variance_ratio_bounded", "c", lambda: variance_profile(self.config, n_values)
        )
        if report is not None:
            self._profile_checks(report)
        self.execute_check("partial_sum_identities", "coboundary", self._identities)
        self.execute_check("closed_form_variance", "c", self._closed_form)

        mc_trials = self.option("mc_trials", MONTE_CARLO_TRIALS, int)
        if mc_trials > 0:
            self.execute_check("monte_carlo_variance", "c", lambda: self._monte_carlo(mc_trials))

    def _profile_checks(self, report) -> None:
        self.add_csv("variance.csv", report.csv_header(), report.csv_rows())
        self.add_json(
            "variance.json",
            {
                "sup_ratio": report.sup_ratio,
                "sup_ratio_N": report.sup_ratio_N,
                "noise_variance": report.noise_variance,
                "split_ok": report.split_ok(),
                "lower_side_ok": report.lower_side_ok(),
                "truncation": report.truncation,
            },
        )
        self.execute_check(
            "variance_ratio_bounded",
            "c",
            lambda: CheckOutcome(
                passed=report.sup_ratio <= settings.VARIANCE_RATIO_BOUND,
                observed=report.sup_ratio,
                expected=settings.VARIANCE_RATIO_BOUND,
                detail={"N": report.sup_ratio_N},
            ),
        )
        self.execute_check(
            "variance_split",
            "c",
            lambda: CheckOutcome(
                passed=report.split_ok(),
                expected=settings.VARIANCE_SPLIT_CONSTANT,
                detail={
                    "worst_lower": max(
                        (float(r.lower_part) / r.lower_reference for r in report.rows),
                        default=0.0,
                    ),
                    "worst_upper": max(
                        (
                            float(r.upper_part) / r.upper_reference
                            for r in report.rows
                            if r.upper_reference > 0
                        ),
                        default=0.0,
                    ),
                },
            ),
        )
        self.execute_check(
            "variance_lower_side",
            "c",
            lambda: CheckOutcome(
                passed=report.lower_side_ok(),
                observed=min((r.ratio_y for r in report.rows), default=None),
                expected=report.noise_variance,
            ),
        )

    def _identities(self) -> CheckOutcome:
        fields_per_level = self.option("identity_fields", 100, int)
        mismatches = []
        compared = 0
        for n in IDENTITY_LEVELS:
            top = min(6 * n * n, 400)
            interval = (1 - 2 * n, top - 1)
            for f in range(fields_per_level):
                rng = substream(self.scenario.seed, "scratch", n, f)
                field = sample_level_field(1, n, interval, rng)
                t0 = eval_transfer_level(field, 0)
                for N in range(1, top + 1):
                    closed = sum_closed(field, n, N)
                    values = (
                        sum_direct(field, n, N),
                        coefficient_map(n, N).contract(field),
                        t0 - eval_transfer_level(field, N),
                    )
                    compared += 1
                    if any(v != closed for v in values):
                        mismatches.append({"n_k": n, "field": f, "N": N})
        return CheckOutcome(
            passed=not mismatches,
            observed=len(mismatches),
            expected=0,
            detail={"compared": compared, "first_mismatches": mismatches[:5]},
        )

    def _closed_form(self) -> CheckOutcome:
        rows = []
        for n in self.config.levels:
            exact = variance_level_exact(n, 2 * n)
            closed = Fraction(4 * n**3 + 2 * n, 3 * n * n)
            ok = exact == closed
            if 4 * n <= settings.COEFFICIENT_MAP_LIMIT:
                ok = ok and Fraction(coefficient_map(n, 2 * n).square_sum(), n * n) == exact
            rows.append({"n_k": n, "exact": exact, "ok": ok})
        return CheckOutcome(passed=all(r["ok"] for r in rows), detail={"levels": rows})

    def _monte_carlo(self, trials: int) -> CheckOutcome:
        n_k = self.option("mc_level", 64, int)
        N = self.option("mc_N", 256, int)
        estimate = variance_monte_carlo(
            n_k, N, trials, self.scenario.seed, workers=self.workers
        )
        relative = abs(estimate.estimate - estimate.bound) / estimate.bound
        self.add_json("variance_monte_carlo.json", estimate.to_dict())
        return CheckOutcome(
            passed=relative <= settings.MONTE_CARLO_RELATIVE_TOLERANCE,
            observed=relative,
            expected=settings.MONTE_CARLO_RELATIVE_TOLERANCE,
            detail={
                "estimate": estimate.estimate,
                "exact": estimate.bound,
                "standard_error": estimate.standard_error,
                "trials": trials,
            },
        )
