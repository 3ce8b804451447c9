from fractions import Fraction

from checks.stats import bell, bell_table, moment_series, moment_suite
from services.scenario import parse_fraction_list, parse_int_list
from utils.errors import CapacityError
from .base_suite import BaseSuite, CheckOutcome

BELL_REFERENCE = {0: 1, 1: 1, 2: 2, 3: 5, 4: 15, 5: 52, 10: 115975}
# B_25 is the last Bell number below 2**63
FIXED_WIDTH_LAST = 25


class MomentsSuite(BaseSuite):
    name = "moments"

    def run(self) -> None:
        levels = self.option("levels", (2, 3, 4), parse_int_list)
        orders = self.option(
            "orders", tuple(Fraction(x) for x in ("1/2", "1", "2", "3", "4")), parse_fraction_list
        )
        guard_level = self.option("guard_level", 16, int)

        reports = [
            moment_suite(n, p, workers=self.workers) for n in levels for p in orders
        ]
        self.add_csv(
            "moments.csv",
            ["n_k", "p", "h_exact", "h_bound", "g_exact", "g_bound", "enumerated"],
            [
                (
                    r.n_k,
                    r.p,
                    "" if r.h_exact is None else float(r.h_exact),
                    float(r.h_bound),
                    "" if r.g_exact is None else float(r.g_exact),
                    "" if r.g_bound is None else r.g_bound,
                    r.enumerated,
                )
                for r in reports
            ],
        )
        series = {str(p): moment_series(self.config.seq, p, self.config.truncation) for p in orders}
        self.add_json("moments.json", {"reports": reports, "series": series})

        failing = [r for r in reports if not r.passed]
        self.execute_check(
            "moment_bounds",
            "e",
            lambda: CheckOutcome(
                passed=not failing and all(r.enumerated for r in reports),
                observed=len(failing),
                expected=0,
                detail={"failing": [(r.n_k, str(r.p)) for r in failing]},
            ),
        )

        def series_decreasing() -> CheckOutcome:
            rising = [
                (p, a["k"])
                for p, rows in series.items()
                for a, b in zip(rows, rows[1:])
                if b["h_term"] > a["h_term"]
            ]
            return CheckOutcome(passed=not rising, observed=len(rising), expected=0)

        self.execute_check("moment_series_decreasing", "e", series_decreasing)
        self.execute_check("bell_numbers", "e", self._bell)

        def guard() -> CheckOutcome:
            report = moment_suite(guard_level, 1)
            return CheckOutcome(
                passed=not report.enumerated and bool(report.note),
                observed=report.enumerated,
                expected=False,
                detail={"n_k": guard_level, "note": report.note},
            )

        self.execute_check("enumeration_guard", "e", guard)

    def _bell(self) -> CheckOutcome:
        p_max = self.option("bell_max", 20, int)
        table = bell_table(p_max)
        self.add_csv("bell.csv", ["p", "bell"], list(enumerate(table)))
        reference_ok = all(table[p] == value for p, value in BELL_REFERENCE.items() if p <= p_max)
        monotone = all(a <= b for a, b in zip(table, table[1:]))
        bell(FIXED_WIDTH_LAST, fixed_width=64)
        try:
            bell(FIXED_WIDTH_LAST + 1, fixed_width=64)
            guarded = False
        except CapacityError:
            guarded = True
        return CheckOutcome(
            passed=reference_ok and monotone and guarded,
            observed=table[min(10, p_max)],
            expected=BELL_REFERENCE.get(min(10, p_max)),
            detail={"monotone": monotone, "fixed_width_guard": guarded},
        )
