from fractions import Fraction

import numpy as np

from checks.mixing import (
    FinitePartition,
    atom_bound_chain,
    beta_bound_profile,
    finite_window_oracle,
    level_beta_bound,
    partition_coefficients,
)
from config import settings
from .base_suite import BaseSuite, CheckOutcome


def _geometric_grid(lo: int, hi: int, points: int) -> list:
    if hi <= lo:
        return [lo]
    grid = np.unique(np.geomspace(lo, hi, num=max(points, 2)).astype(np.int64))
    return [int(N) for N in grid]


class MixingSuite(BaseSuite):
    """Exact beta-coefficient checks: the finite-window oracle, the bound chain and B(N)."""

    name = "mixing"

    def run(self) -> None:
        chain_level = self.option("level", 8, int)
        oracle_level = self.option("oracle_level", 2, int)
        oracle_L = self.option("oracle_L", 1, int)

        self.execute_check(
            "oracle_below_level_bound", "d", lambda: self._oracle_profile(oracle_level, oracle_L)
        )
        self.execute_check("coefficient_ordering", "d", lambda: self._ordering(oracle_level))

        chains = []
        for name, n_k in (("bound_chain", chain_level), ("bound_chain_oracle", oracle_level)):
            chain = self.compute(
                name, "d", lambda n_k=n_k: atom_bound_chain(n_k, 0, workers=self.workers)
            )
            if chain is None:
                continue
            chains.append(chain)
            self.execute_check(
                name,
                "d",
                lambda chain=chain: CheckOutcome(
                    passed=chain.ordered,
                    observed=float(chain.self_beta),
                    expected=float(chain.level_bound),
                    detail=chain.to_dict(),
                ),
            )
        self.add_json("mixing_chain.json", {"chains": chains})

        seq = self.config.seq
        delta = self.option("delta", seq.delta, Fraction)
        start = seq.levels[1] if seq.K > 1 else seq.levels[0]
        grid = _geometric_grid(
            start, self.option("grid_max", 10**6, int), self.option("grid_points", 40, int)
        )
        profile = beta_bound_profile(seq, grid, delta)
        self.add_csv("mixing_profile.csv", profile.csv_header(), profile.csv_rows())

        self.execute_check(
            "aggregate_monotone",
            "d",
            lambda: CheckOutcome(passed=profile.monotone, observed=float(profile.rows[-1].aggregate)),
        )
        if profile.rate_sup is not None:
            self.execute_check(
                "rate_stable_under_refinement",
                "d",
                lambda: CheckOutcome(
                    passed=profile.rate_stable(),
                    observed=profile.rate_drift,
                    expected=settings.RATE_GRID_TOLERANCE,
                    detail={
                        "delta": delta,
                        "grid_sup": profile.rate_sup,
                        "refined_sup": profile.rate_sup_refined,
                        "exact_sup": profile.rate_sup_exact,
                    },
                ),
            )
        if profile.budget_checks:
            self.execute_check(
                "budget_subsequence",
                "d",
                lambda: CheckOutcome(
                    passed=profile.budget_ok,
                    observed=[float(c.aggregate) for c in profile.budget_checks],
                    expected=[float(c.budget) for c in profile.budget_checks],
                    detail={"budget": seq.budget.name},
                ),
            )

    def _oracle_profile(self, n_k: int, L: int) -> CheckOutcome:
        results = [
            finite_window_oracle(n_k, N, L, workers=self.workers) for N in range(0, 2 * n_k + 2)
        ]
        self.add_json("mixing_oracle.json", {"oracle": results})
        above = [r.N for r in results if r.beta > level_beta_bound(n_k, 0)]
        nonzero_far = [r.N for r in results if r.N >= 2 * n_k and r.beta != 0]
        return CheckOutcome(
            passed=not above and not nonzero_far,
            observed=[float(r.beta) for r in results],
            expected=float(level_beta_bound(n_k, 0)),
            detail={"above_bound": above, "nonzero_beyond_range": nonzero_far},
        )

    def _ordering(self, n_k: int) -> CheckOutcome:
        block = FinitePartition.level_block(n_k, 2)
        coefficients = partition_coefficients(block.diagonal_joint())
        return CheckOutcome(
            passed=coefficients.complete and coefficients.ordering_ok(),
            observed=coefficients.to_dict(),
        )
