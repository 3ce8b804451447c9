"""
Tests for exact mixing coefficients and the beta bounds.

Tests cover:
- alpha/beta/phi on explicit joint laws, including the 2 alpha <= beta <= phi
  ordering as a property
- The finite-window oracle against its reference value
- The bound chain at one level
- The aggregate bound B(N), its rate and the subsequence budget
"""

from fractions import Fraction

import pytest
from hypothesis import given, settings as hypothesis_settings
from hypothesis import strategies as st

from checks.mixing import (
    FinitePartition,
    JointLaw,
    aggregate_beta_bound,
    atom_bound_chain,
    atom_beta_bound,
    beta_bound_profile,
    finite_window_beta_exact,
    finite_window_oracle,
    level_beta_bound,
    partition_coefficients,
    rate_supremum,
    refined_grid,
    self_beta_product,
    window_coordinates,
)
from process.sequence import RateBudget, adaptive_sequence, delta_sequence
from utils.errors import LabError, RangeError


def _joint_from_weights(weights, width):
    total = sum(weights)
    rows = [weights[i : i + width] for i in range(0, len(weights), width)]
    return JointLaw(tuple(tuple(Fraction(w, total) for w in row) for row in rows))


joint_laws = st.integers(min_value=1, max_value=4).flatmap(
    lambda width: st.integers(min_value=1, max_value=4).flatmap(
        lambda height: st.lists(
            st.integers(min_value=0, max_value=20),
            min_size=width * height,
            max_size=width * height,
        )
        .filter(lambda ws: sum(ws) > 0)
        .map(lambda ws: _joint_from_weights(ws, width))
    )
)


@pytest.mark.unit
class TestPartitionCoefficients:
    """alpha, beta and phi on finite joint laws."""

    def test_independent_law_has_zero_coefficients(self):
        joint = JointLaw.independent([Fraction(1, 3), Fraction(2, 3)], [Fraction(1, 2)] * 2)
        coefficients = partition_coefficients(joint)

        assert coefficients.beta == 0
        assert coefficients.alpha == 0
        assert coefficients.phi == 0

    def test_diagonal_law(self):
        """Two identical fair coins: alpha = 1/4, beta = 1/2, phi = 1/2."""
        joint = JointLaw(((Fraction(1, 2), 0), (0, Fraction(1, 2))))
        coefficients = partition_coefficients(joint)

        assert coefficients.alpha == Fraction(1, 4)
        assert coefficients.beta == Fraction(1, 2)
        assert coefficients.phi == Fraction(1, 2)

    @hypothesis_settings(max_examples=60, deadline=None)
    @given(joint_laws)
    def test_ordering(self, joint):
        assert partition_coefficients(joint).ordering_ok()

    def test_atom_limit_reports_beta_only(self):
        block = FinitePartition.level_block(2, 3)
        coefficients = partition_coefficients(block.diagonal_joint(), atom_limit=5)

        assert coefficients.alpha is None and coefficients.phi is None
        assert coefficients.beta == self_beta_product(block)
        assert "limit" in coefficients.note

    def test_rejects_unnormalized_law(self):
        with pytest.raises(LabError):
            JointLaw(((Fraction(1, 2), Fraction(1, 4)),))


@pytest.mark.unit
class TestSelfBeta:
    """beta(P, P) for product partitions."""

    def test_matches_diagonal_joint(self):
        block = FinitePartition.level_block(3, 2)

        assert self_beta_product(block) == partition_coefficients(block.diagonal_joint()).beta

    def test_collision_without_enumeration(self):
        block = FinitePartition.level_block(8, 16)

        assert self_beta_product(block) == 1 - block.collision_probability()
        assert block.atom_count() == 3**16

    def test_atom_bound_dominates(self):
        block = FinitePartition.level_block(8, 16)

        assert self_beta_product(block) <= atom_beta_bound(block)


@pytest.mark.unit
class TestFiniteWindowOracle:
    """Exact beta between the two observation windows of one level."""

    def test_reference_value(self):
        assert finite_window_beta_exact(2, 0, 0) == Fraction(5960157, 8388608)

    def test_zero_beyond_dependence_range(self):
        for N in (4, 5, 6):
            result = finite_window_oracle(2, N, 1)

            assert result.beta == 0
            assert result.configurations > 0

    def test_monotone_in_gap_and_length(self):
        """beta falls as the gap N grows and rises with the block length L."""
        beta = {(N, L): finite_window_beta_exact(2, N, L) for N in range(5) for L in range(3)}

        for L in range(3):
            assert all(beta[N, L] >= beta[N + 1, L] for N in range(4))
        for N in range(5):
            assert all(beta[N, L] <= beta[N, L + 1] for L in range(2))
        assert beta[1, 0] == Fraction(767403, 4194304)
        assert beta[4, 0] == 0

    def test_below_level_bound(self):
        for N in range(0, 4):
            assert finite_window_beta_exact(2, N, 1) <= level_beta_bound(2, 0)

    def test_coordinates(self):
        assert window_coordinates(2, 0, 0) == [-3, -2, -1, 0]
        assert len(window_coordinates(2, 4, 1)) == 10

    def test_serialized_rational(self):
        payload = finite_window_oracle(2, 0, 0).to_dict()

        assert payload["beta"]["numerator"] == "5960157"
        assert payload["beta"]["denominator"] == "8388608"

    def test_negative_gap(self):
        with pytest.raises(RangeError):
            finite_window_oracle(2, -1, 0)


@pytest.mark.unit
class TestBoundChain:
    def test_level_eight(self):
        chain = atom_bound_chain(8)

        assert chain.oracle is None
        assert chain.note
        assert float(chain.self_beta) == pytest.approx(0.39463, abs=1e-5)
        assert float(chain.atom_bound) == pytest.approx(0.4454, abs=1e-4)
        assert chain.level_bound == Fraction(1, 2)
        assert chain.ordered

    def test_level_two_with_oracle(self):
        chain = atom_bound_chain(2)

        assert chain.oracle == Fraction(5960157, 8388608)
        assert chain.ordered


@pytest.mark.unit
class TestAggregateBound:
    """B(N) with the strict convention 2n_j > N."""

    def test_level_bound(self):
        assert level_beta_bound(8, 15) == Fraction(1, 2)
        assert level_beta_bound(8, 16) == 0

    def test_aggregate(self, reference_sequence):
        assert aggregate_beta_bound(reference_sequence, 3) == (
            Fraction(4, 2) + Fraction(4, 64) + Fraction(4, 65600)
        )
        assert aggregate_beta_bound(reference_sequence, 4) == Fraction(4, 64) + Fraction(4, 65600)
        assert aggregate_beta_bound(reference_sequence, 131200) == 0

    def test_profile_monotone_and_rate(self, reference_sequence):
        grid = [64, 100, 1000, 10000, 65599, 65600, 10**6]
        profile = beta_bound_profile(reference_sequence, grid, delta=Fraction(1, 10))

        assert profile.monotone
        assert profile.rate_sup <= profile.rate_sup_refined <= profile.rate_sup_exact
        assert profile.rate_sup_exact == pytest.approx(
            rate_supremum(reference_sequence, Fraction(1, 10), 64, 10**6)
        )
        assert len(profile.csv_rows()[0]) == len(profile.csv_header())

    def test_refined_grid_keeps_points(self):
        refined = refined_grid([64, 1000, 10**6])

        assert {64, 1000, 10**6} <= set(refined)
        assert len(refined) > 3
        assert min(refined) == 64 and max(refined) == 10**6

    def test_coarse_grid_is_unstable(self, reference_sequence):
        profile = beta_bound_profile(
            reference_sequence, [64, 100, 1000, 10000, 10**6], delta=Fraction(1, 10)
        )

        assert profile.rate_drift > 0.5
        assert not profile.rate_stable()

    def test_grid_through_drop_is_stable(self, reference_sequence):
        profile = beta_bound_profile(reference_sequence, [64, 65599, 10**6], delta=Fraction(1, 10))

        assert profile.rate_drift == 0
        assert profile.rate_stable()
        assert profile.rate_sup == pytest.approx(profile.rate_sup_exact)

    def test_delta_rule_rate_is_stable(self):
        seq = delta_sequence(Fraction(1, 10), 3)
        grid = [seq.n(2) + step * (10**6 - seq.n(2)) // 20 for step in range(21)]
        profile = beta_bound_profile(seq, grid)

        assert profile.delta == Fraction(1, 10)
        assert profile.rate_stable()
        assert profile.rate_sup_exact < 1

    def test_adaptive_budget(self):
        seq = adaptive_sequence(RateBudget.preset("inv-linear"), 4)
        profile = beta_bound_profile(seq, [64, 1000])

        assert len(profile.budget_checks) == 4
        assert profile.budget_ok
