"""
Unit tests for exact enumeration over ternary configurations.
"""

from fractions import Fraction

import numpy as np
import pytest

from checks.enumeration import exact_law, exact_pmf, require_budget, ternary_law
from process.field import h_stencil, transfer_weights
from utils.errors import EnumerationBudgetError


@pytest.mark.unit
class TestEnumeration:
    """Tests for ternary_law, exact_law and exact_pmf."""

    def test_ternary_law(self):
        assert ternary_law(2) == (Fraction(1, 8), Fraction(3, 4), Fraction(1, 8))

    def test_single_site_pmf(self):
        assert exact_pmf(np.array([1]), 3) == {
            -1: Fraction(1, 18),
            0: Fraction(8, 9),
            1: Fraction(1, 18),
        }

    @pytest.mark.parametrize("n_k", [2, 3, 4])
    def test_h_moments(self, n_k):
        """E h_k = 0 and E h_k^2 = 2n_k * (1/n_k^2)."""
        pmf = exact_pmf(h_stencil(n_k), n_k)

        assert sum(pmf.values()) == 1
        assert sum(v * p for v, p in pmf.items()) == 0
        assert sum(v * v * p for v, p in pmf.items()) == Fraction(2, n_k)

    def test_transfer_second_moment(self):
        """E t_k^2 = sum w(l)^2 / n_k^2."""
        n_k = 3
        pmf = exact_pmf(transfer_weights(n_k), n_k)
        squares = int(np.dot(transfer_weights(n_k), transfer_weights(n_k)))

        assert sum(v * v * p for v, p in pmf.items()) == Fraction(squares, n_k * n_k)

    def test_joint_law_is_normalized(self):
        rows = np.array([[1, 1, 0], [0, 1, -1]])
        law, denominator = exact_law(rows, 2)

        assert sum(law.values()) == denominator
        assert all(len(outcome) == 2 for outcome in law)

    def test_workers_do_not_change_the_law(self):
        rows = np.array([h_stencil(3)])

        assert exact_law(rows, 3, workers=1) == exact_law(rows, 3, workers=4)

    def test_budget(self):
        with pytest.raises(EnumerationBudgetError) as excinfo:
            require_budget(14, budget=3**13)

        assert excinfo.value.required_coordinates == 14
        assert require_budget(13, budget=3**13) == 3**13
