"""
Unit tests for exact partial sums, coefficient maps and paths.

Tests cover:
- Agreement of the closed form, the direct sum, the coefficient map and the
  coboundary telescope
- The event-driven window maximum against a brute-force sweep
- Path sampling and the rescaled functionals
- Level-separation envelopes
"""

from fractions import Fraction

import numpy as np
import pytest

from process.field import eval_transfer_level
from process.sums import (
    closed_form_coefficients,
    coefficient_map,
    functional_grid,
    intrusion_bound,
    level_sum_path,
    lower_level_envelope,
    max_statistic,
    noise_prefix_sums,
    path_functional,
    path_profile,
    sum_closed,
    sum_direct,
    sup_norm,
    uniform_grid,
    untruncated_intrusion_bound,
    window_max,
)
from utils.errors import CapacityError, RangeError


@pytest.mark.unit
class TestCoefficientMap:
    """Tests for coefficient_map and closed_form_coefficients."""

    @pytest.mark.parametrize("n_k", [2, 3, 5])
    def test_matches_closed_form(self, n_k):
        for N in range(1, 4 * n_k + 3):
            offset, coeffs = closed_form_coefficients(n_k, N)
            mapped = coefficient_map(n_k, N)

            assert mapped.offset == offset
            assert mapped.coeffs.tolist() == coeffs.tolist()

    @pytest.mark.parametrize("n_k", [2, 3, 8, 21])
    def test_square_sum_beyond_range(self, n_k):
        """sum c_i^2 = (4n^3 + 2n) / 3 once N >= 2n."""
        assert coefficient_map(n_k, 2 * n_k).square_sum() == (4 * n_k**3 + 2 * n_k) // 3
        assert coefficient_map(n_k, 5 * n_k).square_sum() == (4 * n_k**3 + 2 * n_k) // 3

    def test_total_is_zero(self):
        """Every h_k has zero stencil mass, so the map sums to zero."""
        assert coefficient_map(4, 11).total() == 0

    def test_size_guard(self):
        with pytest.raises(CapacityError):
            coefficient_map(2, 100, limit=10)


@pytest.mark.unit
class TestPartialSumIdentities:
    """Exact equality of the four evaluations of S_N(h_k)."""

    def test_hand_built_field(self, mixed_field):
        t0 = eval_transfer_level(mixed_field, 0)
        for N in range(1, 26):
            closed = sum_closed(mixed_field, 3, N)

            assert sum_direct(mixed_field, 3, N) == closed
            assert coefficient_map(3, N).contract(mixed_field) == closed
            assert t0 - eval_transfer_level(mixed_field, N) == closed

    @pytest.mark.parametrize("n_k", [2, 3, 5, 8])
    def test_random_fields(self, n_k, random_field):
        top = min(6 * n_k * n_k, 400)
        for key in range(5):
            field = random_field(n_k, (1 - 2 * n_k, top - 1), key=key)
            for N in range(1, top + 1, 7):
                assert sum_direct(field, n_k, N) == sum_closed(field, n_k, N)

    def test_rejects_nonpositive_N(self, mixed_field):
        with pytest.raises(RangeError):
            sum_closed(mixed_field, 3, 0)


@pytest.mark.unit
class TestWindowMax:
    """window_max against max |level_sum_path|."""

    @pytest.mark.parametrize("key", range(6))
    def test_matches_sweep(self, key, random_field):
        n_k, a, b = 6, 12, 36
        field = random_field(n_k, (1 - 2 * n_k, b - 1), key=key)
        sweep = int(np.max(np.abs(level_sum_path(field, n_k, a, b))))

        assert window_max(field, n_k, a, b) == sweep

    def test_path_matches_pointwise_sums(self, mixed_field):
        path = level_sum_path(mixed_field, 3, 1, 25)

        assert path.tolist() == [sum_closed(mixed_field, 3, N) for N in range(1, 26)]


@pytest.mark.unit
class TestNoise:
    def test_prefix_sums(self):
        noise = np.arange(1.0, 11.0)
        prefix = noise_prefix_sums(noise)

        assert prefix[0] == 0.0
        assert prefix[-1] == 55.0
        assert prefix.size == 11


@pytest.mark.integration
class TestPaths:
    """Path sampling in both modes and the functionals built on it."""

    def test_focus_path_is_reproducible(self, reference_config):
        first = path_profile(reference_config, 2, (1, 4096), "focus", trial=3)
        second = path_profile(reference_config, 2, (1, 4096), "focus", trial=3)

        assert np.array_equal(first.h, second.h)
        assert np.array_equal(first.y, second.y)

    def test_full_path_sums_levels(self, two_level_config):
        path = path_profile(two_level_config, 2, (1, 512), "full", include_noise=False)

        assert np.array_equal(path.h, path.per_level[1] + path.per_level[2])
        assert np.all(path.m == 0)

    def test_functionals(self, two_level_config):
        path = path_profile(two_level_config, 2, (1, 256), "full", trial=1)
        n = 256
        grid = functional_grid(path, n, uniform_grid(8))

        assert grid[0] == (0.0, 0.0)
        assert grid[-1][1] == pytest.approx(path.value(n))
        assert path_functional(path, n, Fraction(1, 2), "step") == pytest.approx(path.value(128))
        assert sup_norm(path, n) >= abs(path.value(n)) / np.sqrt(n)

    def test_max_statistic_window(self, two_level_config):
        path = path_profile(two_level_config, 2, (1, 4096), "focus", include_noise=False)
        expected = np.max(np.abs(path.h[127:4096])) / 64

        assert max_statistic(path, 2) == pytest.approx(expected)

    def test_range_must_fit_level(self, two_level_config):
        with pytest.raises(RangeError):
            path_profile(two_level_config, 2, (1, 5000), "focus")

    def test_lower_levels_stay_inside_envelope(self, reference_config):
        """|S_N(h_1)| <= 2 n_1^2 = 8 on [2n_2, n_2^2] in every sampled path."""
        envelope = lower_level_envelope(reference_config.seq, 2)

        for trial in range(20):
            path = path_profile(
                reference_config, 2, (128, 4096), "full", trial=trial, include_noise=False
            )

            assert int(np.max(np.abs(path.per_level[1]))) <= envelope

    def test_field_rows_follow_levels(self, two_level_config):
        path = path_profile(two_level_config, 2, (1, 512), "full", include_noise=False)
        rows = list(path.field_rows())

        assert [level for level, _, _ in rows] == sorted(level for level, _, _ in rows)
        assert all(value in (-1, 1) for _, _, value in rows)


@pytest.mark.unit
class TestEnvelopes:
    def test_lower_level_envelope(self, reference_sequence):
        assert lower_level_envelope(reference_sequence, 2) == 8

    def test_intrusion_bound(self, reference_sequence):
        assert intrusion_bound(reference_sequence, 2, 3) == Fraction(2 * 64, 65600)

    def test_untruncated_envelope(self):
        assert untruncated_intrusion_bound(8) == Fraction(1, 4)
