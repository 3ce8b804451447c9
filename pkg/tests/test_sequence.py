"""
Unit tests for lacunary level sequences.

Tests cover:
- Validation of the lacunarity conditions and the index K0
- The delta and adaptive construction rules
- The sequence grammar used by scenarios and the CLI
- Level lookup i(N)
"""

from fractions import Fraction

import pytest

from process.sequence import (
    LevelSequence,
    RateBudget,
    adaptive_sequence,
    delta_sequence,
    ensure_usable,
    level_index,
    parse_sequence,
    require_lacunary_from,
    validate_lacunary,
)
from utils.errors import BelowRangeError, BudgetError, InvalidSequenceError


@pytest.mark.unit
class TestValidation:
    """Tests for validate_lacunary and ensure_usable."""

    def test_reference_sequence_is_usable_from_first_level(self, reference_sequence):
        """(2, 64, 65600) satisfies both conditions on every transition."""
        report = validate_lacunary(reference_sequence)

        assert report.is_usable
        assert report.k0 == 1
        assert report.failures() == []

    def test_doubling_failure_is_not_usable(self):
        """3 < 2*2 breaks doubling and the run must stop."""
        report = validate_lacunary((2, 3))

        assert not report.is_usable
        assert any("doubling" in message for message in report.failures())

    def test_ensure_usable_raises_with_hint(self):
        """ensure_usable turns an unusable report into an InvalidSequenceError."""
        with pytest.raises(InvalidSequenceError) as excinfo:
            ensure_usable(LevelSequence((2, 3)))

        assert excinfo.value.hint
        assert "doubling" in str(excinfo.value)

    def test_delta_default_levels_expose_k0(self):
        """delta = 1/10 with three levels is usable and validated from its last level."""
        report = ensure_usable(parse_sequence("delta:0.1"))

        assert report.is_usable
        assert report.k0 == 3
        assert report.from_last_level
        assert report.failures() == []
        assert any("1817104 > 204253" in message for message in report.condition_failures())
        assert report.to_dict()["from_last_level"] is True

    def test_window_bounds_need_k0(self):
        """Levels below k0 are refused where the lacunarity conditions are needed."""
        seq = delta_sequence(Fraction(1, 10), 3)

        with pytest.raises(InvalidSequenceError) as excinfo:
            require_lacunary_from(seq, 2)

        assert excinfo.value.details["k0"] == 3
        assert require_lacunary_from(seq, 3).k0 == 3

    def test_reference_sequence_holds_from_first_level(self, reference_sequence):
        assert require_lacunary_from(reference_sequence, 1).holds_from(1)

    def test_late_k0_still_usable(self):
        """A sequence that only becomes lacunary at the last transition is usable."""
        report = validate_lacunary((2, 4, 8, 100000))

        assert report.k0 == 3
        assert report.is_usable

    def test_first_level_below_two(self):
        """n_1 = 1 is rejected."""
        report = validate_lacunary((1, 64, 65600))

        assert not report.first_level_ok
        assert not report.is_usable

    def test_levels_must_increase(self):
        """Non-increasing levels are rejected at construction."""
        with pytest.raises(InvalidSequenceError):
            LevelSequence((64, 2))


@pytest.mark.unit
class TestConstructionRules:
    """Tests for delta_sequence and adaptive_sequence."""

    def test_delta_levels(self):
        """delta = 1/10 gives floor(16^2.1) and floor(16^4.41)."""
        seq = delta_sequence(Fraction(1, 10), 3)

        assert seq.levels[:2] == (337, 204253)
        assert 1.41e11 < seq.levels[2] < 1.42e11
        assert seq.delta == Fraction(1, 10)

    def test_delta_float_means_decimal(self):
        """0.1 as a float is read through its decimal representation."""
        assert delta_sequence(0.1, 2).levels == delta_sequence("1/10", 2).levels

    def test_delta_needs_six_levels(self):
        """The delta = 1/10 sequence only validates from its fourth level."""
        report = validate_lacunary(delta_sequence(Fraction(1, 10), 6))

        assert report.is_usable
        assert report.k0 == 4

    def test_adaptive_inverse_linear(self):
        """The inverse-linear budget reproduces the reference levels."""
        seq = adaptive_sequence(RateBudget.preset("inv-linear"), 4)

        assert seq.levels == (2, 64, 65600, 68853825600)
        assert validate_lacunary(seq).k0 == 1

    def test_unknown_budget(self):
        """Unknown presets raise BudgetError with the available names."""
        with pytest.raises(BudgetError):
            RateBudget.preset("exponential")


@pytest.mark.unit
class TestGrammar:
    """Tests for parse_sequence and JSON serialization."""

    def test_explicit(self):
        assert parse_sequence("explicit:2,64,65600").levels == (2, 64, 65600)

    def test_adaptive_with_count(self):
        seq = parse_sequence("adaptive:inv-linear:3")

        assert seq.levels == (2, 64, 65600)
        assert seq.budget.name == "inv-linear"

    def test_unknown_kind(self):
        with pytest.raises(InvalidSequenceError):
            parse_sequence("geometric:2")

    def test_malformed_numbers(self):
        with pytest.raises(InvalidSequenceError):
            parse_sequence("explicit:2,x")

    def test_json_round_trip_keeps_metadata(self):
        seq = parse_sequence("delta:1/10:4")
        payload = seq.to_json()

        assert payload["origin"] == "delta"
        assert LevelSequence.from_json(payload).levels == seq.levels


@pytest.mark.unit
class TestLevelIndex:
    """Tests for level_index."""

    def test_boundaries(self, reference_sequence):
        assert level_index(reference_sequence, 2) == 1
        assert level_index(reference_sequence, 63) == 1
        assert level_index(reference_sequence, 64) == 2
        assert level_index(reference_sequence, 10**9) == 3

    def test_below_first_level(self, reference_sequence):
        with pytest.raises(BelowRangeError):
            level_index(reference_sequence, 1)
