"""
Unit tests for the sparse ternary fields and their stencils.
"""

from fractions import Fraction

import numpy as np
import pytest

from process.field import (
    NoiseSpec,
    ProcessConfig,
    SparseLevelField,
    eval_h_level,
    eval_transfer_level,
    h_stencil,
    nonzero_probability,
    sample_level_batch,
    sample_level_field,
    sample_noise,
    site_probability,
    transfer_weights,
)
from utils.errors import CapacityError, CoverageError, LabError
from utils.streams import substream


@pytest.mark.unit
class TestLaws:
    """Exact site laws."""

    def test_site_probability(self):
        assert site_probability(8) == Fraction(1, 64)

    def test_nonzero_probability_below_envelope(self):
        """mu{h_k != 0} never exceeds 2/n_k."""
        for n in (2, 3, 8, 64):
            assert nonzero_probability(n) <= Fraction(2, n)

    def test_stencils(self):
        assert h_stencil(2).tolist() == [1, 1, -1, -1]
        assert transfer_weights(3).tolist() == [1, 2, 3, 2, 1]


@pytest.mark.unit
class TestHandBuiltField:
    """h_k and t_k on a single event at the origin."""

    def test_h_values(self, single_event_field):
        assert [eval_h_level(single_event_field, i) for i in range(4)] == [1, 1, -1, -1]

    def test_transfer_values(self, single_event_field):
        values = [eval_transfer_level(single_event_field, i) for i in range(0, 4)]

        assert values == [0, -1, -2, -1]

    def test_coboundary_step(self, single_event_field):
        """h(i) = t(i) - t(i+1)."""
        for i in range(0, 3):
            assert eval_h_level(single_event_field, i) == (
                eval_transfer_level(single_event_field, i)
                - eval_transfer_level(single_event_field, i + 1)
            )

    def test_coverage_is_enforced(self, single_event_field):
        with pytest.raises(CoverageError):
            eval_h_level(single_event_field, 5)

    def test_rejects_bad_values(self):
        with pytest.raises(LabError):
            SparseLevelField.from_events(1, 2, (0, 4), {1: 2})

    def test_rejects_events_outside_interval(self):
        with pytest.raises(LabError):
            SparseLevelField.from_events(1, 2, (0, 4), {9: 1})


@pytest.mark.unit
class TestSampling:
    """Reproducibility and shape of sampled fields."""

    def test_same_stream_same_field(self):
        first = sample_level_field(2, 8, (-15, 500), substream(3, "field", 2))
        second = sample_level_field(2, 8, (-15, 500), substream(3, "field", 2))

        assert first.events == second.events

    def test_values_and_range(self):
        field = sample_level_field(1, 2, (0, 999), substream(5, "scratch", 1))

        assert field.indices.size > 0
        assert set(np.unique(field.values).tolist()) <= {-1, 1}
        assert field.indices.min() >= 0 and field.indices.max() <= 999

    def test_batch_splits_into_trials(self):
        batch = sample_level_batch(1, 2, (0, 99), 10, substream(5, "field-batch", 1))
        fields = [batch.field(t) for t in range(10)]

        assert sum(f.indices.size for f in fields) == batch.indices.size
        assert all(f.interval == (0, 99) for f in fields)

    def test_site_frequency_and_signs(self):
        """One fixed site is nonzero with probability 1/n_k^2; signs are fair."""
        trials, p = 20000, 1 / 16
        batch = sample_level_batch(1, 4, (0, 49), trials, substream(17, "field-batch", 1))
        hits = int(np.sum(batch.indices == 7))
        sigma = np.sqrt(trials * p * (1 - p))

        assert abs(hits - trials * p) <= 4 * sigma
        plus = int(np.sum(batch.values == 1))
        minus = int(np.sum(batch.values == -1))
        assert plus + minus == batch.values.size
        assert abs(plus - minus) <= 4 * np.sqrt(batch.values.size)

    def test_event_count_is_binomial(self):
        """n_k = 64 over 4096 * 64 sites averages 64 events per field."""
        trials = 200
        batch = sample_level_batch(2, 64, (0, 4096 * 64 - 1), trials, substream(23, "field-batch", 2))
        counts = np.bincount(batch.trial_ids, minlength=trials)

        assert abs(counts.mean() - 64) <= 4 * np.sqrt(64 / trials)
        assert abs(counts.var(ddof=1) - 64) <= 26

    def test_disjoint_intervals_are_independent(self):
        """Event counts on two halves of one interval are uncorrelated."""
        trials = 10000
        batch = sample_level_batch(1, 4, (0, 63), trials, substream(29, "field-batch", 1))
        left = np.bincount(batch.trial_ids[batch.indices < 32], minlength=trials)
        right = np.bincount(batch.trial_ids[batch.indices >= 32], minlength=trials)

        assert abs(left.mean() - 2) <= 4 * np.sqrt(2 / trials)
        assert abs(right.mean() - 2) <= 4 * np.sqrt(2 / trials)
        assert abs(np.corrcoef(left, right)[0, 1]) <= 4 / np.sqrt(trials)

    def test_event_budget(self):
        """Expected event counts above the budget are refused."""
        with pytest.raises(CapacityError):
            sample_level_field(1, 2, (0, 10**6), substream(1, "scratch", 0), event_budget=10)


@pytest.mark.unit
class TestNoiseAndConfig:
    """Noise laws and ProcessConfig validation."""

    def test_rademacher_values(self):
        noise = sample_noise(NoiseSpec("rademacher"), (0, 99), substream(1, "noise", 0))

        assert noise.size == 100
        assert set(np.unique(noise).tolist()) <= {-1.0, 1.0}

    def test_gaussian_moments(self):
        noise = sample_noise(NoiseSpec("gaussian"), (0, 10**6 - 1), substream(31, "noise", 0))

        assert abs(noise.mean()) <= 4 / np.sqrt(10**6)
        assert noise.var() == pytest.approx(1.0, abs=0.01)

    def test_unknown_noise_law(self):
        with pytest.raises(LabError):
            NoiseSpec("cauchy")

    def test_truncation_bounds(self, reference_sequence):
        with pytest.raises(LabError):
            ProcessConfig(seq=reference_sequence, truncation=4)

    def test_unsimulated_level(self, two_level_config):
        with pytest.raises(LabError):
            two_level_config.n(3)
