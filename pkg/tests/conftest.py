"""
Pytest fixtures for the mixing laboratory tests.

Fixtures provide the reference sequence, small process configurations,
hand-built sparse fields and a seeded random field factory, so that exact
tests never depend on sampling.
"""

import os
import sys

import pytest

# Ensure the project root is in the path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from process.field import ProcessConfig, SparseLevelField, sample_level_field  # noqa: E402
from process.sequence import LevelSequence  # noqa: E402
from utils.streams import substream  # noqa: E402


@pytest.fixture
def reference_sequence():
    """The explicit three-level sequence used by most shipped scenarios."""
    return LevelSequence((2, 64, 65600))


@pytest.fixture
def reference_config(reference_sequence):
    """All three levels simulated, Gaussian noise, seed 7."""
    return ProcessConfig(seq=reference_sequence, truncation=3, seed=7)


@pytest.fixture
def two_level_config(reference_sequence):
    """Only n_1 = 2 and n_2 = 64 simulated."""
    return ProcessConfig(seq=reference_sequence, truncation=2, seed=11)


@pytest.fixture
def single_event_field():
    """Level n_k = 2 with one +1 at site 0, covering [-3, 3]."""
    return SparseLevelField.from_events(1, 2, (-3, 3), {0: 1})


@pytest.fixture
def mixed_field():
    """Level n_k = 3 with events on both sides of the origin."""
    return SparseLevelField.from_events(
        1, 3, (-5, 30), {-5: 1, -2: -1, 0: 1, 4: 1, 7: -1, 19: 1}
    )


@pytest.fixture
def random_field():
    """Factory for reproducible random fields of one level."""

    def make(n_k, interval, key=0, seed=1234):
        return sample_level_field(1, n_k, interval, substream(seed, "scratch", n_k, key))

    return make
