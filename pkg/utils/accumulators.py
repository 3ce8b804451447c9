"""Mergeable Monte Carlo accumulators.

Both accumulators merge with the parallel (count, mean, M2) rule, so block
results computed on different workers combine into the same summary as a
serial pass when they are merged in block order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np


@dataclass
class RunningMoments:
    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def update(self, value: float) -> None:
        self.count += 1
        delta = value - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (value - self.mean)

    def update_many(self, values: Iterable[float]) -> None:
        array = np.asarray(values, dtype=np.float64)
        if array.size == 0:
            return
        block_mean = float(array.mean())
        block = RunningMoments(
            count=int(array.size),
            mean=block_mean,
            m2=float(np.sum((array - block_mean) ** 2)),
        )
        merged = self.merge(block)
        self.count, self.mean, self.m2 = merged.count, merged.mean, merged.m2

    def merge(self, other: RunningMoments) -> RunningMoments:
        if other.count == 0:
            return RunningMoments(self.count, self.mean, self.m2)
        if self.count == 0:
            return RunningMoments(other.count, other.mean, other.m2)
        count = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / count
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / count
        return RunningMoments(count, mean, m2)

    @property
    def variance(self) -> float:
        """Sample variance (ddof=1)."""
        if self.count < 2:
            return 0.0
        return self.m2 / (self.count - 1)

    @property
    def standard_error(self) -> float:
        if self.count < 2:
            return math.inf
        return math.sqrt(self.variance / self.count)


@dataclass
class BernoulliCounter:
    successes: int = 0
    trials: int = 0

    def update_many(self, outcomes: Iterable[bool]) -> None:
        array = np.asarray(outcomes, dtype=bool)
        self.successes += int(array.sum())
        self.trials += int(array.size)

    def merge(self, other: BernoulliCounter) -> BernoulliCounter:
        return BernoulliCounter(
            self.successes + other.successes, self.trials + other.trials
        )

    @property
    def estimate(self) -> float:
        return self.successes / self.trials if self.trials else 0.0

    @property
    def standard_error(self) -> float:
        if self.trials == 0:
            return math.inf
        p = self.estimate
        return math.sqrt(p * (1.0 - p) / self.trials)
