"""Sparse per-level random fields and the noise sequence.

Level k has i.i.d. sites with P(+1) = P(-1) = 1/(2 n_k^2); only the nonzero
sites are stored.  The per-level function h_k and the transfer t_k are
integer linear forms over a window of 2 n_k sites:

    h_k(i) = sum_{j<n} e(i-j) - sum_{j<n} e(i-n-j)
    t_k(i) = -sum_{l=1}^{2n-1} w(l) e(i-l),   w(l) = min(l, 2n-l)

with h_k(i) = t_k(i) - t_k(i+1).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from process.sequence import LevelSequence
from utils.errors import CapacityError, CoverageError, LabError
from utils.metrics import metrics
from utils.streams import substream

NOISE_GAUSSIAN = "gaussian"
NOISE_RADEMACHER = "rademacher"
NOISE_LAWS = (NOISE_GAUSSIAN, NOISE_RADEMACHER)

MAX_INTERVAL_LENGTH = 1 << 62

Interval = Tuple[int, int]


@dataclass(frozen=True)
class NoiseSpec:
    law: str = NOISE_GAUSSIAN
    stream: int = 0

    def __post_init__(self) -> None:
        if self.law not in NOISE_LAWS:
            raise LabError(
                f"unknown noise law '{self.law}'", hint=f"use one of {', '.join(NOISE_LAWS)}"
            )
        if self.stream < 0:
            raise LabError(f"noise stream id must be nonnegative, got {self.stream}")

    @property
    def variance(self) -> Fraction:
        return Fraction(1)


@dataclass(frozen=True)
class ProcessConfig:
    seq: LevelSequence
    truncation: int
    noise: NoiseSpec = NoiseSpec()
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.truncation <= self.seq.K:
            raise LabError(
                f"truncation {self.truncation} outside 0..{self.seq.K}",
                hint="truncation is the number of levels actually simulated",
            )
        if self.seed < 0:
            raise LabError(f"master seed must be nonnegative, got {self.seed}")

    @property
    def levels(self) -> Tuple[int, ...]:
        return self.seq.levels[: self.truncation]

    def n(self, k: int) -> int:
        if not 1 <= k <= self.truncation:
            raise LabError(f"level {k} is not simulated (truncation {self.truncation})")
        return self.seq.levels[k - 1]

    def to_json(self) -> dict:
        return {
            "sequence": self.seq.to_json(),
            "truncation": self.truncation,
            "noise": {"law": self.noise.law, "stream": self.noise.stream},
            "seed": self.seed,
        }


def _check_interval(interval: Interval) -> Tuple[int, int, int]:
    lo, hi = int(interval[0]), int(interval[1])
    if hi < lo:
        raise LabError(f"interval [{lo}, {hi}] is empty")
    length = hi - lo + 1
    if length > MAX_INTERVAL_LENGTH:
        raise CapacityError(
            f"interval length {length} exceeds {MAX_INTERVAL_LENGTH}",
            hint="sample the influence windows only (focus+intrusion mode)",
        )
    return lo, hi, length


def site_probability(n_k: int) -> Fraction:
    """Exact probability that one site of level k is nonzero."""
    return Fraction(1, n_k * n_k)


def nonzero_probability(n_k: int) -> Fraction:
    """Exact mu{h_k(0) != 0} envelope: some site of the 2n_k window is nonzero."""
    return 1 - (1 - site_probability(n_k)) ** (2 * n_k)


@dataclass(frozen=True, eq=False)
class SparseLevelField:
    level: int
    n_k: int
    lo: int
    hi: int
    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        indices = np.asarray(self.indices, dtype=np.int64)
        values = np.asarray(self.values, dtype=np.int64)
        if indices.shape != values.shape or indices.ndim != 1:
            raise LabError("field indices and values must be matching 1-d arrays")
        if self.n_k < 2:
            raise LabError(f"level parameter must be >= 2, got {self.n_k}")
        if indices.size:
            if indices[0] < self.lo or indices[-1] > self.hi:
                raise LabError(
                    f"field events outside interval [{self.lo}, {self.hi}]"
                )
            if np.any(np.diff(indices) <= 0):
                raise LabError("field event indices must be strictly increasing")
            if np.any(np.abs(values) != 1):
                raise LabError("field values must be -1 or +1")
        indices.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_events(
        cls, level: int, n_k: int, interval: Interval, events: Mapping[int, int]
    ) -> SparseLevelField:
        items = sorted((int(i), int(v)) for i, v in events.items() if v != 0)
        indices = np.array([i for i, _ in items], dtype=np.int64)
        values = np.array([v for _, v in items], dtype=np.int64)
        return cls(level, n_k, int(interval[0]), int(interval[1]), indices, values)

    @classmethod
    def empty(cls, level: int, n_k: int, interval: Interval) -> SparseLevelField:
        return cls.from_events(level, n_k, interval, {})

    @property
    def interval(self) -> Interval:
        return self.lo, self.hi

    @property
    def events(self) -> Dict[int, int]:
        return {int(i): int(v) for i, v in zip(self.indices, self.values)}

    def covers(self, a: int, b: int) -> bool:
        return self.lo <= a and b <= self.hi

    def require(self, a: int, b: int) -> None:
        if a <= b and not self.covers(a, b):
            raise CoverageError(
                f"level {self.level} window [{a}, {b}] is not covered by "
                f"sampled interval [{self.lo}, {self.hi}]",
                hint="sample the field over a wider interval",
            )

    def window(self, a: int, b: int) -> Tuple[np.ndarray, np.ndarray]:
        """Events with a <= index <= b (no coverage check)."""
        start = np.searchsorted(self.indices, a, side="left")
        stop = np.searchsorted(self.indices, b, side="right")
        return self.indices[start:stop], self.values[start:stop]

    def value_at(self, i: int) -> int:
        self.require(i, i)
        idx, val = self.window(i, i)
        return int(val[0]) if idx.size else 0

    def dense(self, a: int, b: int) -> np.ndarray:
        self.require(a, b)
        out = np.zeros(b - a + 1, dtype=np.int64)
        idx, val = self.window(a, b)
        out[idx - a] = val
        return out

    def csv_rows(self):
        for i, v in zip(self.indices, self.values):
            yield (self.level, int(i), int(v))


@dataclass(frozen=True, eq=False)
class FieldBatch:
    """Fields of consecutive trials drawn as one Bernoulli grid."""

    level: int
    n_k: int
    lo: int
    hi: int
    trials: int
    trial_ids: np.ndarray
    indices: np.ndarray
    values: np.ndarray

    def field(self, t: int) -> SparseLevelField:
        start = np.searchsorted(self.trial_ids, t, side="left")
        stop = np.searchsorted(self.trial_ids, t, side="right")
        return SparseLevelField(
            self.level,
            self.n_k,
            self.lo,
            self.hi,
            self.indices[start:stop],
            self.values[start:stop],
        )

    def contract(self, offset: int, coefficients: np.ndarray) -> np.ndarray:
        """Per-trial sum of c(i) e(i) for a dense coefficient vector starting at ``offset``."""
        position = self.indices - offset
        inside = (position >= 0) & (position < coefficients.size)
        weights = np.zeros(self.indices.size, dtype=np.float64)
        weights[inside] = coefficients[position[inside]] * self.values[inside]
        sums = np.bincount(self.trial_ids, weights=weights, minlength=self.trials)
        return np.rint(sums).astype(np.int64)


def _guard_expected_events(
    level: int, n_k: int, sites: int, event_budget: Optional[int]
) -> None:
    if event_budget is None:
        return
    expected = sites / (n_k * n_k)
    if expected > event_budget:
        metrics.capacity_errors_total.labels(kind="events").inc()
        raise CapacityError(
            f"level {level}: expected {expected:.3g} events exceeds the event "
            f"budget {event_budget}",
            hint="use focus+intrusion mode or a shorter N-range",
            level=level,
        )


def _draw_events(
    rng: np.random.Generator, sites: int, n_k: int
) -> Tuple[np.ndarray, np.ndarray]:
    count = int(rng.binomial(sites, 1.0 / (n_k * n_k))) if sites else 0
    positions = np.sort(rng.choice(sites, size=count, replace=False)).astype(np.int64)
    signs = rng.integers(0, 2, size=count, dtype=np.int64) * 2 - 1
    return positions, signs


def sample_level_field(
    k: int,
    n_k: int,
    interval: Interval,
    rng: np.random.Generator,
    *,
    event_budget: Optional[int] = None,
) -> SparseLevelField:
    """Exact binomial event count, uniform positions without replacement, fair signs."""
    if n_k < 2:
        raise LabError(f"level parameter must be >= 2, got {n_k}")
    lo, hi, length = _check_interval(interval)
    _guard_expected_events(k, n_k, length, event_budget)
    positions, signs = _draw_events(rng, length, n_k)
    metrics.events_sampled_total.labels(level=str(k)).inc(positions.size)
    return SparseLevelField(k, n_k, lo, hi, lo + positions, signs)


def sample_level_batch(
    k: int,
    n_k: int,
    interval: Interval,
    trials: int,
    rng: np.random.Generator,
    *,
    event_budget: Optional[int] = None,
) -> FieldBatch:
    if n_k < 2:
        raise LabError(f"level parameter must be >= 2, got {n_k}")
    lo, hi, length = _check_interval(interval)
    total = length * trials
    if total > MAX_INTERVAL_LENGTH:
        raise CapacityError(
            f"batch of {trials} trials over {length} sites is too large",
            hint="reduce the trial block size",
        )
    _guard_expected_events(k, n_k, total, event_budget)
    flat, signs = _draw_events(rng, total, n_k)
    metrics.events_sampled_total.labels(level=str(k)).inc(flat.size)
    return FieldBatch(
        level=k,
        n_k=n_k,
        lo=lo,
        hi=hi,
        trials=trials,
        trial_ids=flat // length,
        indices=lo + flat % length,
        values=signs,
    )


def transfer_weights(n_k: int) -> np.ndarray:
    """w(l) for lags l = 1..2n_k-1: 1, 2, ..., n_k, ..., 2, 1."""
    lags = np.arange(1, 2 * n_k, dtype=np.int64)
    return np.minimum(lags, 2 * n_k - lags)


def h_stencil(n_k: int) -> np.ndarray:
    """Coefficients of e(i - lag) in h_k(i) for lags 0..2n_k-1."""
    return np.concatenate(
        [np.ones(n_k, dtype=np.int64), -np.ones(n_k, dtype=np.int64)]
    )


def eval_h_level(field: SparseLevelField, i: int) -> int:
    n = field.n_k
    field.require(i - 2 * n + 1, i)
    idx, val = field.window(i - 2 * n + 1, i)
    lags = i - idx
    return int(np.sum(np.where(lags < n, val, -val)))


def eval_transfer_level(field: SparseLevelField, i: int) -> int:
    n = field.n_k
    field.require(i - 2 * n + 1, i - 1)
    idx, val = field.window(i - 2 * n + 1, i - 1)
    lags = i - idx
    return -int(np.sum(np.minimum(lags, 2 * n - lags) * val))


def sample_noise(
    spec: NoiseSpec, interval: Interval, rng: np.random.Generator
) -> np.ndarray:
    _, _, length = _check_interval(interval)
    if spec.law == NOISE_RADEMACHER:
        return (rng.integers(0, 2, size=length) * 2 - 1).astype(np.float64)
    return rng.standard_normal(length)


# ---------- stream addressing ----------
def level_stream(
    config: ProcessConfig, level: int, interval: Interval, trial: int
) -> np.random.Generator:
    return substream(config.seed, "field", level, interval[0], interval[1], trial)


def level_batch_stream(
    config: ProcessConfig, level: int, interval: Interval, block: int, size: int
) -> np.random.Generator:
    return substream(
        config.seed, "field-batch", level, interval[0], interval[1], block, size
    )


def noise_stream(
    config: ProcessConfig, interval: Interval, trial: int
) -> np.random.Generator:
    return substream(
        config.seed, "noise", config.noise.stream, interval[0], interval[1], trial
    )


def noise_batch_stream(
    config: ProcessConfig, interval: Interval, block: int, size: int
) -> np.random.Generator:
    return substream(
        config.seed,
        "noise-batch",
        config.noise.stream,
        interval[0],
        interval[1],
        block,
        size,
    )
