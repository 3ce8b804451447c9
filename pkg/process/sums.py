"""Exact partial sums S_N(h_k) and partial-sum paths.

Every level is a coboundary, S_N(h_k) = t_k(0) - t_k(N), so a whole path over
an N-range only needs the transfer values t_k(N).  Those are evaluated either
by scattering each event over its 2n_k - 1 influenced positions or, when the
events are dense, through two prefix sums (w = box * box).  The h-part stays
in int64 throughout; only the noise part is real valued.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field
from fractions import Fraction
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from config import settings
from process.field import (
    ProcessConfig,
    SparseLevelField,
    eval_transfer_level,
    level_stream,
    noise_stream,
    sample_level_field,
    sample_noise,
    transfer_weights,
)
from process.sequence import LevelSequence
from utils.errors import CapacityError, RangeError
from utils.logger import get_logger

logger = get_logger("sums")

MODE_FULL = "full"
MODE_FOCUS = "focus"
PATH_MODES = (MODE_FULL, MODE_FOCUS)

KIND_POLYGONAL = "polygonal"
KIND_STEP = "step"

SCATTER_CHUNK = 1 << 22
NOISE_CHUNK = 1 << 16


# ---------- coefficient maps ----------
def _exact_square_sum(coeffs: np.ndarray) -> int:
    if coeffs.size == 0:
        return 0
    peak = int(np.abs(coeffs).max())
    if peak * peak * coeffs.size < (1 << 62):
        return int(np.dot(coeffs, coeffs))
    return sum(int(c) * int(c) for c in coeffs)


@dataclass(frozen=True, eq=False)
class CoefficientMap:
    """S_N(h_k) = sum_i coeffs[i - offset] * e(i)."""

    n_k: int
    N: int
    offset: int
    coeffs: np.ndarray
    level: Optional[int] = None

    @property
    def last_index(self) -> int:
        return self.offset + self.coeffs.size - 1

    def coefficient(self, i: int) -> int:
        position = i - self.offset
        if 0 <= position < self.coeffs.size:
            return int(self.coeffs[position])
        return 0

    def as_dict(self) -> Dict[int, int]:
        nonzero = np.flatnonzero(self.coeffs)
        return {int(self.offset + p): int(self.coeffs[p]) for p in nonzero}

    def total(self) -> int:
        return int(self.coeffs.sum())

    def square_sum(self) -> int:
        return _exact_square_sum(self.coeffs)

    def blocks(self) -> List[Tuple[int, int]]:
        """Maximal runs of nonzero coefficients as inclusive index ranges."""
        nonzero = self.coeffs != 0
        runs: List[Tuple[int, int]] = []
        start = None
        for p, flag in enumerate(nonzero):
            if flag and start is None:
                start = p
            elif not flag and start is not None:
                runs.append((self.offset + start, self.offset + p - 1))
                start = None
        if start is not None:
            runs.append((self.offset + start, self.last_index))
        return runs

    def contract(self, field: SparseLevelField) -> int:
        field.require(self.offset, self.last_index)
        idx, val = field.window(self.offset, self.last_index)
        return int(np.dot(self.coeffs[idx - self.offset], val))


def _triangle(x: np.ndarray, n_k: int) -> np.ndarray:
    """Partial stencil mass P(x) = sum_{lag<=x} stencil(lag); zero outside [0, 2n-1]."""
    inside = (x >= 0) & (x <= 2 * n_k - 1)
    return np.where(inside, np.minimum(x + 1, 2 * n_k - 1 - x), 0)


def _guard_map_size(n_k: int, N: int, limit: Optional[int]) -> None:
    limit = settings.COEFFICIENT_MAP_LIMIT if limit is None else limit
    size = N + 2 * n_k - 1
    if size > limit:
        raise CapacityError(
            f"coefficient map for n_k={n_k}, N={N} has {size} entries (limit {limit})",
            hint="use the closed-form variance for N <= n_k or N >= 2n_k",
        )


def coefficient_map(
    n_k: int, N: int, level: Optional[int] = None, limit: Optional[int] = None
) -> CoefficientMap:
    """Convolution of N unit steps with the h_k stencil, via its prefix sums."""
    if N < 1:
        raise RangeError(f"N must be >= 1, got {N}")
    _guard_map_size(n_k, N, limit)
    offset = 1 - 2 * n_k
    i = np.arange(offset, N, dtype=np.int64)
    coeffs = _triangle(N - 1 - i, n_k) - _triangle(-1 - i, n_k)
    return CoefficientMap(n_k, N, offset, coeffs.astype(np.int64), level)


def _short_sum_weights(n_k: int, N: int, i: np.ndarray) -> np.ndarray:
    # S_N(s_k) for N <= n_k: ramp up to N on [1-n, N-n-1], plateau N, ramp down on [0, N-1]
    return np.select(
        [
            (i >= 0) & (i <= N - 1),
            (i >= N - n_k) & (i <= -1),
            (i >= 1 - n_k) & (i <= N - n_k - 1),
        ],
        [N - i, np.full_like(i, N), i + n_k],
        0,
    )


def _long_sum_weights(n_k: int, N: int, i: np.ndarray) -> np.ndarray:
    ahead = N - i
    behind = -i
    plus = np.where((ahead >= 1) & (ahead <= 2 * n_k - 1), np.minimum(ahead, 2 * n_k - ahead), 0)
    minus = np.where((behind >= 1) & (behind <= 2 * n_k - 1), np.minimum(behind, 2 * n_k - behind), 0)
    return plus - minus


def _closed_weights(n_k: int, N: int, i: np.ndarray) -> np.ndarray:
    if N <= n_k:
        return _short_sum_weights(n_k, N, i) - _short_sum_weights(n_k, N, i + n_k)
    return _long_sum_weights(n_k, N, i)


def closed_form_coefficients(n_k: int, N: int) -> Tuple[int, np.ndarray]:
    """Dense closed-form coefficients over [1-2n_k, N-1] as (offset, array)."""
    if N < 1:
        raise RangeError(f"N must be >= 1, got {N}")
    offset = 1 - 2 * n_k
    i = np.arange(offset, N, dtype=np.int64)
    return offset, _closed_weights(n_k, N, i).astype(np.int64)


def sum_closed(field: SparseLevelField, n_k: int, N: int) -> int:
    """S_N(h_k) from the closed forms, touching only events in the referenced windows."""
    if N < 1:
        raise RangeError(f"N must be >= 1, got {N}")
    if N <= n_k:
        field.require(1 - 2 * n_k, N - 1)
        idx, val = field.window(1 - 2 * n_k, N - 1)
        return int(np.dot(_closed_weights(n_k, N, idx), val))
    # two windows, merged additively where they overlap (n_k < N < 2n_k)
    field.require(1 - 2 * n_k, -1)
    field.require(N - 2 * n_k + 1, N - 1)
    total = 0
    idx, val = field.window(N - 2 * n_k + 1, N - 1)
    ahead = N - idx
    total += int(np.dot(np.minimum(ahead, 2 * n_k - ahead), val))
    idx, val = field.window(1 - 2 * n_k, -1)
    behind = -idx
    total -= int(np.dot(np.minimum(behind, 2 * n_k - behind), val))
    return total


def sum_direct(field: SparseLevelField, n_k: int, N: int) -> int:
    """sum_{j<N} h_k(j) evaluated position by position from prefix sums."""
    if N < 1:
        raise RangeError(f"N must be >= 1, got {N}")
    dense = field.dense(1 - 2 * n_k, N - 1)
    prefix = np.concatenate(([0], np.cumsum(dense)))
    q = np.arange(2 * n_k - 1, N + 2 * n_k - 1)
    h = prefix[q + 1] - 2 * prefix[q + 1 - n_k] + prefix[q + 1 - 2 * n_k]
    return int(h.sum())


# ---------- transfer paths ----------
def _scatter_transfer(
    idx: np.ndarray, val: np.ndarray, n_k: int, a: int, length: int
) -> np.ndarray:
    out = np.zeros(length, dtype=np.int64)
    weights = transfer_weights(n_k)
    lags = np.arange(1, 2 * n_k, dtype=np.int64)
    step = max(1, SCATTER_CHUNK // max(1, lags.size))
    for start in range(0, idx.size, step):
        chunk_idx = idx[start : start + step]
        chunk_val = val[start : start + step]
        positions = chunk_idx[:, None] + lags[None, :] - a
        contributions = -chunk_val[:, None] * weights[None, :]
        inside = (positions >= 0) & (positions < length)
        np.add.at(out, positions[inside], contributions[inside])
    return out


def _dense_transfer(field: SparseLevelField, n_k: int, a: int, b: int) -> np.ndarray:
    origin = a - 2 * n_k + 1
    dense = field.dense(origin, b - 1)
    prefix = np.concatenate(([0], np.cumsum(dense)))
    # box sums u(x) = sum_{j<n} e(x-j) for x in [a-n, b-1]
    q = np.arange(a - n_k - origin, b - origin)
    box = prefix[q + 1] - prefix[q + 1 - n_k]
    box_prefix = np.concatenate(([0], np.cumsum(box)))
    offsets = np.arange(0, b - a + 1)
    return -(box_prefix[offsets + n_k] - box_prefix[offsets])


def transfer_path(field: SparseLevelField, n_k: int, a: int, b: int) -> np.ndarray:
    """t_k(N) for every N in [a, b]."""
    if b < a:
        raise RangeError(f"empty range [{a}, {b}]")
    field.require(a - 2 * n_k + 1, b - 1)
    idx, val = field.window(a - 2 * n_k + 1, b - 1)
    length = b - a + 1
    if idx.size * (2 * n_k - 1) <= length + 2 * n_k:
        return _scatter_transfer(idx, val, n_k, a, length)
    return _dense_transfer(field, n_k, a, b)


def level_sum_path(field: SparseLevelField, n_k: int, a: int, b: int) -> np.ndarray:
    """S_N(h_k) for N in [a, b] as t_k(0) - t_k(N)."""
    return eval_transfer_level(field, 0) - transfer_path(field, n_k, a, b)


def window_max(field: SparseLevelField, n_k: int, a: int, b: int) -> int:
    """max_{a<=N<=b} |S_N(h_k)| visiting only the influence windows of the events.

    Outside every window t_k(N) = 0, so S_N(h_k) = t_k(0) there.
    """
    if b < a:
        raise RangeError(f"empty range [{a}, {b}]")
    field.require(1 - 2 * n_k, -1)
    field.require(a - 2 * n_k + 1, b - 1)
    t0 = eval_transfer_level(field, 0)
    idx, _ = field.window(a - 2 * n_k + 1, b - 1)
    if idx.size == 0:
        return abs(t0)
    starts = np.maximum(idx + 1, a)
    ends = np.minimum(idx + 2 * n_k - 1, b)
    reach = np.maximum.accumulate(ends)
    opens = np.ones(idx.size, dtype=bool)
    opens[1:] = starts[1:] > reach[:-1] + 1
    heads = np.flatnonzero(opens)
    cluster_starts = starts[heads]
    cluster_ends = np.maximum.reduceat(ends, heads)

    best = 0
    covered = 0
    for s, e in zip(cluster_starts.tolist(), cluster_ends.tolist()):
        values = transfer_path(field, n_k, s, e)
        best = max(best, int(np.max(np.abs(t0 - values))))
        covered += e - s + 1
    if covered < b - a + 1:
        best = max(best, abs(t0))
    return best


# ---------- noise ----------
def noise_prefix_sums(noise: np.ndarray) -> np.ndarray:
    """S_N(m) for N = 0..len(noise), chunked cumsum with exactly rounded chunk offsets."""
    noise = np.asarray(noise, dtype=np.float64)
    out = np.empty(noise.size + 1, dtype=np.float64)
    out[0] = 0.0
    chunk_totals: List[float] = []
    offset = 0.0
    for start in range(0, noise.size, NOISE_CHUNK):
        chunk = noise[start : start + NOISE_CHUNK]
        out[start + 1 : start + 1 + chunk.size] = offset + np.cumsum(chunk)
        chunk_totals.append(math.fsum(chunk.tolist()))
        offset = math.fsum(chunk_totals)
    return out


# ---------- paths ----------
@dataclass(frozen=True, eq=False)
class PathSample:
    n_lo: int
    h: np.ndarray
    m: Optional[np.ndarray] = None
    config: Optional[ProcessConfig] = None
    focus_level: Optional[int] = None
    mode: str = MODE_FULL
    per_level: Mapping[int, np.ndarray] = dataclass_field(default_factory=dict)
    fields: Mapping[int, SparseLevelField] = dataclass_field(default_factory=dict)
    intrusion_levels: Tuple[int, ...] = ()
    trial: int = 0
    y: np.ndarray = dataclass_field(init=False)

    def __post_init__(self) -> None:
        h = np.asarray(self.h, dtype=np.int64)
        m = np.zeros(h.size) if self.m is None else np.asarray(self.m, dtype=np.float64)
        if h.ndim != 1 or m.shape != h.shape:
            raise RangeError("path arrays must be 1-d and of equal length")
        if self.n_lo < 0:
            raise RangeError(f"path must start at N >= 0, got {self.n_lo}")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "y", h + m)

    @property
    def n_hi(self) -> int:
        return self.n_lo + self.h.size - 1

    @property
    def intrusion(self) -> bool:
        return bool(self.intrusion_levels)

    def covers(self, N: int) -> bool:
        return N == 0 or self.n_lo <= N <= self.n_hi

    def value(self, N: int, series: str = "y") -> float:
        if N == 0:
            return 0.0
        if not self.n_lo <= N <= self.n_hi:
            raise RangeError(f"N={N} outside path range [{self.n_lo}, {self.n_hi}]")
        return float(getattr(self, series)[N - self.n_lo])

    def csv_rows(self) -> Iterator[Tuple[int, int, float, float]]:
        for offset in range(self.h.size):
            yield (
                self.n_lo + offset,
                int(self.h[offset]),
                float(self.m[offset]),
                float(self.y[offset]),
            )

    def field_rows(self) -> Iterator[Tuple[int, int, int]]:
        """(level, index, value) for every event of the simulated levels."""
        for level in sorted(self.fields):
            yield from self.fields[level].csv_rows()


def _sampled_field(
    config: ProcessConfig,
    level: int,
    interval: Tuple[int, int],
    trial: int,
    fields: Optional[Mapping[int, SparseLevelField]],
    event_budget: Optional[int],
) -> SparseLevelField:
    if fields is not None and level in fields:
        return fields[level]
    n_j = config.n(level)
    return sample_level_field(
        level,
        n_j,
        interval,
        level_stream(config, level, interval, trial),
        event_budget=event_budget,
    )


def path_profile(
    config: ProcessConfig,
    k: int,
    n_range: Tuple[int, int],
    mode: str = MODE_FULL,
    *,
    trial: int = 0,
    fields: Optional[Mapping[int, SparseLevelField]] = None,
    noise: Optional[np.ndarray] = None,
    include_noise: bool = True,
    event_budget: Optional[int] = None,
    sweep_budget: Optional[int] = None,
) -> PathSample:
    """Partial sums over an N-range for one trial.

    In ``full`` mode every simulated level contributes to S_N(h); in ``focus``
    mode only level k does, and the levels above k are only inspected for
    events that could reach the range (the intrusion flag).
    """
    if mode not in PATH_MODES:
        raise RangeError(f"unknown path mode '{mode}'", hint="use full or focus")
    a, b = int(n_range[0]), int(n_range[1])
    n_k = config.n(k)
    if a < 1 or b < a or b > n_k * n_k:
        raise RangeError(f"N-range [{a}, {b}] must lie in [1, {n_k * n_k}]")
    length = b - a + 1
    sweep_budget = settings.SWEEP_BUDGET if sweep_budget is None else sweep_budget
    event_budget = settings.EVENT_BUDGET if event_budget is None else event_budget
    if length > sweep_budget:
        raise CapacityError(
            f"N-range of {length} points exceeds the sweep budget {sweep_budget}",
            hint="use window_max in focus+intrusion mode for max-only sweeps",
        )

    if mode == MODE_FULL:
        levels = list(range(1, config.truncation + 1))
        expected = sum((b + 2 * n) / (n * n) for n in config.levels)
        if expected > event_budget:
            raise CapacityError(
                f"full mode expects {expected:.3g} events (budget {event_budget})",
                hint="use focus+intrusion mode",
            )
    else:
        levels = [k]

    sampled: Dict[int, SparseLevelField] = {}
    per_level: Dict[int, np.ndarray] = {}
    for j in levels:
        n_j = config.n(j)
        interval = (1 - 2 * n_j, b - 1)
        sampled[j] = _sampled_field(config, j, interval, trial, fields, event_budget)
        per_level[j] = level_sum_path(sampled[j], n_j, a, b)

    intrusion = []
    for j in range(k + 1, config.truncation + 1):
        n_j = config.n(j)
        interval = (1 - 2 * n_j, b - 1)
        field = sampled.get(j) or _sampled_field(
            config, j, interval, trial, fields, event_budget
        )
        if field.window(1 - 2 * n_j, b - 1)[0].size:
            intrusion.append(j)

    h = np.zeros(length, dtype=np.int64)
    for values in per_level.values():
        h += values

    m = None
    if include_noise:
        if noise is None:
            interval = (0, b - 1)
            noise = sample_noise(config.noise, interval, noise_stream(config, interval, trial))
        m = noise_prefix_sums(noise)[a : b + 1]

    logger.debug(
        f"path trial={trial} level={k} mode={mode} range=[{a}, {b}] "
        f"intrusion={intrusion}"
    )
    return PathSample(
        n_lo=a,
        h=h,
        m=m,
        config=config,
        focus_level=k,
        mode=mode,
        per_level=per_level,
        fields=sampled,
        intrusion_levels=tuple(intrusion),
        trial=trial,
    )


def _scaled_position(n: int, t: Union[float, Fraction]) -> Tuple[int, Fraction]:
    if not 0 <= t <= 1:
        raise RangeError(f"t={t} outside [0, 1]")
    position = n * Fraction(t)
    whole = math.floor(position)
    return whole, position - whole


def path_functional(
    path: PathSample,
    n: int,
    t: Union[float, Fraction],
    kind: str = KIND_POLYGONAL,
    series: str = "y",
) -> float:
    """Polygonal S*_n(t) or step S**_n(t), unnormalized."""
    if kind not in (KIND_POLYGONAL, KIND_STEP):
        raise RangeError(f"unknown path kind '{kind}'")
    whole, fraction = _scaled_position(n, t)
    base = path.value(whole, series)
    if kind == KIND_STEP or fraction == 0:
        return base
    upper = path.value(whole + 1, series)
    return base + float(fraction) * (upper - base)


def uniform_grid(points: int) -> List[Fraction]:
    if points < 1:
        raise RangeError("grid needs at least one interval")
    return [Fraction(i, points) for i in range(points + 1)]


def functional_grid(
    path: PathSample,
    n: int,
    ts: Sequence[Union[float, Fraction]],
    kind: str = KIND_POLYGONAL,
    series: str = "y",
) -> List[Tuple[float, float]]:
    return [(float(t), path_functional(path, n, t, kind, series)) for t in ts]


def sup_norm(path: PathSample, n: int, series: str = "y") -> float:
    """max_t |S*_n(t)| / sqrt(n); the polygonal and step paths share it (vertices)."""
    if not path.covers(n):
        raise RangeError(f"path does not reach N={n}")
    values = [abs(path.value(j, series)) for j in range(0, n + 1) if path.covers(j)]
    if len(values) != n + 1:
        raise RangeError(f"path must cover every N in [1, {n}]")
    return max(values) / math.sqrt(n)


def max_statistic(
    path: PathSample, k: int, window: Optional[Tuple[int, int]] = None, n_k: Optional[int] = None
) -> float:
    """max over the window (default [2n_k, n_k^2]) of |S_N(h)| / n_k."""
    if n_k is None:
        if path.config is None:
            raise RangeError("max_statistic needs n_k when the path has no config")
        n_k = path.config.n(k)
    lo, hi = window if window is not None else (2 * n_k, n_k * n_k)
    if lo > hi or lo < path.n_lo or hi > path.n_hi:
        raise RangeError(
            f"path range [{path.n_lo}, {path.n_hi}] does not cover window [{lo}, {hi}]"
        )
    segment = path.h[lo - path.n_lo : hi - path.n_lo + 1]
    return float(np.max(np.abs(segment))) / n_k


# ---------- level-separation bounds ----------
def lower_level_envelope(seq: LevelSequence, k: int) -> int:
    """Deterministic bound 2 sum_{j<k} n_j^2 on |S_N(sum_{j<k} h_j)| for N >= 2n_{k-1}."""
    return 2 * sum(n * n for n in seq.levels[: k - 1])


def intrusion_bound(seq: LevelSequence, k: int, K: Optional[int] = None) -> Fraction:
    """Union bound sum_{k<j<=K} 2n_k/n_j on levels above k reaching [1, n_k^2]."""
    K = seq.K if K is None else K
    n_k = seq.n(k)
    return sum((Fraction(2 * n_k, seq.n(j)) for j in range(k + 1, K + 1)), Fraction(0))


def untruncated_intrusion_bound(k: int) -> Fraction:
    """2/k, valid when the polynomial-ratio condition holds above k."""
    return Fraction(2, k)


def intrusion_probability(seq: LevelSequence, k: int, K: Optional[int] = None) -> float:
    """Exact P(some level j in (k, K] has an event in [1-2n_j, n_k^2-1])."""
    K = seq.K if K is None else K
    horizon = seq.n(k) ** 2
    log_clear = 0.0
    for j in range(k + 1, K + 1):
        n_j = seq.n(j)
        log_clear += (horizon + 2 * n_j - 1) * math.log1p(-1.0 / (n_j * n_j))
    return -math.expm1(log_clear)
