"""Statistical and combinatorial checks on the constructed process.

Exact quantities (variances, Bell numbers, moments, bounds) are rationals;
Monte Carlo quantities come back as ``EstimateWithCI`` built from mergeable
accumulators over independently seeded trial blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field
from fractions import Fraction
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from mpmath.ctx_mp import MPContext
from scipy import stats as scipy_stats

from checks.enumeration import exact_pmf
from config import settings
from process.field import (
    ProcessConfig,
    h_stencil,
    level_batch_stream,
    noise_batch_stream,
    sample_level_batch,
    sample_noise,
    transfer_weights,
)
from process.sequence import LevelSequence, level_index, require_lacunary_from
from process.sums import (
    MODE_FOCUS,
    MODE_FULL,
    closed_form_coefficients,
    coefficient_map,
    intrusion_bound,
    intrusion_probability,
    lower_level_envelope,
    path_profile,
    sum_closed,
    untruncated_intrusion_bound,
    window_max,
)
from utils.accumulators import BernoulliCounter, RunningMoments
from utils.errors import (
    CapacityError,
    EnumerationBudgetError,
    LabError,
    RangeError,
    TrialCountError,
)
from utils.logger import get_logger
from utils.metrics import metrics
from utils.streams import map_blocks, substream, trial_blocks

logger = get_logger("stats")

MODE_LEVEL = "level"
NONTIGHT_MODES = (MODE_LEVEL, MODE_FULL, MODE_FOCUS)

Number = Union[int, float, Fraction]


def _fraction(value: Number) -> Fraction:
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


@dataclass(frozen=True)
class EstimateWithCI:
    estimate: float
    standard_error: float
    trials: int
    seed: int
    bound: Optional[float] = None
    label: str = ""

    def lower(self, sigmas: Optional[float] = None) -> float:
        sigmas = settings.SIGMA_MARGIN if sigmas is None else sigmas
        return self.estimate - sigmas * self.standard_error

    def exceeds_bound(self, sigmas: Optional[float] = None) -> bool:
        """estimate - sigmas * SE > bound."""
        return self.bound is not None and self.lower(sigmas) > self.bound

    def to_dict(self) -> Dict[str, Any]:
        return {
            "label": self.label,
            "estimate": self.estimate,
            "standard_error": self.standard_error,
            "trials": self.trials,
            "seed": self.seed,
            "bound": self.bound,
        }


def probability_estimate(
    counter: BernoulliCounter, seed: int, bound: Optional[Number] = None, label: str = ""
) -> EstimateWithCI:
    return EstimateWithCI(
        estimate=counter.estimate,
        standard_error=counter.standard_error,
        trials=counter.trials,
        seed=seed,
        bound=None if bound is None else float(bound),
        label=label,
    )


# ---------- variances ----------
def variance_level_exact(n_k: int, N: int) -> Fraction:
    """E[S_N(h_k)^2] = (1/n_k^2) * sum_i c_i^2."""
    if N < 1:
        raise RangeError(f"N must be >= 1, got {N}")
    n = n_k
    if N >= 2 * n:
        squares = (4 * n**3 + 2 * n) // 3
    elif N <= n:
        squares = N * (N - 1) ** 2 + 2 * N * N * (n - N + 1)
    else:
        squares = coefficient_map(n, N).square_sum()
    return Fraction(squares, n * n)


def _inverse_square_tail(start: int) -> float:
    """sum_{j >= start} j^-2."""
    return math.pi**2 / 6 - sum(1.0 / (j * j) for j in range(1, start))


@dataclass(frozen=True)
class VarianceRow:
    N: int
    level_index: int
    per_level: Tuple[Fraction, ...]
    total_h: Fraction
    total_y: Fraction
    lower_part: Fraction
    lower_reference: int
    upper_part: Fraction
    upper_reference: float

    @property
    def ratio_h(self) -> float:
        return float(self.total_h / self.N)

    @property
    def ratio_y(self) -> float:
        return float(self.total_y / self.N)

    def split_ok(self, constant: float) -> bool:
        return (
            float(self.lower_part) <= constant * self.lower_reference
            and float(self.upper_part) <= constant * self.upper_reference
        )


@dataclass(frozen=True)
class VarianceReport:
    rows: Tuple[VarianceRow, ...]
    truncation: int
    noise_variance: Fraction

    @property
    def sup_ratio(self) -> float:
        return max((row.ratio_h for row in self.rows), default=0.0)

    @property
    def sup_ratio_N(self) -> Optional[int]:
        if not self.rows:
            return None
        return max(self.rows, key=lambda row: row.ratio_h).N

    def split_ok(self, constant: Optional[float] = None) -> bool:
        constant = settings.VARIANCE_SPLIT_CONSTANT if constant is None else constant
        return all(row.split_ok(constant) for row in self.rows)

    def lower_side_ok(self) -> bool:
        """sigma_N^2(Y)/N >= Var(m) on every row."""
        return all(row.total_y >= self.noise_variance * row.N for row in self.rows)

    def csv_rows(self) -> List[Tuple[Any, ...]]:
        rows = []
        for row in self.rows:
            rows.append(
                (
                    row.N,
                    row.level_index,
                    *[float(v) for v in row.per_level],
                    float(row.total_h),
                    float(row.total_y),
                    row.ratio_h,
                    float(row.lower_part),
                    row.lower_reference,
                    float(row.upper_part),
                    row.upper_reference,
                )
            )
        return rows

    def csv_header(self) -> List[str]:
        return [
            "N",
            "level_index",
            *[f"var_level_{k}" for k in range(1, self.truncation + 1)],
            "sigma2_h",
            "sigma2_y",
            "ratio_h",
            "lower_part",
            "lower_reference",
            "upper_part",
            "upper_reference",
        ]


def variance_profile(config: ProcessConfig, n_values: Sequence[int]) -> VarianceReport:
    """Exact per-level variances and the split at i(N) for every N in the list."""
    seq = config.seq
    rows = []
    for N in sorted(set(int(v) for v in n_values)):
        i = level_index(seq, N)
        per_level = tuple(variance_level_exact(n_j, N) for n_j in config.levels)
        total_h = sum(per_level, Fraction(0))
        lower_part = sum(per_level[: min(i, config.truncation)], Fraction(0))
        upper_part = total_h - lower_part
        if i < seq.K:
            upper_reference = N * N / seq.n(i + 1) * (1.0 + _inverse_square_tail(i + 2))
        else:
            upper_reference = 0.0
        rows.append(
            VarianceRow(
                N=N,
                level_index=i,
                per_level=per_level,
                total_h=total_h,
                total_y=total_h + config.noise.variance * N,
                lower_part=lower_part,
                lower_reference=2 * seq.n(i),
                upper_part=upper_part,
                upper_reference=upper_reference,
            )
        )
    return VarianceReport(tuple(rows), config.truncation, config.noise.variance)


def variance_monte_carlo(
    n_k: int,
    N: int,
    trials: int,
    seed: int,
    *,
    workers: int = 1,
    block_size: Optional[int] = None,
) -> EstimateWithCI:
    """Monte Carlo E[S_N(h_k)^2]; the SE comes from the empirical spread of S_N^2."""
    if trials < 2:
        raise TrialCountError(f"need at least 2 trials, got {trials}")
    block_size = settings.TRIAL_BLOCK if block_size is None else block_size
    offset, coeffs = closed_form_coefficients(n_k, N)
    interval = (offset, N - 1)

    def run_block(block: Tuple[int, int, int]) -> RunningMoments:
        index, _, size = block
        rng = substream(seed, "field-batch", 0, n_k, N, index, size)
        batch = sample_level_batch(1, n_k, interval, size, rng, event_budget=settings.EVENT_BUDGET)
        sums = batch.contract(offset, coeffs).astype(np.float64)
        moments = RunningMoments()
        moments.update_many(sums * sums)
        return moments

    total = RunningMoments()
    for partial in map_blocks(run_block, trial_blocks(trials, block_size), workers):
        total = total.merge(partial)
    metrics.trials_total.labels(suite="variance").inc(trials)
    return EstimateWithCI(
        estimate=total.mean,
        standard_error=total.standard_error,
        trials=trials,
        seed=seed,
        bound=float(variance_level_exact(n_k, N)),
        label=f"E[S_{N}(h)^2] at n_k={n_k}",
    )


# ---------- central limit theorem ----------
def ks_distance(sample: Sequence[float]) -> float:
    """Kolmogorov-Smirnov distance of the empirical law to the standard normal."""
    sample = np.asarray(sample, dtype=np.float64)
    if sample.size == 0:
        raise TrialCountError("empty sample")
    return float(scipy_stats.kstest(sample, scipy_stats.norm.cdf).statistic)


def normal_quantile_sample(size: int) -> np.ndarray:
    """Standard normal quantiles at (i - 0.5)/size; its KS distance is 0.5/size."""
    return scipy_stats.norm.ppf((np.arange(1, size + 1) - 0.5) / size)


@dataclass(frozen=True)
class CLTReport:
    n: int
    trials: int
    seed: int
    ks: float
    ks_band: float
    null_band: float
    threshold: float
    mean: EstimateWithCI
    variance: float

    @property
    def passed(self) -> bool:
        return self.ks < self.threshold

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "trials": self.trials,
            "seed": self.seed,
            "ks_distance": self.ks,
            "ks_band": self.ks_band,
            "null_band": self.null_band,
            "threshold": self.threshold,
            "mean": self.mean.to_dict(),
            "variance": self.variance,
            "passed": self.passed,
        }


def clt_sample(
    config: ProcessConfig,
    n: int,
    trials: int,
    *,
    workers: int = 1,
    block_size: Optional[int] = None,
) -> np.ndarray:
    """S_n(Y)/sqrt(n) for every trial, in trial order."""
    if n < 1:
        raise RangeError(f"scale n must be >= 1, got {n}")
    block_size = settings.TRIAL_BLOCK if block_size is None else block_size
    coefficients = {
        j: closed_form_coefficients(config.n(j), n) for j in range(1, config.truncation + 1)
    }

    def run_block(block: Tuple[int, int, int]) -> np.ndarray:
        index, _, size = block
        total = np.zeros(size, dtype=np.float64)
        for j, (offset, coeffs) in coefficients.items():
            interval = (offset, n - 1)
            batch = sample_level_batch(
                j,
                config.n(j),
                interval,
                size,
                level_batch_stream(config, j, interval, index, size),
                event_budget=settings.EVENT_BUDGET,
            )
            total += batch.contract(offset, coeffs)
        noise = sample_noise(
            config.noise,
            (0, size * n - 1),
            noise_batch_stream(config, (0, n - 1), index, size),
        )
        total += noise.reshape(size, n).sum(axis=1)
        return total / math.sqrt(n)

    blocks = trial_blocks(trials, block_size)
    return np.concatenate(map_blocks(run_block, blocks, workers))


def clt_test(
    config: ProcessConfig,
    n: int,
    trials: int,
    *,
    workers: int = 1,
    block_size: Optional[int] = None,
    threshold: Optional[float] = None,
) -> CLTReport:
    if trials < settings.MIN_CLT_TRIALS:
        raise TrialCountError(
            f"CLT test needs at least {settings.MIN_CLT_TRIALS} trials, got {trials}",
            hint="the KS standard error is too large to be meaningful",
        )
    sample = clt_sample(config, n, trials, workers=workers, block_size=block_size)
    moments = RunningMoments()
    moments.update_many(sample)
    metrics.trials_total.labels(suite="clt").inc(trials)
    report = CLTReport(
        n=n,
        trials=trials,
        seed=config.seed,
        ks=ks_distance(sample),
        ks_band=1.0 / math.sqrt(trials),
        null_band=1.36 / math.sqrt(trials),
        threshold=settings.KS_THRESHOLD if threshold is None else threshold,
        mean=EstimateWithCI(
            moments.mean, moments.standard_error, trials, config.seed, 0.0, "mean of S_n(Y)/sqrt(n)"
        ),
        variance=moments.variance,
    )
    logger.info(f"clt n={n} trials={trials} ks={report.ks:.4f}")
    return report


# ---------- Bonferroni and the window-hit bounds ----------
def bonferroni_bound(p: Sequence[Number], q: Sequence[Sequence[Number]]) -> Number:
    """sum p_i - sum_{i<j} q_ij, a lower bound on the probability of the union."""
    if len(q) != len(p) or any(len(row) != len(p) for row in q):
        raise LabError("pairwise matrix must be square and match the event count")
    for i, value in enumerate(p):
        if not 0 <= value <= 1:
            raise LabError(f"event probability p[{i}] = {value} outside [0, 1]")
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if q[i][j] != q[j][i]:
                raise LabError(f"pairwise matrix is not symmetric at ({i}, {j})")
    first = sum(p)
    second = sum(q[i][j] for i in range(len(p)) for j in range(i + 1, len(p)))
    return first - second


def window_hit_lower_bound(n_k: int) -> Fraction:
    """(1 - 2/n)[(1 - 2/n)^3 - 1/2] for the level-only window maximum."""
    gap = 1 - Fraction(2, n_k)
    return gap * (gap**3 - Fraction(1, 2))


@lru_cache(maxsize=None)
def threshold_N0() -> int:
    """Smallest n >= 3 with window_hit_lower_bound(n) > 1/4."""
    n = 3
    while window_hit_lower_bound(n) <= Fraction(1, 4):
        n += 1
    return n


def window_hit_union_bound(n_k: int) -> Fraction:
    """Bonferroni bound over the single-event configurations B_N, 2n_k <= N <= n_k^2.

    B_N has one nonzero site at N - n_k and zeros on the other 4n_k - 3 sites of
    the two windows, so |S_N(h_k)| = n_k on it; two such events need two nonzero
    sites, hence the pairwise bound n_k^-4.
    """
    n = n_k
    count = (n - 1) ** 2
    single = Fraction(1, n * n) * (1 - Fraction(1, n * n)) ** (4 * n - 3)
    pairs = Fraction(count * (count - 1), 2)
    return count * single - pairs / n**4


# ---------- non-tightness ----------
@dataclass(frozen=True)
class NonTightReport:
    mode: str
    level: int
    n_k: int
    threshold: Fraction
    window: Tuple[int, int]
    window_hit: EstimateWithCI
    endpoint_hit: EstimateWithCI
    truncation: int
    intrusion_bound: Optional[Fraction] = None
    intrusion_probability: Optional[float] = None
    intrusion_rate: Optional[float] = None
    analytic_bounds: Dict[str, float] = dataclass_field(default_factory=dict)

    @property
    def n0_ok(self) -> bool:
        return self.n_k >= threshold_N0()

    @property
    def window_ok(self) -> bool:
        return self.window_hit.exceeds_bound()

    @property
    def endpoint_contrast(self) -> float:
        if self.endpoint_hit.estimate == 0:
            return math.inf
        return self.window_hit.estimate / self.endpoint_hit.estimate

    @property
    def contrast_ok(self) -> bool:
        return self.endpoint_contrast >= 3.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mode": self.mode,
            "level": self.level,
            "n_k": self.n_k,
            "threshold": self.threshold,
            "window": list(self.window),
            "window_hit": self.window_hit.to_dict(),
            "endpoint_hit": self.endpoint_hit.to_dict(),
            "endpoint_contrast": self.endpoint_contrast,
            "truncation": self.truncation,
            "intrusion_bound": self.intrusion_bound,
            "intrusion_probability": self.intrusion_probability,
            "intrusion_rate": self.intrusion_rate,
            "n0": threshold_N0(),
            "n0_ok": self.n0_ok,
            "analytic_bounds": dict(sorted(self.analytic_bounds.items())),
        }


def _hit_limit(threshold: Fraction, n_k: int) -> int:
    """|S| >= threshold * n_k for integer |S| iff |S| >= ceil(threshold * n_k)."""
    return math.ceil(threshold * n_k)


def nontight_prob(
    config: ProcessConfig,
    k: int,
    mode: str = MODE_LEVEL,
    threshold: Number = 1,
    trials: int = 4000,
    *,
    workers: int = 1,
    block_size: Optional[int] = None,
    sweep_budget: Optional[int] = None,
) -> NonTightReport:
    """Estimate mu{max_{2n_k <= N <= n_k^2} |S_N| >= threshold * n_k}.

    ``level`` simulates level k alone, ``full`` every configured level over the
    whole window, ``focus`` level k through the event-driven window maximum.
    In focus mode the window hit is a lower bound (envelope subtracted, a trial
    counted only when no higher level reaches the window) and the endpoint hit
    an upper bound (envelope added, intruded trials counted as hits).
    """
    if mode not in NONTIGHT_MODES:
        raise RangeError(f"unknown mode '{mode}'", hint=f"use one of {', '.join(NONTIGHT_MODES)}")
    if trials < 1:
        raise TrialCountError(f"need at least one trial, got {trials}")
    threshold = _fraction(threshold)
    n_k = config.n(k)
    a, b = 2 * n_k, n_k * n_k
    if b < a:
        raise RangeError(f"window [{a}, {b}] is empty for n_k={n_k}")
    if mode != MODE_LEVEL:
        require_lacunary_from(config.seq.truncated(config.truncation), k)
    block_size = settings.TRIAL_BLOCK if block_size is None else block_size
    sweep_budget = settings.SWEEP_BUDGET if sweep_budget is None else sweep_budget
    if mode == MODE_FULL and b - a + 1 > sweep_budget:
        metrics.capacity_errors_total.labels(kind="sweep").inc()
        raise CapacityError(
            f"full-mode sweep over {b - a + 1} points exceeds the sweep budget {sweep_budget}",
            hint="use focus+intrusion mode",
        )
    limit = _hit_limit(threshold, n_k)
    envelope = lower_level_envelope(config.seq, k) if mode == MODE_FOCUS else 0
    levels = list(range(1, config.truncation + 1)) if mode == MODE_FULL else [k]
    upper = list(range(k + 1, config.truncation + 1)) if mode != MODE_LEVEL else []

    def batch_for(j: int, index: int, size: int):
        n_j = config.n(j)
        interval = (1 - 2 * n_j, b - 1)
        return sample_level_batch(
            j,
            n_j,
            interval,
            size,
            level_batch_stream(config, j, interval, index, size),
            event_budget=settings.EVENT_BUDGET,
        )

    def run_block(block: Tuple[int, int, int]):
        index, start, size = block
        batches = {j: batch_for(j, index, size) for j in sorted(set(levels) | set(upper))}
        window_hits = np.zeros(size, dtype=bool)
        endpoint_hits = np.zeros(size, dtype=bool)
        intruded = np.zeros(size, dtype=bool)
        for t in range(size):
            if mode == MODE_FULL:
                fields = {j: batch.field(t) for j, batch in batches.items()}
                path = path_profile(
                    config,
                    k,
                    (a, b),
                    MODE_FULL,
                    trial=start + t,
                    fields=fields,
                    include_noise=False,
                    sweep_budget=sweep_budget,
                )
                window_hits[t] = int(np.max(np.abs(path.h))) >= limit
                endpoint_hits[t] = abs(int(path.h[-1])) >= limit
                intruded[t] = path.intrusion
                continue
            field = batches[k].field(t)
            peak = window_max(field, n_k, a, b)
            endpoint = abs(sum_closed(field, n_k, b))
            clear = True
            for j in upper:
                n_j = config.n(j)
                if batches[j].field(t).window(1 - 2 * n_j, b - 1)[0].size:
                    clear = False
            intruded[t] = not clear
            window_hits[t] = clear and peak - envelope >= limit
            endpoint_hits[t] = not clear or endpoint + envelope >= limit
        window_counter, endpoint_counter, intrusion_counter = (
            BernoulliCounter(),
            BernoulliCounter(),
            BernoulliCounter(),
        )
        window_counter.update_many(window_hits)
        endpoint_counter.update_many(endpoint_hits)
        intrusion_counter.update_many(intruded)
        return window_counter, endpoint_counter, intrusion_counter

    window_total, endpoint_total, intrusion_total = (
        BernoulliCounter(),
        BernoulliCounter(),
        BernoulliCounter(),
    )
    for w, e, i in map_blocks(run_block, trial_blocks(trials, block_size), workers):
        window_total = window_total.merge(w)
        endpoint_total = endpoint_total.merge(e)
        intrusion_total = intrusion_total.merge(i)
    metrics.trials_total.labels(suite="nontight").inc(trials)

    claimed = Fraction(1, 4) if mode == MODE_LEVEL else Fraction(1, 8)
    analytic = {"claimed": float(claimed)}
    if mode == MODE_LEVEL:
        analytic["window_hit_lower_bound"] = float(window_hit_lower_bound(n_k))
        analytic["window_hit_union_bound"] = float(window_hit_union_bound(n_k))
    else:
        analytic["untruncated_intrusion_bound"] = float(untruncated_intrusion_bound(k))
    report = NonTightReport(
        mode=mode,
        level=k,
        n_k=n_k,
        threshold=threshold,
        window=(a, b),
        window_hit=probability_estimate(
            window_total, config.seed, claimed, f"max |S_N| >= {threshold} n_k on [{a}, {b}]"
        ),
        endpoint_hit=probability_estimate(
            endpoint_total, config.seed, None, f"|S_{b}| >= {threshold} n_k"
        ),
        truncation=config.truncation,
        intrusion_bound=None if mode == MODE_LEVEL else intrusion_bound(config.seq, k, config.truncation),
        intrusion_probability=(
            None if mode == MODE_LEVEL else intrusion_probability(config.seq, k, config.truncation)
        ),
        intrusion_rate=None if mode == MODE_LEVEL else intrusion_total.estimate,
        analytic_bounds=analytic,
    )
    logger.info(
        f"nontight mode={mode} k={k} estimate={report.window_hit.estimate:.4f} "
        f"se={report.window_hit.standard_error:.4f}"
    )
    return report


# ---------- Bell numbers and moments ----------
@lru_cache(maxsize=None)
def _bell_exact(p: int) -> int:
    if p == 0:
        return 1
    return sum(math.comb(p - 1, k) * _bell_exact(k) for k in range(p))


def bell(p: int, fixed_width: Optional[int] = None) -> int:
    """B_p from B_{p+1} = sum_k C(p, k) B_k; ``fixed_width`` guards signed overflow."""
    if p < 0:
        raise RangeError(f"Bell index must be >= 0, got {p}")
    for q in range(p):
        _bell_exact(q)
    value = _bell_exact(p)
    if fixed_width is not None and value >= 1 << (fixed_width - 1):
        raise CapacityError(
            f"B_{p} = {value} does not fit a signed {fixed_width}-bit integer",
            hint="use big-integer mode",
        )
    return value


def bell_table(p_max: int) -> List[int]:
    return [bell(p) for p in range(p_max + 1)]


def h_moment_bound(n_k: int, p: Number) -> Number:
    """Upper bound on E|h_k|^p."""
    p = _fraction(p)
    if p <= 0:
        raise RangeError(f"moment order must be positive, got {p}")
    if p < 1:
        return Fraction(2, n_k)
    if p.denominator == 1:
        return Fraction(2 * bell(int(p)), n_k)
    q = math.ceil(p)
    return float(Fraction(2 * bell(q), n_k)) ** float(p / q)


def g_moment_bound(n_k: int, p: Number) -> Optional[float]:
    """3 n_k^(p-1) for 0 < p < 1; no per-level bound is reported above."""
    p = _fraction(p)
    if not 0 < p < 1:
        return None
    return 3.0 * n_k ** (float(p) - 1.0)


def _absolute_moment(pmf: Dict[int, Fraction], p: Fraction) -> Number:
    if p.denominator == 1:
        return sum((prob * abs(v) ** int(p) for v, prob in pmf.items()), Fraction(0))
    exponent = float(p)
    return math.fsum(float(prob) * abs(v) ** exponent for v, prob in pmf.items() if v)


@dataclass(frozen=True)
class MomentReport:
    n_k: int
    p: Fraction
    h_exact: Optional[Number]
    h_bound: Number
    g_exact: Optional[Number]
    g_bound: Optional[float]
    enumerated: bool
    note: str = ""

    @property
    def h_ok(self) -> bool:
        return self.h_exact is None or self.h_exact <= self.h_bound

    @property
    def g_ok(self) -> bool:
        return self.g_exact is None or self.g_bound is None or float(self.g_exact) <= self.g_bound

    @property
    def passed(self) -> bool:
        return self.h_ok and self.g_ok

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_k": self.n_k,
            "p": self.p,
            "h_exact": self.h_exact,
            "h_bound": self.h_bound,
            "g_exact": self.g_exact,
            "g_bound": self.g_bound,
            "enumerated": self.enumerated,
            "note": self.note,
            "passed": self.passed,
        }


def moment_suite(
    n_k: int, p: Number, *, budget: Optional[int] = None, workers: int = 1
) -> MomentReport:
    """Exact E|h_k|^p and E|g_k|^p by enumeration, next to their bounds."""
    p = _fraction(p)
    h_bound = h_moment_bound(n_k, p)
    g_bound = g_moment_bound(n_k, p)
    try:
        h_pmf = exact_pmf(h_stencil(n_k), n_k, budget=budget, kind="moment_h", workers=workers)
        g_pmf = exact_pmf(transfer_weights(n_k), n_k, budget=budget, kind="moment_g", workers=workers)
    except EnumerationBudgetError as exc:
        logger.warning(f"moment enumeration skipped for n_k={n_k}: {exc}")
        return MomentReport(n_k, p, None, h_bound, None, g_bound, False, note=str(exc))
    return MomentReport(
        n_k=n_k,
        p=p,
        h_exact=_absolute_moment(h_pmf, p),
        h_bound=h_bound,
        g_exact=_absolute_moment(g_pmf, p),
        g_bound=g_bound,
        enumerated=True,
    )


def moment_series(seq: LevelSequence, p: Number, K: Optional[int] = None) -> List[Dict[str, Any]]:
    """Partial sums over levels of the per-level moment bounds.

    For p >= 1 the h terms are norm bounds (E|h_k|^p)^(1/p); for p < 1 they are
    the p-th powers themselves, which are subadditive.
    """
    p = _fraction(p)
    K = seq.K if K is None else K
    rows = []
    h_total = 0.0
    g_total = 0.0
    for k in range(1, K + 1):
        n_k = seq.n(k)
        bound = float(h_moment_bound(n_k, p))
        h_term = bound if p < 1 else bound ** (1.0 / float(p))
        g_term = g_moment_bound(n_k, p)
        h_total += h_term
        if g_term is not None:
            g_total += g_term
        rows.append(
            {
                "k": k,
                "n_k": n_k,
                "h_term": h_term,
                "h_partial": h_total,
                "g_term": g_term,
                "g_partial": g_total if g_term is not None else None,
            }
        )
    return rows


# ---------- transfer-function divergence ----------
def divergence_term_exact(levels: Sequence[int], k: int) -> Fraction:
    """sum_{j=1}^{n_k} j * mu(E_j) with the all-zero-window lower bound for mu(E_j)."""
    n = levels[k - 1]
    clear = Fraction(1)
    for index, n_l in enumerate(levels, start=1):
        if index != k:
            clear *= (1 - Fraction(1, n_l * n_l)) ** (2 * n_l - 1)
    single = Fraction(1, n * n) * (1 - Fraction(1, n * n)) ** (2 * n - 2)
    return Fraction(n * (n + 1), 2) * single * clear


@dataclass(frozen=True)
class DivergenceReport:
    levels: Tuple[int, ...]
    terms: Tuple[float, ...]
    partial_sums: Tuple[float, ...]
    floor: float

    @property
    def positive(self) -> bool:
        return all(term > 0 for term in self.terms)

    @property
    def ratio_ok(self) -> bool:
        """term_k >= 0.9 * term_{k+1} along the truncation."""
        return all(a >= 0.9 * b for a, b in zip(self.terms, self.terms[1:]))

    @property
    def floor_ok(self) -> bool:
        """Every term stays above the level-independent floor C/2."""
        return all(term >= self.floor for term in self.terms)

    @property
    def passed(self) -> bool:
        return self.positive and self.ratio_ok and self.floor_ok

    def csv_rows(self) -> List[Tuple[int, int, float, float]]:
        return [
            (k, n_k, term, partial)
            for k, (n_k, term, partial) in enumerate(
                zip(self.levels, self.terms, self.partial_sums), start=1
            )
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "levels": [str(n) for n in self.levels],
            "terms": list(self.terms),
            "partial_sums": list(self.partial_sums),
            "floor": self.floor,
            "positive": self.positive,
            "ratio_ok": self.ratio_ok,
            "floor_ok": self.floor_ok,
        }


def transfer_divergence(config: ProcessConfig, K: Optional[int] = None) -> DivergenceReport:
    """Per-level lower bounds on E[|g| 1(F_k)] for k <= K, in 40-digit log space."""
    K = config.truncation if K is None else K
    if not 1 <= K <= config.seq.K:
        raise RangeError(f"truncation {K} outside 1..{config.seq.K}")
    levels = config.seq.levels[:K]
    ctx = MPContext()
    ctx.dps = 40
    log_clear = [
        (2 * n - 1) * ctx.log1p(-ctx.mpf(1) / (ctx.mpf(n) ** 2)) for n in levels
    ]
    log_all = ctx.fsum(log_clear)
    terms = []
    for n in levels:
        n_mp = ctx.mpf(n)
        own = (2 * n - 1) * ctx.log1p(-1 / n_mp**2)
        log_term = (
            ctx.log(n_mp * (n_mp + 1) / 2)
            - 2 * ctx.log(n_mp)
            + (2 * n - 2) * ctx.log1p(-1 / n_mp**2)
            + log_all
            - own
        )
        terms.append(float(ctx.exp(log_term)))
    partial = np.cumsum(terms).tolist()
    return DivergenceReport(
        levels=tuple(levels),
        terms=tuple(terms),
        partial_sums=tuple(partial),
        floor=float(ctx.exp(log_all)) / 2,
    )
