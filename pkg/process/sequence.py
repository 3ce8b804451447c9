"""Lacunary level sequences.

The level parameters n_1 < n_2 < ... drive every other module.  Sequences are
immutable values carrying their origin, and the index K0 from which the two
lacunarity conditions

    16 * sum_{j<=k} n_j^2 <= n_{k+1}        (square-sum gap)
    (k+1)^2 * n_k         <= n_{k+1}        (polynomial ratio)

hold through the end of the sequence.

A sequence is usable once n_1 >= 2 and every level doubles; only the
window-maximum bounds above a level additionally need k >= K0.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

from mpmath.ctx_mp import MPContext

from utils.errors import (
    BelowRangeError,
    BudgetError,
    CapacityError,
    InvalidSequenceError,
    LabError,
)
from utils.logger import get_logger

ORIGIN_EXPLICIT = "explicit"
ORIGIN_DELTA = "delta"
ORIGIN_ADAPTIVE = "adaptive"

INT64_LIMIT = 1 << 63
MAX_PRECISION_BITS = 1 << 24

logger = get_logger("sequence")

Number = Union[int, float, str, Fraction]


def _as_fraction(value: Number) -> Fraction:
    # floats go through their decimal repr so that 0.1 means 1/10
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


@dataclass(frozen=True)
class RateBudget:
    """Decreasing positive rate c_j evaluated exactly at integer indices."""

    name: str
    rule: Callable[[int], Number]

    def evaluate(self, j: int) -> Fraction:
        try:
            value = _as_fraction(self.rule(j))
        except Exception as exc:
            raise BudgetError(
                f"rate budget '{self.name}' is not evaluable at j={j}: {exc}", index=j
            ) from exc
        if value <= 0:
            raise BudgetError(
                f"rate budget '{self.name}' must be positive, got c_{j}={value}", index=j
            )
        return value

    @classmethod
    def preset(cls, name: str) -> RateBudget:
        presets: Dict[str, Callable[[int], Number]] = {
            "inv-linear": lambda j: Fraction(1, j),
            "inv-square": lambda j: Fraction(1, j * j),
            "constant": lambda j: 1,
        }
        if name not in presets:
            raise BudgetError(
                f"unknown rate budget '{name}'",
                hint=f"choose one of {', '.join(sorted(presets))}",
            )
        return cls(name=name, rule=presets[name])


@dataclass(frozen=True)
class ValidationReport:
    levels: Tuple[int, ...]
    first_level_ok: bool
    doubling: Tuple[bool, ...]
    square_sum_gap: Tuple[bool, ...]
    polynomial_ratio: Tuple[bool, ...]
    k0: int

    @property
    def K(self) -> int:
        return len(self.levels)

    @property
    def is_usable(self) -> bool:
        """n_1 >= 2 and doubling; the two lacunarity conditions only move k0."""
        return self.first_level_ok and all(self.doubling)

    @property
    def from_last_level(self) -> bool:
        """No transition satisfies both conditions through the end."""
        return self.K >= 2 and self.k0 == self.K

    def holds_from(self, k: int) -> bool:
        return k >= self.k0

    def failures(self) -> List[str]:
        messages = []
        if not self.first_level_ok:
            messages.append(f"n_1 = {self.levels[0]} violates n_1 >= 2")
        for k, ok in enumerate(self.doubling, start=1):
            if not ok:
                messages.append(
                    f"doubling n_{k + 1} >= 2*n_{k} fails at k={k} "
                    f"({self.levels[k]} < {2 * self.levels[k - 1]})"
                )
        return messages

    def condition_failures(self) -> List[str]:
        messages = []
        for k, ok in enumerate(self.square_sum_gap, start=1):
            if not ok:
                required = 16 * sum(n * n for n in self.levels[:k])
                messages.append(
                    f"square-sum gap 16*sum(n_j^2, j<=k) <= n_(k+1) fails at k={k} "
                    f"({required} > {self.levels[k]})"
                )
        for k, ok in enumerate(self.polynomial_ratio, start=1):
            if not ok:
                messages.append(
                    f"polynomial ratio (k+1)^2*n_k <= n_(k+1) fails at k={k} "
                    f"({(k + 1) ** 2 * self.levels[k - 1]} > {self.levels[k]})"
                )
        return messages

    def to_dict(self) -> Dict[str, Any]:
        return {
            "levels": list(self.levels),
            "first_level_ok": self.first_level_ok,
            "doubling": list(self.doubling),
            "square_sum_gap": list(self.square_sum_gap),
            "polynomial_ratio": list(self.polynomial_ratio),
            "k0": self.k0,
            "from_last_level": self.from_last_level,
            "usable": self.is_usable,
            "failures": self.failures(),
            "condition_failures": self.condition_failures(),
        }


def _check_levels(levels: Sequence[int]) -> Tuple[int, ...]:
    if not levels:
        raise InvalidSequenceError("level sequence is empty")
    values = tuple(int(n) for n in levels)
    if any(n < 1 for n in values):
        raise InvalidSequenceError(f"levels must be positive integers, got {values}")
    for k in range(1, len(values)):
        if values[k] <= values[k - 1]:
            raise InvalidSequenceError(
                f"levels must be strictly increasing; n_{k + 1}={values[k]} "
                f"<= n_{k}={values[k - 1]}"
            )
    return values


def _lacunarity(levels: Tuple[int, ...]) -> ValidationReport:
    K = len(levels)
    doubling, gap, ratio = [], [], []
    square_sum = 0
    for k in range(1, K):
        n_k, n_next = levels[k - 1], levels[k]
        square_sum += n_k * n_k
        doubling.append(n_next >= 2 * n_k)
        gap.append(16 * square_sum <= n_next)
        ratio.append((k + 1) ** 2 * n_k <= n_next)

    k0 = K
    for k in range(K - 1, 0, -1):
        if gap[k - 1] and ratio[k - 1]:
            k0 = k
        else:
            break
    if K == 1:
        k0 = 1
    return ValidationReport(
        levels=levels,
        first_level_ok=levels[0] >= 2,
        doubling=tuple(doubling),
        square_sum_gap=tuple(gap),
        polynomial_ratio=tuple(ratio),
        k0=k0,
    )


@dataclass(frozen=True)
class LevelSequence:
    levels: Tuple[int, ...]
    origin: str = ORIGIN_EXPLICIT
    delta: Optional[Fraction] = None
    budget: Optional[RateBudget] = None
    validated_from: int = field(init=False)

    def __post_init__(self) -> None:
        levels = _check_levels(self.levels)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "validated_from", _lacunarity(levels).k0)

    @property
    def K(self) -> int:
        return len(self.levels)

    def n(self, k: int) -> int:
        """Level parameter n_k (1-indexed)."""
        if not 1 <= k <= self.K:
            raise InvalidSequenceError(f"level {k} outside 1..{self.K}")
        return self.levels[k - 1]

    def truncated(self, K: int) -> LevelSequence:
        return LevelSequence(self.levels[:K], self.origin, self.delta, self.budget)

    def describe(self) -> str:
        if self.origin == ORIGIN_DELTA:
            return f"delta:{self.delta}:{self.K}"
        if self.origin == ORIGIN_ADAPTIVE and self.budget is not None:
            return f"adaptive:{self.budget.name}:{self.K}"
        return "explicit:" + ",".join(str(n) for n in self.levels)

    def to_json(self) -> Dict[str, Any]:
        return {
            "levels": [str(n) if n >= INT64_LIMIT else n for n in self.levels],
            "origin": self.origin,
            "delta": None if self.delta is None else str(self.delta),
            "budget": None if self.budget is None else self.budget.name,
            "K0": self.validated_from,
        }

    @classmethod
    def from_json(cls, payload: Dict[str, Any]) -> LevelSequence:
        budget = payload.get("budget")
        delta = payload.get("delta")
        return cls(
            levels=tuple(int(n) for n in payload["levels"]),
            origin=payload.get("origin", ORIGIN_EXPLICIT),
            delta=None if delta is None else Fraction(delta),
            budget=None if budget is None else RateBudget.preset(budget),
        )


def validate_lacunary(seq: Union[LevelSequence, Sequence[int]]) -> ValidationReport:
    levels = seq.levels if isinstance(seq, LevelSequence) else _check_levels(seq)
    return _lacunarity(tuple(levels))


# ---------- delta rule ----------
def _floor_exp2(exponent: Fraction) -> int:
    """Exact floor(2**exponent) for a positive rational exponent."""
    if exponent.denominator == 1:
        return 1 << exponent.numerator
    value_bits = math.floor(exponent) + 1
    exponent_bits = max(exponent.numerator.bit_length() - exponent.denominator.bit_length() + 1, 1)
    precision = value_bits + exponent_bits + 64
    while precision <= MAX_PRECISION_BITS:
        ctx = MPContext()
        ctx.prec = precision
        z = ctx.mpf(exponent.numerator) / exponent.denominator
        y = ctx.power(2, z)
        slack = ctx.ldexp(y, -(precision - exponent_bits - 16))
        low = int(ctx.floor(y - slack))
        high = int(ctx.floor(y + slack))
        if low == high:
            return low
        precision *= 2
    raise CapacityError(
        f"could not isolate floor(2^{exponent}) within {MAX_PRECISION_BITS} bits"
    )


def delta_sequence(delta: Number, K: int, *, big_integers: bool = True) -> LevelSequence:
    """n_k = floor(16^((2+delta)^k)) for k = 1..K."""
    d = _as_fraction(delta)
    if d <= 0:
        raise InvalidSequenceError(f"delta must be positive, got {d}")
    if K < 1:
        raise InvalidSequenceError(f"level count must be >= 1, got {K}")
    levels = []
    for k in range(1, K + 1):
        exponent = 4 * (2 + d) ** k
        if not big_integers and exponent >= 63:
            raise CapacityError(
                f"level {k} needs about {math.floor(exponent) + 1} bits and overflows "
                "64-bit integers",
                hint="use big-integer mode or fewer levels",
                first_offending_level=k,
            )
        levels.append(_floor_exp2(exponent))
    return LevelSequence(tuple(levels), origin=ORIGIN_DELTA, delta=d)


# ---------- adaptive rule ----------
def adaptive_sequence(
    budget: RateBudget, K: int, enforce_lacunarity: bool = True
) -> LevelSequence:
    """Smallest levels with n_{k+1} >= 8/c_{2n_k} and n_{k+1} >= 2n_k.

    With ``enforce_lacunarity`` the square-sum gap and polynomial ratio are
    added as constraints, so the result validates from K0 = 1.
    """
    if K < 1:
        raise InvalidSequenceError(f"level count must be >= 1, got {K}")
    levels = [2]
    previous: Optional[Fraction] = None
    for k in range(1, K):
        n_k = levels[-1]
        c = budget.evaluate(2 * n_k)
        if previous is not None and c > previous:
            raise BudgetError(
                f"rate budget '{budget.name}' increases at j={2 * n_k}", index=2 * n_k
            )
        previous = c
        candidates = [math.ceil(8 / c), 2 * n_k]
        if enforce_lacunarity:
            candidates.append(16 * sum(n * n for n in levels))
            candidates.append((k + 1) ** 2 * n_k)
        levels.append(max(candidates))
    return LevelSequence(tuple(levels), origin=ORIGIN_ADAPTIVE, budget=budget)


def level_index(seq: LevelSequence, N: int) -> int:
    """Unique k with n_k <= N < n_{k+1}; the last level is unbounded above."""
    k = bisect.bisect_right(seq.levels, N)
    if k == 0:
        raise BelowRangeError(f"N={N} is below n_1={seq.levels[0]}", N=N)
    return k


def parse_sequence(text: str, default_levels: int = 3) -> LevelSequence:
    """Parse ``explicit:2,64,65600 | delta:0.1[:K] | adaptive:<budget>[:K][:free]``."""
    kind, _, rest = text.strip().partition(":")
    parts = rest.split(":") if rest else []
    try:
        if kind == ORIGIN_EXPLICIT:
            if not parts or not parts[0]:
                raise InvalidSequenceError("explicit sequence needs at least one level")
            return LevelSequence(tuple(int(x) for x in parts[0].split(",")))
        if kind == ORIGIN_DELTA:
            K = int(parts[1]) if len(parts) > 1 else default_levels
            return delta_sequence(Fraction(parts[0]), K)
        if kind == ORIGIN_ADAPTIVE:
            K = int(parts[1]) if len(parts) > 1 else default_levels
            enforce = not (len(parts) > 2 and parts[2] == "free")
            return adaptive_sequence(RateBudget.preset(parts[0]), K, enforce)
    except (IndexError, ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, LabError):
            raise
        raise InvalidSequenceError(f"cannot parse sequence '{text}': {exc}") from exc
    raise InvalidSequenceError(
        f"unknown sequence kind '{kind}'",
        hint="use explicit:a,b,c | delta:<d>[:K] | adaptive:<budget>[:K]",
    )


def ensure_usable(seq: LevelSequence) -> ValidationReport:
    """Validation report of ``seq``; raises when the sequence cannot drive a run."""
    report = validate_lacunary(seq)
    if not report.is_usable:
        raise InvalidSequenceError(
            f"sequence {seq.describe()} is not usable: " + "; ".join(report.failures()),
            hint="n_1 must be at least 2 and every level at least twice the previous one",
            k0=report.k0,
        )
    if report.from_last_level:
        logger.warning(
            f"sequence {seq.describe()} satisfies the lacunarity conditions only "
            f"from its last level (k0={report.k0})"
        )
    return report


def require_lacunary_from(seq: LevelSequence, k: int) -> ValidationReport:
    """Raise unless both lacunarity conditions hold on every transition from level k."""
    report = validate_lacunary(seq)
    if not report.holds_from(k):
        raise InvalidSequenceError(
            f"sequence {seq.describe()} satisfies the lacunarity conditions only from "
            f"level {report.k0}, not from level {k}: " + "; ".join(report.condition_failures()),
            hint="pick a level >= k0 or grow the levels above it",
            k0=report.k0,
            level=k,
        )
    return report
