"""Exact mixing coefficients and the per-level bound chain.

Probabilities are ``Fraction`` throughout; floats appear only in reports.
For two finite partitions with joint law P and marginals r, c:

    beta = 1/2 sum_ij |P_ij - r_i c_j|
    alpha = max_{S,T} |P(S x T) - r(S) c(T)|
    phi   = max_{S,T} |P(T | S) - c(T)|

For a fixed row union S the best column union collects either all positive
or all negative deviations, so only row subsets are enumerated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from checks.enumeration import exact_law, ternary_law
from config import settings
from process.field import h_stencil
from process.sequence import LevelSequence
from utils.errors import CapacityError, EnumerationBudgetError, LabError, RangeError
from utils.logger import get_logger

logger = get_logger("mixing")

Number = Union[int, float, Fraction]


def _as_fraction(value: Number) -> Fraction:
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


def _check_law(probabilities: Sequence[Fraction], what: str) -> None:
    if any(p <= 0 for p in probabilities):
        raise LabError(f"{what} probabilities must be positive")
    if sum(probabilities) != 1:
        raise LabError(f"{what} probabilities sum to {sum(probabilities)}, not 1")


# ---------- partitions and joint laws ----------
@dataclass(frozen=True)
class FinitePartition:
    """Explicit atoms, or the product partition of independent coordinates."""

    atoms: Tuple[Tuple[str, Fraction], ...] = ()
    coordinate_laws: Tuple[Tuple[Fraction, ...], ...] = ()

    def __post_init__(self) -> None:
        if bool(self.atoms) == bool(self.coordinate_laws):
            raise LabError("a partition needs either atoms or coordinate laws")
        if self.atoms:
            _check_law([p for _, p in self.atoms], "atom")
        for index, law in enumerate(self.coordinate_laws):
            _check_law(law, f"coordinate {index}")

    @classmethod
    def from_probabilities(
        cls, probabilities: Sequence[Number], labels: Optional[Sequence[str]] = None
    ) -> FinitePartition:
        labels = labels or [str(i) for i in range(len(probabilities))]
        return cls(atoms=tuple((str(name), _as_fraction(p)) for name, p in zip(labels, probabilities)))

    @classmethod
    def product(cls, laws: Sequence[Sequence[Number]]) -> FinitePartition:
        return cls(coordinate_laws=tuple(tuple(_as_fraction(p) for p in law) for law in laws))

    @classmethod
    def level_block(cls, n_k: int, m: int) -> FinitePartition:
        """Product partition of m ternary coordinates of level k."""
        if m < 1:
            raise RangeError(f"need at least one coordinate, got {m}")
        return cls.product([ternary_law(n_k)] * m)

    @property
    def is_product(self) -> bool:
        return bool(self.coordinate_laws)

    def atom_count(self) -> int:
        if self.atoms:
            return len(self.atoms)
        return math.prod(len(law) for law in self.coordinate_laws)

    def max_atom(self) -> Fraction:
        if self.atoms:
            return max(p for _, p in self.atoms)
        return math.prod((max(law) for law in self.coordinate_laws), start=Fraction(1))

    def collision_probability(self) -> Fraction:
        """sum of squared atom probabilities."""
        if self.atoms:
            return sum((p * p for _, p in self.atoms), Fraction(0))
        return math.prod(
            (sum((p * p for p in law), Fraction(0)) for law in self.coordinate_laws),
            start=Fraction(1),
        )

    def enumerate_atoms(self, limit: Optional[int] = None) -> List[Tuple[str, Fraction]]:
        if self.atoms:
            return list(self.atoms)
        limit = settings.ENUMERATION_BUDGET if limit is None else limit
        count = self.atom_count()
        if count > limit:
            raise EnumerationBudgetError(
                f"product partition has {count} atoms (limit {limit})",
                required_coordinates=len(self.coordinate_laws),
            )
        atoms = []
        for combo in product(*[list(enumerate(law)) for law in self.coordinate_laws]):
            label = "".join(str(i) for i, _ in combo)
            atoms.append((label, math.prod((p for _, p in combo), start=Fraction(1))))
        return atoms

    def probabilities(self) -> List[Fraction]:
        return [p for _, p in self.enumerate_atoms()]

    def diagonal_joint(self) -> JointLaw:
        """Joint law of the partition with itself."""
        probs = self.probabilities()
        size = len(probs)
        return JointLaw(
            tuple(
                tuple(probs[i] if i == j else Fraction(0) for j in range(size))
                for i in range(size)
            )
        )


@dataclass(frozen=True)
class JointLaw:
    """matrix[i][j] = mu(A_i and B_j)."""

    matrix: Tuple[Tuple[Fraction, ...], ...]

    def __post_init__(self) -> None:
        matrix = tuple(tuple(_as_fraction(v) for v in row) for row in self.matrix)
        if not matrix or not matrix[0]:
            raise LabError("joint law must have at least one row and column")
        width = len(matrix[0])
        if any(len(row) != width for row in matrix):
            raise LabError("joint law rows must have equal length")
        if any(v < 0 for row in matrix for v in row):
            raise LabError("joint law entries must be nonnegative")
        total = sum((v for row in matrix for v in row), Fraction(0))
        if total != 1:
            raise LabError(f"joint law sums to {total}, not 1")
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def independent(cls, rows: Sequence[Number], columns: Sequence[Number]) -> JointLaw:
        return cls(
            tuple(
                tuple(_as_fraction(r) * _as_fraction(c) for c in columns) for r in rows
            )
        )

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.matrix), len(self.matrix[0])

    def row_marginal(self) -> List[Fraction]:
        return [sum(row, Fraction(0)) for row in self.matrix]

    def column_marginal(self) -> List[Fraction]:
        return [sum(column, Fraction(0)) for column in zip(*self.matrix)]

    def marginals_match(self, rows: FinitePartition, columns: FinitePartition) -> bool:
        return self.row_marginal() == rows.probabilities() and (
            self.column_marginal() == columns.probabilities()
        )


@dataclass(frozen=True)
class MixingCoefficients:
    beta: Fraction
    alpha: Optional[Fraction] = None
    phi: Optional[Fraction] = None
    note: str = ""

    @property
    def complete(self) -> bool:
        return self.alpha is not None and self.phi is not None

    def ordering_ok(self) -> bool:
        """2 alpha <= beta <= phi (vacuously true when alpha/phi are unavailable)."""
        if not self.complete:
            return True
        return 2 * self.alpha <= self.beta <= self.phi

    def to_dict(self) -> Dict[str, Any]:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "phi": self.phi,
            "note": self.note,
        }


def _beta_of(matrix, rows, columns) -> Fraction:
    total = Fraction(0)
    for i, row in enumerate(matrix):
        for j, value in enumerate(row):
            total += abs(value - rows[i] * columns[j])
    return total / 2


def partition_coefficients(joint: JointLaw, atom_limit: Optional[int] = None) -> MixingCoefficients:
    atom_limit = settings.PARTITION_ATOM_LIMIT if atom_limit is None else atom_limit
    rows = joint.row_marginal()
    columns = joint.column_marginal()
    beta = _beta_of(joint.matrix, rows, columns)
    height, width = joint.shape
    if max(height, width) > atom_limit:
        return MixingCoefficients(
            beta=beta,
            note=f"alpha/phi unavailable: {max(height, width)} atoms exceed the limit {atom_limit}",
        )

    scale = math.lcm(*(v.denominator for row in joint.matrix for v in row))
    counts = [[int(v * scale) for v in row] for row in joint.matrix]
    column_mass = [sum(counts[i][j] for i in range(height)) for j in range(width)]

    # Gray-code walk over row unions; deviations are kept in units of 1/scale^2
    inside = [False] * height
    union_columns = [0] * width
    union_mass = 0
    alpha_best = 0
    phi_best = Fraction(0)
    for step in range(1, 2**height):
        flip = (step & -step).bit_length() - 1
        sign = -1 if inside[flip] else 1
        inside[flip] = not inside[flip]
        union_mass += sign * sum(counts[flip])
        for j in range(width):
            union_columns[j] += sign * counts[flip][j]
        deviations = [union_columns[j] * scale - union_mass * column_mass[j] for j in range(width)]
        positive = sum(d for d in deviations if d > 0)
        negative = -sum(d for d in deviations if d < 0)
        best = max(positive, negative)
        alpha_best = max(alpha_best, best)
        if union_mass > 0:
            phi_best = max(phi_best, Fraction(best, scale * union_mass))
    return MixingCoefficients(beta=beta, alpha=Fraction(alpha_best, scale * scale), phi=phi_best)


# ---------- self-beta and atom bounds ----------
def _coordinate_laws(laws: Any) -> List[Tuple[Fraction, ...]]:
    if isinstance(laws, FinitePartition):
        if laws.is_product:
            return list(laws.coordinate_laws)
        return [tuple(laws.probabilities())]
    laws = list(laws)
    if laws and not isinstance(laws[0], (list, tuple)):
        laws = [laws]
    return [tuple(_as_fraction(p) for p in law) for law in laws]


def self_beta_product(laws: Any, m: int = 1) -> Fraction:
    """beta(P, P) = 1 - sum of squared atoms for the product of the coordinate laws.

    ``laws`` is one law, a list of per-coordinate laws or a partition; the
    coordinates are repeated ``m`` times.
    """
    if m < 1:
        raise RangeError(f"need at least one coordinate, got {m}")
    collision = Fraction(1)
    for law in _coordinate_laws(laws):
        _check_law(law, "coordinate")
        collision *= sum((p * p for p in law), Fraction(0))
    return 1 - collision**m


def atom_beta_bound(partition: FinitePartition) -> Fraction:
    """2 (1 - mu(D)) for the largest atom D."""
    return 2 * (1 - partition.max_atom())


# ---------- finite-window oracle ----------
@dataclass(frozen=True)
class OracleResult:
    n_k: int
    N: int
    L: int
    coordinates: int
    configurations: int
    beta: Fraction

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_k": self.n_k,
            "N": self.N,
            "L": self.L,
            "coordinates": self.coordinates,
            "configurations": self.configurations,
            "beta": {
                "numerator": str(self.beta.numerator),
                "denominator": str(self.beta.denominator),
                "value": float(self.beta),
            },
        }


def window_coordinates(n_k: int, N: int, L: int) -> List[int]:
    """Field sites read by h_k on [-L, 0] and on [N, N+L]."""
    past = range(-L - 2 * n_k + 1, 1)
    future = range(N - 2 * n_k + 1, N + L + 1)
    return sorted(set(past) | set(future))


def _block_rows(n_k: int, positions: Sequence[int], coordinates: Sequence[int]) -> np.ndarray:
    stencil = h_stencil(n_k)
    column = {c: p for p, c in enumerate(coordinates)}
    rows = np.zeros((len(positions), len(coordinates)), dtype=np.int64)
    for r, i in enumerate(positions):
        for lag, weight in enumerate(stencil):
            rows[r, column[i - lag]] = weight
    return rows


def finite_window_oracle(
    n_k: int, N: int, L: int, *, budget: Optional[int] = None, workers: int = 1
) -> OracleResult:
    """Exact beta between (h_k(i))_{-L<=i<=0} and (h_k(i))_{N<=i<=N+L}."""
    if N < 0 or L < 0:
        raise RangeError(f"N and L must be nonnegative, got N={N}, L={L}")
    coordinates = window_coordinates(n_k, N, L)
    budget = settings.ENUMERATION_BUDGET if budget is None else budget
    if N >= 2 * n_k and 3 ** len(coordinates) > budget:
        # the two blocks read disjoint sites
        return OracleResult(n_k, N, L, len(coordinates), 0, Fraction(0))
    past = list(range(-L, 1))
    future = list(range(N, N + L + 1))
    rows = np.vstack(
        [_block_rows(n_k, past, coordinates), _block_rows(n_k, future, coordinates)]
    )
    law, denominator = exact_law(rows, n_k, budget=budget, kind="window_beta", workers=workers)
    split = len(past)
    x_mass: Dict[Tuple[int, ...], int] = {}
    y_mass: Dict[Tuple[int, ...], int] = {}
    for outcome, mass in law.items():
        x, y = outcome[:split], outcome[split:]
        x_mass[x] = x_mass.get(x, 0) + mass
        y_mass[y] = y_mass.get(y, 0) + mass
    total = denominator * denominator
    for outcome, mass in law.items():
        independent = x_mass[outcome[:split]] * y_mass[outcome[split:]]
        total += abs(mass * denominator - independent) - independent
    beta = Fraction(total, 2 * denominator * denominator)
    logger.debug(f"window oracle n_k={n_k} N={N} L={L} beta={float(beta):.6f}")
    return OracleResult(n_k, N, L, len(coordinates), 3 ** len(coordinates), beta)


def finite_window_beta_exact(n_k: int, N: int, L: int, **kwargs) -> Fraction:
    return finite_window_oracle(n_k, N, L, **kwargs).beta


# ---------- bound profiles ----------
def level_beta_bound(n_k: int, N: int) -> Fraction:
    """4/n_k below the dependence range 2n_k, exactly zero from there on."""
    if N < 0:
        raise RangeError(f"N must be nonnegative, got {N}")
    return Fraction(4, n_k) if N < 2 * n_k else Fraction(0)


def aggregate_beta_bound(seq: LevelSequence, N: int, K: Optional[int] = None) -> Fraction:
    """B(N) = sum over levels with 2n_j > N of 4/n_j."""
    K = seq.K if K is None else K
    return sum((level_beta_bound(n, N) for n in seq.levels[:K]), Fraction(0))


def _rate_product(seq: LevelSequence, N: int, exponent: float) -> float:
    return float(aggregate_beta_bound(seq, 2 * N)) * N**exponent


def refined_grid(grid: Sequence[int], factor: int = 2) -> List[int]:
    """The grid plus ``factor`` times as many geometric points over the same range."""
    grid = sorted(set(int(N) for N in grid))
    lo = max(grid[0], 1) if grid else 1
    if len(grid) < 2 or factor < 2 or lo >= grid[-1]:
        return grid
    extra = np.geomspace(lo, grid[-1], num=factor * len(grid)).astype(np.int64)
    return sorted(set(grid) | {int(N) for N in extra if grid[0] <= N <= grid[-1]})


def rate_supremum(seq: LevelSequence, delta: Number, lo: int, hi: int) -> float:
    """Exact sup over integers N in [lo, hi] of B(2N) * N^(1/(2+delta)).

    B(2N) only drops at N = n_j, so the supremum sits at hi or just below a drop.
    """
    exponent = 1.0 / (2.0 + float(delta))
    candidates = {hi} | {n - 1 for n in seq.levels if lo <= n - 1 <= hi}
    return max(_rate_product(seq, N, exponent) for N in candidates)


@dataclass(frozen=True)
class BoundRow:
    N: int
    per_level: Tuple[Fraction, ...]
    aggregate: Fraction
    rate_product: Optional[float] = None


@dataclass(frozen=True)
class BudgetCheck:
    k: int
    aggregate: Fraction
    budget: Fraction

    @property
    def ok(self) -> bool:
        return self.aggregate <= self.budget


@dataclass(frozen=True)
class MixingBoundProfile:
    seq: LevelSequence
    rows: Tuple[BoundRow, ...]
    delta: Optional[Fraction] = None
    budget_checks: Tuple[BudgetCheck, ...] = ()
    rate_sup_exact: Optional[float] = None
    rate_sup_refined: Optional[float] = None

    @property
    def monotone(self) -> bool:
        values = [row.aggregate for row in self.rows]
        return all(a >= b for a, b in zip(values, values[1:]))

    @property
    def rate_sup(self) -> Optional[float]:
        products = [row.rate_product for row in self.rows if row.rate_product is not None]
        return max(products) if products else None

    @property
    def rate_drift(self) -> Optional[float]:
        """Relative rise of the grid supremum when the grid is refined."""
        if self.rate_sup is None or self.rate_sup_refined is None:
            return None
        if self.rate_sup == 0:
            return 0.0 if self.rate_sup_refined == 0 else math.inf
        return self.rate_sup_refined / self.rate_sup - 1.0

    def rate_stable(self, tolerance: Optional[float] = None) -> bool:
        tolerance = settings.RATE_GRID_TOLERANCE if tolerance is None else tolerance
        drift = self.rate_drift
        return (
            drift is not None
            and self.rate_sup_exact is not None
            and math.isfinite(self.rate_sup_exact)
            and drift <= tolerance
        )

    @property
    def budget_ok(self) -> bool:
        return all(check.ok for check in self.budget_checks)

    def csv_header(self) -> List[str]:
        return [
            "N",
            *[f"beta_level_{k}" for k in range(1, self.seq.K + 1)],
            "aggregate",
            "rate_product",
        ]

    def csv_rows(self) -> List[Tuple[Any, ...]]:
        return [
            (
                row.N,
                *[float(v) for v in row.per_level],
                float(row.aggregate),
                "" if row.rate_product is None else row.rate_product,
            )
            for row in self.rows
        ]


def beta_bound_profile(
    seq: LevelSequence,
    n_values: Sequence[int],
    delta: Optional[Number] = None,
    refine: int = 2,
) -> MixingBoundProfile:
    if delta is None and seq.delta is not None:
        delta = seq.delta
    delta = None if delta is None else _as_fraction(delta)
    exponent = None if delta is None else 1.0 / (2.0 + float(delta))
    rows = []
    grid = sorted(set(int(N) for N in n_values))
    for N in grid:
        per_level = tuple(level_beta_bound(n, N) for n in seq.levels)
        rate = None
        if exponent is not None and N >= 1:
            rate = _rate_product(seq, N, exponent)
        rows.append(BoundRow(N, per_level, sum(per_level, Fraction(0)), rate))

    checks = []
    if seq.budget is not None:
        for k, n_k in enumerate(seq.levels, start=1):
            checks.append(
                BudgetCheck(k, aggregate_beta_bound(seq, 2 * n_k), seq.budget.evaluate(2 * n_k))
            )
    rate_exact = rate_refined = None
    if exponent is not None and grid and grid[-1] >= 1:
        rate_exact = rate_supremum(seq, delta, max(grid[0], 1), grid[-1])
        rate_refined = max(
            _rate_product(seq, N, exponent) for N in refined_grid(grid, refine) if N >= 1
        )
    return MixingBoundProfile(seq, tuple(rows), delta, tuple(checks), rate_exact, rate_refined)


# ---------- the chain at one level ----------
@dataclass(frozen=True)
class BoundChain:
    n_k: int
    L: int
    oracle: Optional[Fraction]
    self_beta: Fraction
    atom_bound: Fraction
    level_bound: Fraction
    note: str = ""

    @property
    def ordered(self) -> bool:
        chain = [self.self_beta, self.atom_bound, self.level_bound]
        if self.oracle is not None:
            chain.insert(0, self.oracle)
        return all(a <= b for a, b in zip(chain, chain[1:]))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_k": self.n_k,
            "L": self.L,
            "oracle": self.oracle,
            "self_beta": self.self_beta,
            "atom_bound": self.atom_bound,
            "level_bound": self.level_bound,
            "ordered": self.ordered,
            "note": self.note,
        }


def atom_bound_chain(
    n_k: int, L: int = 0, *, budget: Optional[int] = None, workers: int = 1
) -> BoundChain:
    """oracle <= self-beta <= 2(1 - mu(P0)) <= 4/n_k over the 2n_k sites of one stencil."""
    block = FinitePartition.level_block(n_k, 2 * n_k)
    oracle = None
    note = ""
    try:
        oracle = finite_window_beta_exact(n_k, 0, L, budget=budget, workers=workers)
    except CapacityError as exc:
        note = str(exc)
    return BoundChain(
        n_k=n_k,
        L=L,
        oracle=oracle,
        self_beta=self_beta_product(block),
        atom_bound=atom_beta_bound(block),
        level_bound=level_beta_bound(n_k, 0),
        note=note,
    )
