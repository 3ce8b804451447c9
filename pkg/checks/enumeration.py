"""Exact laws of integer linear forms in i.i.d. ternary coordinates.

A configuration with z zero coordinates out of M has probability

    (2(n^2 - 1))^z / (2 n^2)^M

so the mass of every outcome is an integer numerator over a common
denominator and configurations can be aggregated with plain integer sums.
"""

from fractions import Fraction
from typing import Dict, Optional, Tuple

import numpy as np

from config import settings
from utils.errors import EnumerationBudgetError
from utils.metrics import metrics
from utils.streams import map_blocks

CHUNK_ROWS = 3 ** 11

Outcome = Tuple[int, ...]


def ternary_law(n_k: int) -> Tuple[Fraction, Fraction, Fraction]:
    """Probabilities of -1, 0, +1 at one site of level k."""
    edge = Fraction(1, 2 * n_k * n_k)
    return edge, 1 - 2 * edge, edge


def require_budget(coordinates: int, budget: Optional[int] = None, kind: str = "") -> int:
    budget = settings.ENUMERATION_BUDGET if budget is None else budget
    configurations = 3**coordinates
    if configurations > budget:
        metrics.capacity_errors_total.labels(kind="enumeration").inc()
        raise EnumerationBudgetError(
            f"{kind or 'enumeration'} needs 3^{coordinates} = {configurations} "
            f"configurations (budget {budget})",
            required_coordinates=coordinates,
        )
    return configurations


def _configurations(start: int, stop: int, coordinates: int) -> np.ndarray:
    codes = np.arange(start, stop, dtype=np.int64)
    powers = 3 ** np.arange(coordinates, dtype=np.int64)
    return ((codes[:, None] // powers[None, :]) % 3 - 1).astype(np.int64)


def exact_law(
    rows: np.ndarray,
    n_k: int,
    *,
    budget: Optional[int] = None,
    kind: str = "linear_form",
    workers: int = 1,
) -> Tuple[Dict[Outcome, int], int]:
    """Joint law of ``rows @ e`` as integer numerators over a common denominator.

    ``rows`` has one row per linear form and one column per coordinate.
    Returns ({outcome: numerator}, denominator).
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=np.int64))
    coordinates = rows.shape[1]
    total = require_budget(coordinates, budget, kind)
    zero_weight = 2 * (n_k * n_k - 1)
    zero_powers = [zero_weight**z for z in range(coordinates + 1)]
    chunks = [
        (index, start, min(CHUNK_ROWS, total - start))
        for index, start in enumerate(range(0, total, CHUNK_ROWS))
    ]

    def accumulate(chunk: Tuple[int, int, int]) -> Dict[Outcome, int]:
        _, start, size = chunk
        configs = _configurations(start, start + size, coordinates)
        keyed = np.column_stack([configs @ rows.T, (configs == 0).sum(axis=1)])
        unique, counts = np.unique(keyed, axis=0, return_counts=True)
        partial: Dict[Outcome, int] = {}
        for row, count in zip(unique.tolist(), counts.tolist()):
            outcome = tuple(row[:-1])
            partial[outcome] = partial.get(outcome, 0) + count * zero_powers[row[-1]]
        return partial

    law: Dict[Outcome, int] = {}
    for partial in map_blocks(accumulate, chunks, workers):
        for outcome, mass in partial.items():
            law[outcome] = law.get(outcome, 0) + mass
    metrics.enumerated_configurations_total.labels(kind=kind).inc(total)
    return law, (2 * n_k * n_k) ** coordinates


def exact_pmf(coefficients: np.ndarray, n_k: int, **kwargs) -> Dict[int, Fraction]:
    """Probability mass function of one linear form."""
    law, denominator = exact_law(np.asarray(coefficients)[None, :], n_k, **kwargs)
    return {outcome[0]: Fraction(mass, denominator) for outcome, mass in sorted(law.items())}
