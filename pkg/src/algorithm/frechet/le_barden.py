from itertools import combinations

import numpy as np
from numba import njit

from src.algorithm.frechet.problem import FrechetProblem
from src.algorithm.frechet.solver import MeanResult, SolverParams, p_mean
from src.algorithm.geometry.models import TWO_PI, Circle
from src.algorithm.measures.atom_measure import AtomMeasure, make_measure
from src.utils.errors import SearchBudgetExhaustedError, invalid

SCAN_TIE_TOLERANCE: float = 1e-9


@njit(fastmath=False)
def scan_medians(positions: np.ndarray, weight_table: np.ndarray,
                 scan: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Exhaustive scan of F^(1)(t) = sum_i w_i d(t, x_i) on the circle for many weight vectors.

    :param positions: Atom angles, shape (k,)
    :param weight_table: One weight vector per row, shape (m, k)
    :param scan: Evenly spaced scan angles, shape (n,)
    :return: Index into ``scan`` of the first minimum for each weight row, and the largest
        circular index distance from it to any scan angle within SCAN_TIE_TOLERANCE of the minimum
    """
    m, k = weight_table.shape
    n = scan.shape[0]
    distances = np.empty((n, k))
    for j in range(n):
        for i in range(k):
            gap = abs(scan[j] - positions[i]) % TWO_PI
            distances[j, i] = min(gap, TWO_PI - gap)

    minimizers = np.empty(m, dtype=np.int64)
    spreads = np.empty(m, dtype=np.int64)
    values = np.empty(n)
    for row in range(m):
        best_value = np.inf
        best_index = 0
        for j in range(n):
            value = 0.0
            for i in range(k):
                value += weight_table[row, i] * distances[j, i]
            values[j] = value
            # Strict comparison with a small slack keeps the earliest of tied minima
            if value < best_value - 1e-12:
                best_value = value
                best_index = j
        spread = 0
        for j in range(n):
            if values[j] <= best_value + SCAN_TIE_TOLERANCE:
                offset = abs(j - best_index)
                spread = max(spread, min(offset, n - offset))
        minimizers[row] = best_index
        spreads[row] = spread
    return minimizers, spreads


def weight_simplex(parts: int, step: float) -> np.ndarray:
    """All weight vectors with ``parts`` positive entries on the lattice of ``step`` summing to one."""
    units = int(round(1 / step))
    rows = []
    for cuts in combinations(range(1, units), parts - 1):
        bounds = (0,) + cuts + (units,)
        rows.append([bounds[i + 1] - bounds[i] for i in range(parts)])
    return np.array(rows, dtype=np.float64) / units


def find_le_barden_example(resolution: int = 10_000, position_count: int = 8, weight_step: float = 0.1,
                           max_candidates: int = 20_000,
                           params: SolverParams = SolverParams()) -> tuple[AtomMeasure, MeanResult]:
    """
    Search four weighted atoms on the circle whose p = 1 Fréchet mean is an atom
    while the antipode of that atom carries weight as well.

    The candidate mean sits at angle 0 with its antipode at pi; the two remaining atoms range over
    the other angles k * 2pi / position_count and the weights over a simplex lattice. A candidate is
    kept when the exhaustive scan of F^(1) over ``resolution`` angles is minimal at 0 with no near-tie
    more than one scan step away, and descent from 0 confirms a strict minimum at the atom with
    positive exact cut-locus mass.

    :raises SearchBudgetExhaustedError: When no candidate within ``max_candidates`` qualifies
    """
    if resolution < 100:
        raise invalid(f"Scan resolution must be at least 100, got {resolution}.",
                      "Set scenario LE_BARDEN_RESOLUTION >= 100.")
    circle = Circle()
    scan = circle.grid(resolution).points[:, 0]
    weights = weight_simplex(4, weight_step)
    free_angles = [k * TWO_PI / position_count for k in range(1, position_count)
                   if 2 * k != position_count]

    tried = 0
    for a, b in combinations(free_angles, 2):
        positions = np.array([0.0, np.pi, a, b])
        batch = weights[:max(0, max_candidates - tried)]
        tried += len(batch)
        minimizers, spreads = scan_medians(positions, batch, scan)
        for row in np.flatnonzero((minimizers == 0) & (spreads <= 1)):
            measure = make_measure(circle, positions, batch[row])
            result = p_mean(FrechetProblem(circle, measure, 1.0), [0.0], params)
            if result.le_barden and circle.distance(result.mean, [0.0]) <= params.cut_tolerance:
                return measure, result
        if tried >= max_candidates:
            break

    raise SearchBudgetExhaustedError(
        f"No four-atom configuration out of {tried} candidates has a p = 1 mean at an atom with a "
        f"weighted antipode.\n"
        f"[Tip] Refine the search lattice (position_count, weight_step) or raise max_candidates."
    )
