from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial import cKDTree

from src.algorithm.frechet.problem import (
    FrechetProblem, cut_mass, frechet_value, frechet_values, gradient, one_sided_derivative,
)
from src.algorithm.geometry.manifold import DEFAULT_CUT_TOLERANCE
from src.algorithm.geometry.sequences import unit_directions
from src.utils.analysis.descent_logger import DescentLogger
from src.utils.errors import StepSizeError, invalid

NEAR_TIE_TOLERANCE: float = 1e-9
INCREASE_TOLERANCE: float = 1e-14
STRICT_ATOM_MARGIN: float = 1e-9
MAX_ORACLE_CANDIDATES: int = 16
ORACLE_NEIGHBOURS: int = 12


@dataclass(frozen=True)
class SolverParams:
    step_size: float = 0.5
    max_iterations: int = 10_000
    grad_tolerance: float = 1e-9
    restart_count: int = 0
    tie_break_seed: int | None = None
    cut_tolerance: float = DEFAULT_CUT_TOLERANCE
    cut_mass_epsilons: tuple[float, ...] = (0.025, 0.05, 0.1, 0.2)
    max_halvings: int = 20
    divergence_limit: int = 10
    threads: int = 1

    def __post_init__(self):
        if not 0 < self.step_size <= 1:
            raise invalid(f"Step size must lie in (0, 1], got {self.step_size}.",
                          "Set solver STEP_SIZE, default 0.5.")
        if self.grad_tolerance <= 0 or self.cut_tolerance <= 0:
            raise invalid("Solver tolerances must be positive.",
                          "Set solver GRAD_TOLERANCE and CUT_TOLERANCE > 0.")
        if self.max_iterations < 1 or self.restart_count < 0:
            raise invalid("Solver needs MAX_ITERATIONS >= 1 and RESTART_COUNT >= 0.",
                          "Check the solver section of the config.")


@dataclass(eq=False)
class MeanResult:
    mean: np.ndarray
    value: float
    grad_norm: float
    iterations: int
    converged: bool
    cut_mass_profile: list[tuple[float, float]]
    atom_at_mean_mass: float
    multivalued: bool = False
    le_barden: bool = False
    near_ties: list[np.ndarray] = field(default_factory=list)
    grid_point: np.ndarray | None = None
    grid_value: float | None = None
    covering_radius: float | None = None
    atom_margin: float | None = None
    trace: list[dict] = field(default_factory=list)

    @property
    def exact_cut_mass(self) -> float:
        return self.cut_mass_profile[0][1]


def _atom_optimality(prob: FrechetProblem, index: int, tol: float) -> tuple[bool, float, float]:
    """
    Whether atom ``index`` minimizes F^(1) locally, with the subgradient distance max(0, |R| - w_a)
    where R is the pull of all other atoms, and the margin min D_a F(v) over unit v.

    The margin is w_a - |R| for a single-valued pull. With a multivalued log among the other atoms
    it is the smallest exact one-sided derivative over a set of directions. A positive margin makes
    the atom a strict local minimizer; a zero margin leaves a flat direction along which F^(1) ties.
    """
    atom = prob.atoms[index]
    pull = gradient(prob, atom, tol, exclude_atoms=True)
    weight = float(prob.weights[index])
    excess = max(0.0, pull.norm - weight)
    if pull.multivalued:
        dim = prob.manifold.dim
        directions = unit_directions(max(2 * dim, 8 * dim), dim)
        margin = min(one_sided_derivative(prob, atom, v, tol, allow_atoms=True) for v in directions)
    else:
        margin = weight - pull.norm
    optimal = margin >= -1e-12
    return optimal, 0.0 if optimal else excess, float(margin)


def gradient_descent_mean(prob: FrechetProblem, init, params: SolverParams = SolverParams(),
                          logger: DescentLogger | None = None) -> MeanResult:
    """
    First-order descent mu_(k+1) = exp(mu_k, tau G_k / (p max(1, dbar^(p-1)))) from ``init``,
    with step halving on increase and ``params.restart_count`` extra starts from the dense sequence.
    The start with the lowest final value wins; earlier starts win ties.
    """
    manifold = prob.manifold
    starts = [manifold.point(init)]
    if params.restart_count:
        starts += list(manifold.dense_sequence(params.restart_count))

    best = None
    for start in starts:
        result = _descend(prob, start, params, logger)
        if best is None or result.value < best.value:
            best = result
    return best


def _descend(prob: FrechetProblem, start: np.ndarray, params: SolverParams,
             logger: DescentLogger | None) -> MeanResult:
    manifold, p, tol = prob.manifold, prob.p, params.cut_tolerance
    rng = None if params.tie_break_seed is None else np.random.default_rng(params.tie_break_seed)
    if logger is not None:
        logger.reset()

    q = manifold.point(start)
    value = frechet_value(prob, q)
    increases = 0
    converged = False
    grad_norm = np.inf
    multivalued = False
    atom_margin = None
    iteration = 0

    for iteration in range(params.max_iterations + 1):
        distances = manifold.distances(q, prob.atoms)

        if p == 1:
            nearest = int(np.argmin(distances))
            if distances[nearest] <= tol or frechet_value(prob, prob.atoms[nearest]) <= value:
                optimal, excess, margin = _atom_optimality(prob, nearest, tol)
                if optimal:
                    q = manifold.point(prob.atoms[nearest])
                    value, grad_norm, converged = frechet_value(prob, q), excess, True
                    atom_margin = margin
                    break

        grad = gradient(prob, q, tol, rng, exclude_atoms=(p == 1))
        grad_norm, multivalued = grad.norm, grad.multivalued
        if grad_norm < params.grad_tolerance:
            converged = True
            break
        if iteration == params.max_iterations:
            break

        mean_distance = float(prob.weights @ distances)
        step = grad.vector.components * params.step_size / (p * max(1.0, mean_distance ** (p - 1)))
        halvings = 0
        while True:
            candidate = manifold.exp_many(q, step[None, :])[0]
            candidate_value = frechet_value(prob, candidate)
            increased = candidate_value - value > INCREASE_TOLERANCE * max(1.0, abs(value))
            if not increased or halvings == params.max_halvings:
                break
            step = step / 2
            halvings += 1

        increases = increases + 1 if increased else 0
        if increases >= params.divergence_limit:
            raise StepSizeError(
                f"F increased on {increases} consecutive accepted steps at iteration {iteration} "
                f"(F = {candidate_value:.6g}).\n"
                f"[Tip] Lower solver STEP_SIZE (now {params.step_size})."
            )
        q, value = manifold.point(candidate), candidate_value
        if logger is not None:
            logger.log(iteration, value, grad_norm, float(np.linalg.norm(step)), halvings)

    if logger is not None:
        logger.log(iteration, value, grad_norm)
    return MeanResult(
        mean=q,
        value=float(value),
        grad_norm=float(grad_norm),
        iterations=iteration,
        converged=converged,
        cut_mass_profile=cut_mass(prob, q, params.cut_mass_epsilons, tol),
        atom_at_mean_mass=prob.measure.atom_mass_at(q, tol),
        multivalued=multivalued,
        atom_margin=atom_margin,
        trace=logger.as_rows() if logger is not None else [],
    )


def p_mean(prob: FrechetProblem, init, params: SolverParams = SolverParams(),
           logger: DescentLogger | None = None) -> MeanResult:
    """
    Fréchet p-mean by descent. For p = 1 the result flags the regime where the mean is an atom
    that strictly minimizes F^(1) (D_a F(v) > 0 for every unit v) while atoms also sit exactly on
    its cut locus. A median tied along a flat arc is not flagged.
    """
    result = gradient_descent_mean(prob, init, params, logger)
    if prob.p == 1:
        strict = result.atom_margin is not None and result.atom_margin > STRICT_ATOM_MARGIN
        result.le_barden = strict and result.atom_at_mean_mass > 0 and result.exact_cut_mass > 0
    return result


def _grid_candidates(values: np.ndarray, points: np.ndarray, manifold) -> np.ndarray:
    """Indices of discrete local minima among nearest grid neighbours, best first."""
    if len(points) <= ORACLE_NEIGHBOURS:
        return np.argsort(values, kind="stable")
    coordinates, box = manifold.kd_coordinates(points)
    tree = cKDTree(coordinates, boxsize=box)
    _, neighbours = tree.query(coordinates, k=ORACLE_NEIGHBOURS + 1)
    local = np.all(values[:, None] <= values[neighbours] + NEAR_TIE_TOLERANCE, axis=1)
    indices = np.flatnonzero(local)
    return indices[np.argsort(values[indices], kind="stable")]


def brute_force_mean(prob: FrechetProblem, resolution: int, params: SolverParams = SolverParams(),
                     logger: DescentLogger | None = None) -> MeanResult:
    """
    Global oracle: evaluate F on ``grid(resolution)``, refine the grid minimum and the best discrete
    local minima by descent, and report all refined minima within 1e-9 of the best as near-ties.
    The reported mean is the first minimum in grid order among the near-ties.
    """
    manifold = prob.manifold
    grid = manifold.grid(resolution)
    values = frechet_values(prob, grid.points, params.threads)
    threshold = values.min() + NEAR_TIE_TOLERANCE
    grid_index = int(np.flatnonzero(values <= threshold)[0])

    candidates = [grid_index] + [int(i) for i in _grid_candidates(values, grid.points, manifold)
                                 if i != grid_index][:MAX_ORACLE_CANDIDATES - 1]
    single_start = replace(params, restart_count=0)
    refined: list[tuple[int, MeanResult]] = []
    for index in candidates:
        result = p_mean(prob, grid.points[index], single_start, logger)
        refined.append((index, result))

    best_value = min(result.value for _, result in refined)
    ties: list[tuple[int, MeanResult]] = []
    for index, result in refined:
        if result.value > best_value + NEAR_TIE_TOLERANCE:
            continue
        duplicate = any(manifold.distances(result.mean, other.mean[None, :])[0] <= 1e-6
                        for _, other in ties)
        if not duplicate:
            ties.append((index, result))
    ties.sort(key=lambda pair: pair[0])

    _, best = ties[0]
    best.near_ties = [result.mean for _, result in ties]
    best.grid_point = grid.points[grid_index]
    best.grid_value = float(values[grid_index])
    best.covering_radius = grid.covering_radius
    return best
