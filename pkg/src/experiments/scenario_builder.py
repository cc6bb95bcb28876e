from dataclasses import dataclass, replace
from functools import wraps
from time import perf_counter
from typing import Callable

import numpy as np

from src.algorithm.frechet.problem import FrechetProblem, frechet_differences, frechet_values
from src.algorithm.frechet.solver import NEAR_TIE_TOLERANCE, MeanResult, SolverParams, brute_force_mean, p_mean
from src.algorithm.geometry.manifold import ManifoldModel
from src.algorithm.geometry.models import Sphere
from src.algorithm.measures.atom_measure import AtomMeasure, dyadic_dirac_measure
from src.algorithm.probes.barrier import ProfileRow
from src.algorithm.probes.differentials import closed_form_linearity_gap, linearity_gap
from src.algorithm.probes.fields import StepSchedule, frechet_field
from src.utils.analysis.conformance_report import ConformanceReport
from src.utils.analysis.descent_logger import DescentLogger
from src.utils.benchmark_timer import Timer
from src.utils.load_config import Config
from src.utils.run_manager import Curve, RunRecord

scenario_timer = Timer()


@dataclass(frozen=True)
class ScenarioEntry:
    name: str
    runner: Callable[[Config], RunRecord]
    citation: str
    description: str


SCENARIOS: dict[str, ScenarioEntry] = {}


def scenario(name: str, citation: str, description: str):
    """
    Register a scenario runner under ``name``.
    The wrapped runner prints the bracketed start and end tags and fills in the wall time and stage timings.
    """
    def decorator(func):
        @wraps(func)
        def wrapper(config: Config) -> RunRecord:
            verbose = config.log.VERBOSE
            if verbose:
                print(f"[Start scenario: {name}]")
            scenario_timer.reset()
            start = perf_counter()
            with scenario_timer.measure(name):
                record = func(config)
            record.wall_time = perf_counter() - start
            record.timings = scenario_timer.as_dict()
            if verbose:
                print(f"[End scenario: {name} {'passed' if record.passed else 'FAILED'} "
                      f"in {record.wall_time:.2f}s]")
            return record

        SCENARIOS[name] = ScenarioEntry(name, wrapper, citation, description)
        return wrapper

    return decorator


def default_oracle_resolution(manifold: ManifoldModel) -> int:
    """Per-axis resolution keeping the oracle grid in the low thousands of points."""
    if manifold.dim == 1:
        return 720
    if isinstance(manifold, Sphere):
        return 40 if manifold.dim == 2 else 16
    return 64 if manifold.dim == 2 else max(2, int(round(4096 ** (1 / manifold.dim))))


def oracle_lipschitz(prob: FrechetProblem) -> float:
    """Lipschitz constant p diam^(p-1) of F^(p)."""
    return prob.p * prob.manifold.diameter ** (prob.p - 1)


def random_points(manifold: ManifoldModel, rng: np.random.Generator, count: int) -> np.ndarray:
    """Uniformly distributed points in canonical coordinates."""
    if isinstance(manifold, Sphere):
        return manifold.points(rng.standard_normal((count, manifold.ambient_dim)))
    if manifold.kind == "circle":
        return manifold.points(rng.uniform(-np.pi, np.pi, count))
    return manifold.points(rng.uniform(0, 1, (count, manifold.dim)) * manifold.periods)


def first_minimum(values: np.ndarray) -> int:
    return int(np.flatnonzero(values <= values.min() + NEAR_TIE_TOLERANCE)[0])


@dataclass(eq=False)
class ScenarioContext:
    config: Config
    manifold: ManifoldModel
    measure: AtomMeasure
    problem: FrechetProblem
    params: SolverParams
    schedule: StepSchedule
    logger: DescentLogger

    @property
    def verbose(self) -> bool:
        return self.config.log.VERBOSE

    @property
    def oracle_resolution(self) -> int:
        resolution = self.config.solver.ORACLE_RESOLUTION
        return default_oracle_resolution(self.manifold) if resolution is None else int(resolution)

    @property
    def tolerance_scale(self) -> float:
        return float(self.config.probe.TOLERANCE_SCALE)

    def say(self, message: str):
        if self.verbose:
            print(message)

    def compute_mean(self) -> tuple[MeanResult, MeanResult]:
        """
        The oracle result and the reported mean. Without a configured INIT the reported mean is the
        oracle's refined minimum; otherwise descent runs from INIT.
        """
        self.say(f"[Start oracle: resolution {self.oracle_resolution}]")
        with scenario_timer.measure("oracle"):
            oracle = brute_force_mean(self.problem, self.oracle_resolution, self.params, self.logger)
        init = self.config.init_point(self.manifold)
        if init is None:
            result = oracle
        else:
            self.say("[Start descent]")
            with scenario_timer.measure("descent"):
                result = p_mean(self.problem, init, self.params, self.logger)
            result.grid_point, result.grid_value = oracle.grid_point, oracle.grid_value
            result.covering_radius, result.near_ties = oracle.covering_radius, oracle.near_ties
        self.say(f"[End descent: {'converged' if result.converged else 'not converged'} "
                 f"after {result.iterations} iterations]")
        return oracle, result


def build_context(config: Config) -> ScenarioContext:
    manifold = config.build_manifold()
    measure = config.build_measure(manifold)
    problem = FrechetProblem(manifold, measure, float(config.solver.EXPONENT))
    logger = DescentLogger(config.log.LOG_INTERVAL, verbose=config.log.VERBOSE and config.log.LOG_INTERVAL > 0)
    return ScenarioContext(config, manifold, measure, problem, config.build_solver_params(),
                           config.build_schedule(), logger)


# Checks shared by the scenarios and the property suite

def oracle_rows(report: ConformanceReport, prob: FrechetProblem, result: MeanResult,
                citation: str = "grid-oracle-agreement", **detail):
    """|F(mean) - grid minimum| <= L * covering radius of the grid."""
    bound = oracle_lipschitz(prob) * result.covering_radius
    gap = result.value - result.grid_value
    report.add(citation, "mean value within L * covering radius of the grid minimum",
               abs(gap) <= bound + NEAR_TIE_TOLERANCE,
               value=result.value, grid_value=result.grid_value, bound=bound, **detail)


def mean_linearity_gap(prob: FrechetProblem, mean, schedule: StepSchedule,
                       direction_count: int | None = None) -> tuple[float, str]:
    """
    Linearity gap of F at ``mean``. Difference quotients are used when no atom lies within twice the
    largest probe step of the cut locus of the mean; otherwise the closed-form differential is used.
    """
    clearance = prob.manifold.cut_locus_distances(prob.manifold.point(mean), prob.atoms)
    if clearance.min() > 2 * schedule.steps[0]:
        return linearity_gap(frechet_field(prob), mean, direction_count, schedule), "probe"
    return closed_form_linearity_gap(prob, mean, direction_count), "closed_form"


DIFFERENCE_ANCHORS: int = 5


@dataclass(frozen=True)
class DifferenceCheck:
    anchor: np.ndarray
    value_index: int
    difference_index: int
    refined: MeanResult

    @property
    def same_grid_point(self) -> bool:
        return self.value_index == self.difference_index


def difference_anchors(manifold: ManifoldModel, seed: int | list[int],
                       count: int = DIFFERENCE_ANCHORS) -> np.ndarray:
    """Seeded random base points q0 of the Fréchet difference."""
    return random_points(manifold, np.random.default_rng(seed), count)


def difference_minimizers(prob: FrechetProblem, resolution: int, params: SolverParams,
                          anchors: np.ndarray) -> list[DifferenceCheck]:
    """
    Minimize the Fréchet difference F(q) - F(q0) on the oracle grid for every anchor q0 and refine
    each first grid minimizer by descent. Refinements are shared between anchors with the same minimizer.
    """
    grid = prob.manifold.grid(resolution)
    value_index = first_minimum(frechet_values(prob, grid.points, params.threads))
    single_start = replace(params, restart_count=0)
    refined: dict[int, MeanResult] = {}
    checks = []
    for anchor in anchors:
        difference_index = first_minimum(frechet_differences(prob, grid.points, anchor))
        if difference_index not in refined:
            refined[difference_index] = p_mean(prob, grid.points[difference_index], single_start)
        checks.append(DifferenceCheck(anchor, value_index, difference_index, refined[difference_index]))
    return checks


def difference_rows(report: ConformanceReport, prob: FrechetProblem, oracle: MeanResult,
                    checks: list[DifferenceCheck], citation: str = "difference-minimizer-agreement", **detail):
    value = oracle.value
    for check in checks:
        report.add(citation, "Fréchet difference and F share the grid minimizer", check.same_grid_point,
                   anchor=check.anchor, value_index=check.value_index, difference_index=check.difference_index,
                   **detail)
        report.add(citation, "refined difference minimizer attains the minimum of F",
                   abs(check.refined.value - value) <= NEAR_TIE_TOLERANCE * max(1.0, abs(value)),
                   anchor=check.anchor, refined_value=check.refined.value, oracle_value=value, **detail)


@dataclass(frozen=True)
class DyadicGap:
    index: int
    weight: float
    cut_point: np.ndarray
    gap: float
    expected: float


def dyadic_gaps(manifold: ManifoldModel, count: int, p: float, schedule: StepSchedule,
                direction_count: int | None = None) -> tuple[FrechetProblem, list[DyadicGap]]:
    """
    Linearity gap of F for the dyadic Dirac measure at one cut point of every atom.
    The expected gap of atom j alone is 2 p c^(p-1) w_j with c the distance to that cut point.
    """
    measure = dyadic_dirac_measure(manifold, count)
    prob = FrechetProblem(manifold, measure, p)
    field = frechet_field(prob)
    rows = []
    for index, (atom, weight) in enumerate(zip(measure.atoms, measure.weights), start=1):
        cut = manifold.cut_points(atom, 1)[0]
        reach = manifold.distances(cut, atom[None, :])[0]
        gap = linearity_gap(field, cut, direction_count, schedule)
        rows.append(DyadicGap(index, float(weight), cut, gap, float(2 * p * reach ** (p - 1) * weight)))
    return prob, rows


def dyadic_gap_rows(report: ConformanceReport, rows: list[DyadicGap], slack: float,
                    ratio_range: tuple[float, float], asserted: bool = True,
                    citation: str = "nowhere-smooth-dyadic", **detail):
    low, high = ratio_range
    report.add(citation, f"gap_j >= expected_j * (1 - {slack:g}) for all j",
               all(row.gap >= row.expected * (1 - slack) for row in rows), asserted=asserted,
               gaps=[row.gap for row in rows], expected=[row.expected for row in rows], **detail)
    ratios = [later.gap / earlier.gap for earlier, later in zip(rows, rows[1:]) if earlier.gap > 0]
    if len(rows) > 1:
        report.add(citation, f"consecutive gap ratios in [{low:g}, {high:g}]",
                   len(ratios) == len(rows) - 1 and all(low <= ratio <= high for ratio in ratios),
                   asserted=asserted, ratios=ratios, **detail)


def profile_curve(rows: list[ProfileRow]) -> Curve:
    """(C, best_r, success) rows of a divergence profile; best_r is NaN where no barrier was found."""
    return Curve("barrier_profile", ("C", "best_r", "success"),
                 [(row.target, np.nan if row.best_radius is None else row.best_radius, float(row.success))
                  for row in rows])
