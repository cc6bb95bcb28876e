from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from src.algorithm.geometry.manifold import DEFAULT_CUT_TOLERANCE, ManifoldModel, TangentVector
from src.algorithm.measures.atom_measure import AtomMeasure, moment
from src.utils.errors import AtomAtQueryError, invalid

VALUE_CHUNK: int = 4096


@dataclass(frozen=True, eq=False)
class FrechetProblem:
    """F^(p)(q) = sum_i w_i d(q, x_i)^p for an atom measure."""
    manifold: ManifoldModel
    measure: AtomMeasure
    p: float = 2.0

    def __post_init__(self):
        if not np.isfinite(self.p) or self.p < 1:
            raise invalid(f"Exponent p must be a finite number >= 1, got {self.p}.",
                          "Set solver EXPONENT >= 1.")
        if self.measure.manifold != self.manifold:
            raise invalid(f"Measure lives on {self.measure.manifold.tag}, problem on {self.manifold.tag}.",
                          "Build the measure on the problem's manifold.")

    @property
    def atoms(self) -> np.ndarray:
        return self.measure.atoms

    @property
    def weights(self) -> np.ndarray:
        return self.measure.weights

    def with_measure(self, measure: AtomMeasure) -> "FrechetProblem":
        return FrechetProblem(self.manifold, measure, self.p)

    def with_exponent(self, p: float) -> "FrechetProblem":
        return FrechetProblem(self.manifold, self.measure, p)


@dataclass(frozen=True, eq=False)
class Gradient:
    """
    First-variation vector G = sum_i w_i p d_i^(p-2) log_q x_i with the deterministic tie-break.
    F decreases along G. ``multivalued`` is set when some weighted atom has several preimages.
    """
    vector: TangentVector
    multivalued: bool

    @property
    def norm(self) -> float:
        return self.vector.norm


def frechet_value(prob: FrechetProblem, q) -> float:
    return moment(prob.measure, q, prob.p)


def frechet_values(prob: FrechetProblem, points: np.ndarray, threads: int = 1) -> np.ndarray:
    """
    F at every row of ``points``, evaluated in chunks.
    With ``threads`` > 1 the chunks are spread over a thread pool; the result does not depend on it.
    """
    starts = range(0, len(points), VALUE_CHUNK)

    def evaluate(start: int) -> np.ndarray:
        block = prob.manifold.pairwise_distances(points[start:start + VALUE_CHUNK], prob.atoms)
        return (block ** prob.p) @ prob.weights

    if threads > 1 and len(points) > VALUE_CHUNK:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            blocks = list(pool.map(evaluate, starts))
    else:
        blocks = [evaluate(start) for start in starts]
    return np.concatenate(blocks) if blocks else np.empty(0)


def frechet_difference(prob: FrechetProblem, q, q0) -> float:
    """F(q) - F(q0) as one weighted sum of per-atom differences."""
    manifold = prob.manifold
    q, q0 = manifold.point(q), manifold.point(q0)
    here = manifold.distances(q, prob.atoms) ** prob.p
    there = manifold.distances(q0, prob.atoms) ** prob.p
    return float(prob.weights @ (here - there))


def frechet_differences(prob: FrechetProblem, points: np.ndarray, q0) -> np.ndarray:
    """``frechet_difference`` at every row of ``points``."""
    manifold = prob.manifold
    there = manifold.distances(manifold.point(q0), prob.atoms) ** prob.p
    blocks = [(manifold.pairwise_distances(points[start:start + VALUE_CHUNK], prob.atoms) ** prob.p - there)
              @ prob.weights
              for start in range(0, len(points), VALUE_CHUNK)]
    return np.concatenate(blocks) if blocks else np.empty(0)


def _power_coefficients(distances: np.ndarray, p: float) -> np.ndarray:
    """p d^(p-2), with 0 where d = 0 (those atoms contribute the zero vector)."""
    if p == 2:
        return np.full_like(distances, 2.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(distances > 0, p * distances ** (p - 2), 0.0)


def gradient(prob: FrechetProblem, q, tol: float = DEFAULT_CUT_TOLERANCE,
             rng: np.random.Generator | None = None, exclude_atoms: bool = False) -> Gradient:
    """
    First-variation gradient of F^(p) at q.

    :param tol: Cut-locus tolerance for detecting several minimizing preimages
    :param rng: Picks a uniformly random tied preimage instead of the lexicographic first one
    :param exclude_atoms: Drop atoms within ``tol`` of q (subgradient selection for p = 1)
    :raises AtomAtQueryError: p = 1 with an atom at q and ``exclude_atoms`` unset
    """
    manifold = prob.manifold
    q = manifold.point(q)
    found = manifold.log_candidates(q, prob.atoms, tol)
    at_query = found.distances <= tol

    if prob.p == 1 and at_query.any() and not exclude_atoms:
        raise AtomAtQueryError(
            f"An atom of mass {prob.weights[at_query].sum():.6g} sits at the query point and p = 1.\n"
            f"[Tip] The differential of d_x at x is the norm, not a linear map; "
            f"use exclude_atoms=True for a subgradient."
        )

    logs = found.first() if rng is None else found.random_choice(rng)
    coefficients = prob.weights * _power_coefficients(found.distances, prob.p)
    if exclude_atoms:
        coefficients = np.where(at_query, 0.0, coefficients)

    vector = coefficients @ logs
    multivalued = bool(np.any(found.multivalued & (coefficients > 0)))
    return Gradient(TangentVector(q, vector), multivalued)


def _components(v) -> np.ndarray:
    return v.components if isinstance(v, TangentVector) else np.atleast_1d(np.asarray(v, dtype=np.float64))


def atom_differentials(prob: FrechetProblem, q, v, tol: float = DEFAULT_CUT_TOLERANCE,
                       allow_atoms: bool = False) -> np.ndarray:
    """
    Closed-form one-sided differentials D_q d_x^p(v) of every atom x:
    -p d^(p-1) sup <v, w/|w|> over the minimizing preimages w of x at q.
    An atom at q contributes |v| when p = 1 (only with ``allow_atoms``) and 0 when p > 1.
    """
    manifold = prob.manifold
    q = manifold.point(q)
    v = _components(v)
    found = manifold.log_candidates(q, prob.atoms, tol)
    at_query = found.distances <= tol

    if prob.p == 1 and at_query.any() and not allow_atoms:
        raise AtomAtQueryError(
            "p = 1 with an atom at the query point: D_q d_q(v) = |v| is not linear.\n"
            "[Tip] Pass allow_atoms=True to include the atom term |v|."
        )

    support = found.support(v)
    differentials = -_power_coefficients(found.distances, prob.p) * support
    if prob.p == 1:
        differentials = np.where(at_query, np.linalg.norm(v), differentials)
    else:
        differentials = np.where(at_query, 0.0, differentials)
    return differentials


def one_sided_derivative(prob: FrechetProblem, q, v, tol: float = DEFAULT_CUT_TOLERANCE,
                         allow_atoms: bool = False) -> float:
    """D_q F^(p)(v) as the weighted sum of closed-form atom differentials."""
    return float(prob.weights @ atom_differentials(prob, q, v, tol, allow_atoms))


def fixed_point_residual(prob: FrechetProblem, q, tol: float = DEFAULT_CUT_TOLERANCE) -> float:
    """Norm of sum_i w_i log_q x_i, zero at a mean off the cut locus."""
    q = prob.manifold.point(q)
    found = prob.manifold.log_candidates(q, prob.atoms, tol)
    return float(np.linalg.norm(prob.weights @ found.first()))


def cut_mass(prob: FrechetProblem, mu, epsilons,
             tol: float = DEFAULT_CUT_TOLERANCE) -> list[tuple[float, float]]:
    """
    Weight of atoms within each epsilon of the cut locus of ``mu``.

    The profile starts with (0.0, exact membership mass), where membership means several
    minimizing preimages at the cut-locus tolerance ``tol`` (the solver passes its CUT_TOLERANCE,
    1e-7 by default), not at the smallest epsilon. Epsilons are reported in ascending order.
    """
    epsilons = np.sort(np.asarray(epsilons, dtype=np.float64).ravel())
    if len(epsilons) == 0 or np.any(epsilons <= 0):
        raise invalid("Cut-mass epsilons must be a non-empty list of positive numbers.",
                      "Set solver CUT_MASS_EPSILONS, e.g. [0.025, 0.05, 0.1, 0.2].")
    manifold = prob.manifold
    mu = manifold.point(mu)
    cut_distances = manifold.cut_locus_distances(mu, prob.atoms)
    members = manifold.log_candidates(mu, prob.atoms, tol).multivalued & (cut_distances <= tol)

    profile = [(0.0, prob.measure.mass(members))]
    profile += [(float(epsilon), prob.measure.mass(cut_distances <= epsilon)) for epsilon in epsilons]
    return profile


@dataclass(frozen=True, eq=False)
class CutDecomposition:
    """
    F = F_on + F_off, split by whether an atom lies on the cut locus of ``center``.
    Both parts use the unrenormalized restrictions of the measure.
    """
    center: np.ndarray
    on_cut: FrechetProblem | None
    off_cut: FrechetProblem | None
    on_cut_mass: float

    def split(self, q) -> tuple[float, float]:
        on = frechet_value(self.on_cut, q) if self.on_cut is not None else 0.0
        off = frechet_value(self.off_cut, q) if self.off_cut is not None else 0.0
        return on, off


def cut_decomposition(prob: FrechetProblem, center, tol: float = DEFAULT_CUT_TOLERANCE) -> CutDecomposition:
    manifold = prob.manifold
    center = manifold.point(center)
    on_cut = manifold.log_candidates(center, prob.atoms, tol).multivalued

    def part(mask: np.ndarray) -> FrechetProblem | None:
        if not mask.any():
            return None
        return prob.with_measure(prob.measure.restrict(mask))

    return CutDecomposition(center, part(on_cut), part(~on_cut), prob.measure.mass(on_cut))
