import numpy as np

from src.algorithm.frechet.problem import FrechetProblem, atom_differentials
from src.algorithm.geometry.manifold import DEFAULT_CUT_TOLERANCE, TangentVector
from src.algorithm.geometry.sequences import unit_directions
from src.algorithm.probes.fields import (
    DEFAULT_RESIDUAL_TOLERANCE, ProbeReport, ScalarField, StepSchedule, distance_field,
    summarize_quotients,
)
from src.utils.errors import invalid

DEFAULT_SCHEDULE = StepSchedule.geometric()


def _direction(v) -> np.ndarray:
    components = v.components if isinstance(v, TangentVector) else np.asarray(v, dtype=np.float64)
    return np.atleast_1d(components)


def quotient_table(f: ScalarField, q, directions: np.ndarray, schedule: StepSchedule) -> np.ndarray:
    """
    One-sided difference quotients (f(exp_q(t v)) - f(q)) / t for every direction (rows)
    and step (columns), evaluated in one batch.
    """
    manifold = f.manifold
    q = manifold.point(q)
    schedule.check_radius(manifold)
    steps = schedule.as_array()
    directions = np.atleast_2d(directions)
    displacements = (directions[:, None, :] * steps[None, :, None]).reshape(-1, manifold.dim)
    values = f.values(manifold.exp_many(q, displacements)).reshape(len(directions), len(steps))
    return (values - f(q)) / steps[None, :]


def directional_derivative(f: ScalarField, q, v, schedule: StepSchedule = DEFAULT_SCHEDULE,
                           residual_tolerance: float = DEFAULT_RESIDUAL_TOLERANCE,
                           tolerance_scale: float = 1.0) -> ProbeReport:
    """One-sided derivative D_q f(v) from forward quotients along exp_q(t v)."""
    v = _direction(v)
    quotients = quotient_table(f, q, v[None, :], schedule)[0]
    report = summarize_quotients(quotients, schedule, f"D {f.label}", f.semiconcavity,
                                 residual_tolerance, tolerance_scale)
    report.details["direction"] = v.tolist()
    return report


def first_variation_differential(target, q, v, tol: float = DEFAULT_CUT_TOLERANCE,
                                 allow_atoms: bool = False) -> float:
    """
    Exact one-sided differential of a Fréchet function (or a field carrying one):
    D_q d_x^p(v) = -p d^(p-1) sup <v, w / |w|> over minimizing preimages w, summed with weights.

    :raises AtomAtQueryError: p = 1 with an atom at q, unless ``allow_atoms``
    """
    prob = target.problem if isinstance(target, ScalarField) else target
    if not isinstance(prob, FrechetProblem):
        raise invalid("The closed-form differential needs a Fréchet problem.",
                      "Build the field with frechet_field or distance_field.")
    return float(prob.weights @ atom_differentials(prob, q, _direction(v), tol, allow_atoms))


def symmetrized_differential(f: ScalarField, q, v, schedule: StepSchedule = DEFAULT_SCHEDULE,
                             residual_tolerance: float = DEFAULT_RESIDUAL_TOLERANCE,
                             tolerance_scale: float = 1.0) -> ProbeReport:
    """D_q f(v) + D_q f(-v); the quotient tables are summed before extrapolation."""
    v = _direction(v)
    table = quotient_table(f, q, np.stack((v, -v)), schedule)
    semiconcavity = None if f.semiconcavity is None else 2 * f.semiconcavity
    report = summarize_quotients(table.sum(axis=0), schedule, f"Dsym {f.label}", semiconcavity,
                                 residual_tolerance, tolerance_scale)
    report.details["direction"] = v.tolist()
    return report


def symmetrized_values(f: ScalarField, q, directions: np.ndarray,
                       schedule: StepSchedule = DEFAULT_SCHEDULE) -> np.ndarray:
    """Extrapolated symmetrized differentials for many directions at once."""
    table = quotient_table(f, q, np.concatenate((directions, -directions)), schedule)
    summed = table[:len(directions)] + table[len(directions):]
    return np.array([summarize_quotients(row, schedule, f.label).value for row in summed])


def linearity_gap(f: ScalarField, q, direction_count: int | None = None,
                  schedule: StepSchedule = DEFAULT_SCHEDULE) -> float:
    """
    max over unit directions of -(D_q f(v) + D_q f(-v)), directions being the frame vectors
    with both signs plus a quasi-random fill. Zero when D_q f is linear.
    """
    dim = f.manifold.dim
    direction_count = max(2 * dim, 32) if direction_count is None else direction_count
    if direction_count < 2 * dim:
        raise invalid(f"Linearity gap needs at least {2 * dim} directions, got {direction_count}.",
                      "Raise probe DIRECTION_COUNT.")
    directions = unit_directions(direction_count, dim)
    return float(np.max(-symmetrized_values(f, q, directions, schedule)))


def closed_form_linearity_gap(prob: FrechetProblem, q, direction_count: int | None = None,
                              tol: float = DEFAULT_CUT_TOLERANCE) -> float:
    """Linearity gap from the exact first-variation differentials."""
    dim = prob.manifold.dim
    directions = unit_directions(max(2 * dim, 32) if direction_count is None else direction_count, dim)
    gaps = [-(prob.weights @ (atom_differentials(prob, q, v, tol, allow_atoms=True)
                              + atom_differentials(prob, q, -v, tol, allow_atoms=True)))
            for v in directions]
    return float(max(gaps))


def semiconcavity_estimate(f: ScalarField, q, radius: float, geodesic_count: int = 200,
                           step: float = 1e-3, seed: int = 0) -> float:
    """
    Largest second central difference (f(g(h)) - 2 f(g(0)) + f(g(-h))) / h^2 over unit-speed
    geodesics g through centers sampled in the ball B_r(q) (q itself included).
    A lower estimate of the best semiconcavity constant on the ball.
    """
    manifold = f.manifold
    q = manifold.point(q)
    if radius < 0 or radius + step >= manifold.injectivity_radius:
        raise invalid(
            f"Radius {radius} plus step {step} must stay below the injectivity radius "
            f"{manifold.injectivity_radius:.6g}.",
            "Shrink the probe radius."
        )
    rng = np.random.default_rng(seed)
    dim = manifold.dim

    offsets = rng.standard_normal((geodesic_count, dim))
    offsets /= np.linalg.norm(offsets, axis=1, keepdims=True)
    offsets *= radius * rng.uniform(0, 1, (geodesic_count, 1)) ** (1 / dim)
    offsets[0] = 0
    centers = manifold.exp_many(q, offsets)

    directions = rng.standard_normal((geodesic_count, dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    directions[:min(dim, geodesic_count)] = np.eye(dim)[:min(dim, geodesic_count)]

    estimate = -np.inf
    for center, direction in zip(centers, directions):
        ends = manifold.exp_many(center, np.stack((step * direction, -step * direction)))
        forward, backward = f.values(ends)
        second = (forward - 2 * f(center) + backward) / step ** 2
        estimate = max(estimate, second)
    return float(estimate)


def hessian_trace_estimate(f: ScalarField, q, step: float = 1e-3) -> float:
    """Laplacian of f at q from central differences along the orthonormal frame."""
    manifold = f.manifold
    q = manifold.point(q)
    frame = np.eye(manifold.dim) * step
    forward = f.values(manifold.exp_many(q, frame))
    backward = f.values(manifold.exp_many(q, -frame))
    return float(np.sum(forward - 2 * f(q) + backward) / step ** 2)


def is_critical_point(manifold, q, x, direction_count: int | None = None,
                      tol: float = DEFAULT_CUT_TOLERANCE) -> bool:
    """
    Whether q != x is a critical point of d_x: D_q d_x(v) <= 0 for every tested unit v.
    Such points have several minimizing geodesics to x.
    """
    q = manifold.point(q)
    if manifold.distance(q, x) <= tol:
        raise invalid("Criticality is defined away from the base point.", "Pick q != x.")
    prob = distance_field(manifold, x).problem
    dim = manifold.dim
    directions = unit_directions(max(2 * dim, 32) if direction_count is None else direction_count, dim)
    return all(prob.weights @ atom_differentials(prob, q, v, tol) <= 1e-12 for v in directions)


def square_semiconcavity_bound(b: float, s: float, lipschitz: float, p: float = 2.0) -> float:
    """
    Semiconcavity constant of g^p for a b-concave (b >= 0), L-Lipschitz g with 0 <= g <= s and
    p >= 2: p s^(p-2) (s b + (p-1) L^2), which is 2 (s b + L^2) for squares.
    """
    if p < 2 or s < 0 or b < 0 or lipschitz < 0:
        raise invalid(f"Need p >= 2 and nonnegative s, b, L; got p={p}, s={s}, b={b}, L={lipschitz}.",
                      "Pass the sup bound s and Lipschitz constant L of g.")
    if p == 2:
        return 2 * (s * b + lipschitz ** 2)
    return p * s ** (p - 2) * (s * b + (p - 1) * lipschitz ** 2)
