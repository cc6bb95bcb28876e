from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from src.algorithm.frechet.problem import atom_differentials
from src.algorithm.geometry.manifold import DEFAULT_CUT_TOLERANCE
from src.algorithm.geometry.sequences import gaussian_sphere_sequence, golden_angles, unit_directions
from src.algorithm.probes.differentials import DEFAULT_SCHEDULE, directional_derivative
from src.algorithm.probes.fields import ScalarField
from src.utils.errors import invalid

MARGIN_TOLERANCE: float = 1e-12
QUADRATIC_BOUND: float = 1e6
DEFAULT_TARGETS: tuple[float, ...] = (-1.0, -10.0, -100.0, -1000.0)


@dataclass(eq=False)
class BarrierCertificate:
    """
    Upper barrier h(u) = f(q) + l(u) + 1/2 <Q u, u> in normal coordinates u = log_q y.
    ``margin`` is min(h - f) over the validation sample; ``success`` means trace(Q) < target with a
    nonnegative margin.
    """
    center: np.ndarray
    radius: float
    linear: np.ndarray
    quadratic: np.ndarray
    trace: float
    margin: float
    sample_size: int
    target: float
    success: bool
    label: str = ""
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "center": self.center.tolist(),
            "radius": self.radius,
            "linear": self.linear.tolist(),
            "quadratic": self.quadratic.tolist(),
            "trace": self.trace,
            "margin": self.margin,
            "sample_size": self.sample_size,
            "target": self.target,
            "success": self.success,
            **self.details,
        }


@dataclass(frozen=True)
class ProfileRow:
    target: float
    best_radius: float | None
    success: bool
    trace: float | None


def radial_sample(dim: int, radius: float, size: int, staggered: bool = False) -> np.ndarray:
    """
    Tangent vectors in the closed ball of ``radius``, dense near the origin: directions times
    radii that are half geometric (down to radius * 1e-3) and half evenly spaced.
    The staggered variant shifts both radii and directions, giving an independent validation set.
    """
    if dim == 1:
        direction_count = 2
        directions = np.array([[1.0], [-1.0]])
    else:
        direction_count = max(2 * dim, int(np.sqrt(size)))
        if not staggered:
            directions = unit_directions(direction_count, dim)
        elif dim == 2:
            angles = golden_angles(direction_count) + np.pi / direction_count
            directions = np.column_stack((np.cos(angles), np.sin(angles)))
        else:
            directions = gaussian_sphere_sequence(direction_count, dim, skip=direction_count)
    shells = max(2, size // direction_count)
    geometric = np.geomspace(1e-3, 1, shells // 2)
    even = np.arange(1, shells - shells // 2 + 1) / (shells - shells // 2)
    if staggered:
        geometric = geometric * 10 ** (-2 / max(1, shells // 2))
        even = even - 0.5 / (shells - shells // 2)
    radii = np.unique(np.concatenate((geometric, even, [1.0]))) * radius
    return (directions[:, None, :] * radii[None, :, None]).reshape(-1, dim)


def _differential_samples(f: ScalarField, q: np.ndarray, directions: np.ndarray) -> np.ndarray:
    if f.problem is not None:
        return np.array([f.problem.weights @ atom_differentials(f.problem, q, v, DEFAULT_CUT_TOLERANCE,
                                                                 allow_atoms=True)
                         for v in directions])
    return np.array([directional_derivative(f, q, v, DEFAULT_SCHEDULE).value for v in directions])


def linear_part(f: ScalarField, q: np.ndarray, direction_count: int | None = None) -> tuple[np.ndarray, float]:
    """
    Linear upper bound l of the one-sided differential, l(v_j) >= D_q f(v_j), minimizing the largest
    slack l(v_j) - D_q f(v_j). Returns l and that slack (zero when D_q f is linear).
    """
    dim = f.manifold.dim
    directions = unit_directions(max(2 * dim, 8 * dim) if direction_count is None else direction_count, dim)
    differentials = _differential_samples(f, q, directions)

    # Variables (l_1..l_dim, s): minimize s with D_j <= l.v_j <= D_j + s
    cost = np.zeros(dim + 1)
    cost[-1] = 1.0
    lower = np.hstack((-directions, np.zeros((len(directions), 1))))
    upper = np.hstack((directions, -np.ones((len(directions), 1))))
    solution = linprog(cost, A_ub=np.vstack((lower, upper)),
                       b_ub=np.concatenate((-differentials, differentials)),
                       bounds=[(None, None)] * dim + [(0, None)], method="highs")
    if not solution.success:
        return np.zeros(dim), np.inf
    return solution.x[:dim], float(solution.x[-1])


def _quadratic_features(U: np.ndarray) -> np.ndarray:
    """Rows of 1/2 u^T Q u as linear functionals of the upper-triangular entries of Q."""
    dim = U.shape[1]
    columns = []
    for a in range(dim):
        columns.append(0.5 * U[:, a] ** 2)
        for b in range(a + 1, dim):
            columns.append(U[:, a] * U[:, b])
    return np.column_stack(columns)


def _unpack(entries: np.ndarray, dim: int) -> np.ndarray:
    Q = np.zeros((dim, dim))
    index = 0
    for a in range(dim):
        Q[a, a] = entries[index]
        index += 1
        for b in range(a + 1, dim):
            Q[a, b] = Q[b, a] = entries[index]
            index += 1
    return Q


def _margins(f0: float, values: np.ndarray, U: np.ndarray, linear: np.ndarray, Q: np.ndarray) -> np.ndarray:
    barrier = f0 + U @ linear + 0.5 * np.einsum("ij,jk,ik->i", U, Q, U)
    return barrier - values


def _repair(margins: np.ndarray, U: np.ndarray) -> float:
    """Smallest shift delta such that Q + delta I has nonnegative margins on U."""
    lengths = np.sum(U ** 2, axis=1)
    needed = np.where(lengths > 0, -2 * margins / np.where(lengths > 0, lengths, 1.0), 0.0)
    return float(max(0.0, needed.max()))


def barrier_certificate_search(f: ScalarField, q, target: float, radius: float, sample_size: int,
                               validation_size: int | None = None,
                               linear: np.ndarray | None = None) -> BarrierCertificate:
    """
    Two-stage search for an upper barrier touching f at q on the ball B_r(q).

    The linear part is the best sampled linear upper bound of the one-sided differential; the quadratic
    part minimizes trace(Q) subject to h >= f on a radial-dense sample (a linear program). The exact
    margins are then repaired by a multiple of the identity and checked on a staggered validation
    sample. Failure is a certificate with ``success`` unset, carrying the best achievable trace.
    """
    manifold = f.manifold
    q = manifold.point(q)
    dim = manifold.dim
    if not 0 < radius < manifold.injectivity_radius:
        raise invalid(f"Barrier radius must lie in (0, {manifold.injectivity_radius:.6g}), got {radius}.",
                      "Lower probe BARRIER_RADIUS.")
    if sample_size < 100 * dim:
        raise invalid(f"Barrier sample needs at least {100 * dim} points, got {sample_size}.",
                      "Raise probe SAMPLE_SIZE.")

    f0 = f(q)
    if linear is None:
        linear, slack = linear_part(f, q)
    else:
        slack = None
    train = radial_sample(dim, radius, sample_size)
    validation = radial_sample(dim, radius, validation_size or sample_size, staggered=True)
    train_values = f.values(manifold.exp_many(q, train))
    validation_values = f.values(manifold.exp_many(q, validation))

    # Constraints scaled by 1/|u|^2: 1/2 û^T Q û >= (f - f0 - l.u) / |u|^2
    lengths = np.sum(train ** 2, axis=1)
    features = _quadratic_features(train / np.sqrt(lengths)[:, None])
    rhs = (train_values - f0 - train @ linear) / lengths
    cost = np.concatenate([[1.0] + [0.0] * (dim - 1 - a) for a in range(dim)])
    solution = linprog(cost, A_ub=-features, b_ub=-rhs,
                       bounds=[(-QUADRATIC_BOUND, QUADRATIC_BOUND)] * len(cost), method="highs")
    if not solution.success:
        return BarrierCertificate(q, radius, linear, np.full((dim, dim), np.nan), np.inf, -np.inf,
                                  len(train) + len(validation), target, False, f.label,
                                  {"status": solution.message})
    Q = _unpack(solution.x, dim)

    shift = _repair(_margins(f0, train_values, train, linear, Q), train)
    shift += _repair(_margins(f0, validation_values, validation, linear, Q + shift * np.eye(dim)), validation)
    Q = Q + shift * np.eye(dim)

    margin = float(min(_margins(f0, train_values, train, linear, Q).min(),
                       _margins(f0, validation_values, validation, linear, Q).min()))
    trace = float(np.trace(Q))
    return BarrierCertificate(
        center=q, radius=radius, linear=linear, quadratic=Q, trace=trace, margin=margin,
        sample_size=len(train) + len(validation), target=target,
        success=bool(trace < target and margin >= -MARGIN_TOLERANCE), label=f.label,
        details={"repair_shift": shift, "linear_slack": slack},
    )


def barrier_divergence_profile(f: ScalarField, q, targets=DEFAULT_TARGETS, initial_radius: float = 1.0,
                               halvings: int = 12, sample_size: int | None = None) -> list[ProfileRow]:
    """
    For every target C, the largest radius r0 / 2^k (k <= halvings) at which a barrier with
    trace < C exists. Certificates are computed once per radius and shared across targets.
    """
    targets = [float(target) for target in targets]
    if any(later >= earlier for earlier, later in zip(targets, targets[1:])):
        raise invalid(f"Barrier targets must be strictly decreasing, got {targets}.",
                      "Sort probe BARRIER_TARGETS from largest to smallest.")
    manifold = f.manifold
    q = manifold.point(q)
    sample_size = sample_size or 400 * manifold.dim
    radius = min(initial_radius, 0.99 * manifold.injectivity_radius)
    linear, _ = linear_part(f, q)

    certificates = []
    for _ in range(halvings + 1):
        certificates.append(barrier_certificate_search(f, q, targets[-1], radius, sample_size,
                                                       linear=linear))
        radius /= 2

    rows = []
    for target in targets:
        best = next((certificate for certificate in certificates
                     if certificate.trace < target and certificate.margin >= -MARGIN_TOLERANCE), None)
        if best is None:
            rows.append(ProfileRow(target, None, False, min(c.trace for c in certificates)))
        else:
            rows.append(ProfileRow(target, best.radius, True, best.trace))
    return rows


def divergence_evidence(rows: list[ProfileRow]) -> bool:
    """Bounded verdict: every tested target was reached at some positive radius."""
    return all(row.success for row in rows)


def explicit_circle_barrier(target: float, sample_size: int = 2001) -> BarrierCertificate:
    """
    The closed-form family h_C(t) = pi + C t^2 over f(t) = pi - |t| (distance to the antipode of 0
    on the circle), checked on |t| <= -1/C. Its Laplacian is 2C < C.
    """
    if not target < 0:
        raise invalid(f"The explicit circle barrier needs a negative target, got {target}.",
                      "Pass C < 0.")
    radius = -1 / target
    t = np.linspace(-radius, radius, sample_size)
    margins = (np.pi + target * t ** 2) - (np.pi - np.abs(t))
    margin = float(margins.min())
    trace = 2 * target
    return BarrierCertificate(
        center=np.zeros(1), radius=radius, linear=np.zeros(1), quadratic=np.array([[trace]]),
        trace=trace, margin=margin, sample_size=sample_size, target=target,
        success=bool(trace < target and margin >= -MARGIN_TOLERANCE), label="d_x at the antipode",
        details={"margin_table": [{"t": float(a), "margin": float(b)}
                                  for a, b in zip(t[::max(1, sample_size // 20)],
                                                  margins[::max(1, sample_size // 20)])]},
    )


def nonlinear_differential_barrier(f: ScalarField, q, target: float, semiconcavity: float,
                                   first: np.ndarray, second: np.ndarray, radius: float,
                                   sample_size: int) -> BarrierCertificate:
    """
    Explicit barrier from two distinct linear upper bounds l1, l2 of D_q f and a semiconcavity
    constant b:
        h(u) = f(q) + (l1 + l2)(u) / 2 - K ((l1 - l2)(u))^2 / 2 + b |u|^2 / 2,
    valid where |(l1 - l2)(u)| <= 1 / K. K is the smallest integer pushing trace below ``target``;
    the radius is cut down to 1 / (K |l1 - l2|) and the margin is checked on a radial sample.
    """
    manifold = f.manifold
    q = manifold.point(q)
    dim = manifold.dim
    gap = np.asarray(first, dtype=np.float64) - np.asarray(second, dtype=np.float64)
    spread = float(gap @ gap)
    if spread == 0:
        raise invalid("The two linear bounds coincide; the differential is linear along them.",
                      "Pass the selections of two different minimizing preimages.")

    stiffness = float(np.floor(max(0.0, semiconcavity * dim - target) / spread) + 1)
    radius = min(radius, 1 / (stiffness * np.sqrt(spread)), 0.99 * manifold.injectivity_radius)
    Q = semiconcavity * np.eye(dim) - stiffness * np.outer(gap, gap)
    linear = 0.5 * (np.asarray(first) + np.asarray(second))

    U = np.concatenate((radial_sample(dim, radius, sample_size),
                        radial_sample(dim, radius, sample_size, staggered=True)))
    margins = _margins(f(q), f.values(manifold.exp_many(q, U)), U, linear, Q)
    margin = float(margins.min())
    trace = float(np.trace(Q))
    return BarrierCertificate(
        center=q, radius=radius, linear=linear, quadratic=Q, trace=trace, margin=margin,
        sample_size=len(U), target=target, success=bool(trace < target and margin >= -MARGIN_TOLERANCE),
        label=f.label, details={"stiffness": stiffness},
    )


def preimage_selections(f: ScalarField, q, tol: float = DEFAULT_CUT_TOLERANCE) -> tuple[np.ndarray, np.ndarray]:
    """
    Two linear upper bounds of D_q F from two selections of minimizing preimages: the lexicographic
    first everywhere, and the last one at the heaviest multivalued atom.
    """
    prob = f.problem
    if prob is None:
        raise invalid("Preimage selections need a Fréchet field.", "Use frechet_field or distance_field.")
    manifold = prob.manifold
    q = manifold.point(q)
    found = manifold.log_candidates(q, prob.atoms, tol)
    multivalued = np.flatnonzero(found.multivalued & (found.distances > tol))
    if len(multivalued) == 0:
        raise invalid("No atom has several minimizing preimages at q.",
                      "The differential is linear here; use barrier_certificate_search.")

    with np.errstate(divide="ignore", invalid="ignore"):
        coefficients = np.where(found.distances > tol,
                                prob.p * found.distances ** (prob.p - 2), 0.0) * prob.weights
    first = found.first()
    second = first.copy()
    heaviest = multivalued[np.argmax(prob.weights[multivalued])]
    if found.continuum[heaviest]:
        second[heaviest] = -first[heaviest]
    else:
        second[heaviest] = found.candidates[heaviest][found.mask[heaviest]][-1]
    return -(coefficients @ first), -(coefficients @ second)
