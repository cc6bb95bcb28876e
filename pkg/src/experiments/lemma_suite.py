"""
Property suite: the invariants of geometry, measures, solver and probes checked on seeded random
instances, reported as one conformance table.
"""
from dataclasses import dataclass, field, replace

import numpy as np

from src.algorithm.frechet.problem import (
    FrechetProblem, cut_decomposition, fixed_point_residual, frechet_value,
)
from src.algorithm.frechet.solver import brute_force_mean, gradient_descent_mean
from src.algorithm.geometry.manifold import ManifoldModel
from src.algorithm.geometry.models import Circle, FlatTorus, Sphere
from src.algorithm.geometry.sequences import unit_directions
from src.algorithm.measures.atom_measure import dyadic_dirac_measure, make_measure, moment
from src.algorithm.measures.sampler import SamplerKind, SamplerSpec, default_center, sample_measure
from src.algorithm.probes.barrier import (
    MARGIN_TOLERANCE, BarrierCertificate, barrier_certificate_search, barrier_divergence_profile,
    divergence_evidence, explicit_circle_barrier, nonlinear_differential_barrier, preimage_selections,
    radial_sample,
)
from src.algorithm.probes.differentials import (
    closed_form_linearity_gap, directional_derivative, first_variation_differential,
    hessian_trace_estimate, is_critical_point, linearity_gap, quotient_table, semiconcavity_estimate,
    square_semiconcavity_bound, symmetrized_values,
)
from src.algorithm.probes.fields import Confidence, atom_fields, distance_field, frechet_field
from src.experiments.scenario_builder import (
    default_oracle_resolution, difference_anchors, difference_minimizers, difference_rows, dyadic_gap_rows,
    dyadic_gaps, mean_linearity_gap, oracle_rows, profile_curve, random_points, scenario, scenario_timer,
)
from src.utils.analysis.conformance_report import ConformanceReport
from src.utils.load_config import Config
from src.utils.run_manager import Curve, RunRecord, config_hash

FIRST_VARIATION_TOLERANCE: float = 1e-4
NONSMOOTH_GAP: float = 1e-2
CUT_CLEARANCE: float = 0.05
METRIC_TOLERANCE: float = 1e-12
ROUND_TRIP_TOLERANCE: float = 1e-9
ANTIPODE_TARGETS: tuple[float, ...] = (-5.0, -20.0, -80.0)


@dataclass(eq=False)
class BatteryProblem:
    label: str
    problem: FrechetProblem
    near_ties: list[np.ndarray] = field(default_factory=list)
    tie_value: float | None = None


def _sampled(manifold: ManifoldModel, kind: SamplerKind, seed: int, count: int, sigma: float = 0.1,
             center=None) -> FrechetProblem:
    spec = SamplerSpec(kind, seed, count, None if center is None else tuple(center), sigma)
    return FrechetProblem(manifold, sample_measure(spec, manifold))


def _atoms(manifold: ManifoldModel, atoms, weights=None) -> FrechetProblem:
    return FrechetProblem(manifold, make_measure(manifold, atoms, weights))


def battery_problems(seed: int) -> list[BatteryProblem]:
    """Twenty p = 2 problems on the circle, the 2-sphere and the flat 2-torus."""
    rng = np.random.default_rng(seed)
    circle, sphere, torus = Circle(), Sphere(2), FlatTorus(2)
    gaussian, equator = SamplerKind.WRAPPED_GAUSSIAN, SamplerKind.EQUATOR
    quarter = np.pi ** 2 / 4
    return [
        BatteryProblem("circle-two-atoms", _atoms(circle, [-np.pi / 2, np.pi / 2]),
                       [circle.point([0.0]), circle.point([np.pi])], quarter),
        BatteryProblem("circle-single-atom", _atoms(circle, [1.0])),
        BatteryProblem("circle-three-atoms", _atoms(circle, [-0.5, 0.0, 0.5])),
        BatteryProblem("circle-random-atoms", _atoms(circle, rng.uniform(-np.pi, np.pi, 4), rng.dirichlet(np.ones(4)))),
        BatteryProblem("circle-gaussian", _sampled(circle, gaussian, seed, 200, 0.3)),
        BatteryProblem("circle-gaussian-wide", _sampled(circle, gaussian, seed + 1, 200, 1.0)),
        BatteryProblem("circle-dyadic", FrechetProblem(circle, dyadic_dirac_measure(circle, 12))),
        BatteryProblem("sphere-equator", _sampled(sphere, equator, seed, 100),
                       [sphere.point([0, 0, 1]), sphere.point([0, 0, -1])], quarter),
        BatteryProblem("sphere-single-atom", _atoms(sphere, [[0, 0, 1]])),
        BatteryProblem("sphere-two-atoms", _atoms(sphere, [[0, 0, 1], [1, 0, 0]])),
        BatteryProblem("sphere-random-atoms", _atoms(sphere, rng.standard_normal((5, 3)), rng.dirichlet(np.ones(5)))),
        BatteryProblem("sphere-gaussian", _sampled(sphere, gaussian, seed, 200, 0.3)),
        BatteryProblem("sphere-gaussian-offset", _sampled(sphere, gaussian, seed + 1, 500, 0.6, [1, 0, 0])),
        BatteryProblem("sphere-dyadic", FrechetProblem(sphere, dyadic_dirac_measure(sphere, 12))),
        BatteryProblem("torus-single-atom", _atoms(torus, [[1.0, 2.0]])),
        BatteryProblem("torus-two-atoms", _atoms(torus, [[0.0, 0.0], [np.pi / 2, np.pi / 2]])),
        BatteryProblem("torus-random-atoms", _atoms(torus, rng.uniform(0, 2 * np.pi, (4, 2)), rng.dirichlet(np.ones(4)))),
        BatteryProblem("torus-gaussian", _sampled(torus, gaussian, seed, 200, 0.5)),
        BatteryProblem("torus-gaussian-wide", _sampled(torus, gaussian, seed + 1, 500, 1.0)),
        BatteryProblem("torus-dyadic", FrechetProblem(torus, dyadic_dirac_measure(torus, 8))),
    ]


def _unit_vectors(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    vectors = rng.standard_normal((count, dim))
    return vectors / np.linalg.norm(vectors, axis=1, keepdims=True)


def _cut_configuration(manifold: ManifoldModel, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """A point of C+_x: the antipode, or a face point of the torus cell around x."""
    points = manifold.cut_points(x, 8)
    return points[rng.integers(len(points))]


def _barrier_margins(certificate: BarrierCertificate, base_value: float, values: np.ndarray,
                     U: np.ndarray) -> np.ndarray:
    barrier = (base_value + U @ certificate.linear
               + 0.5 * np.einsum("ij,jk,ik->i", U, certificate.quadratic, U))
    return barrier - values


class PropertySuite:
    def __init__(self, config: Config, seed: int):
        self.config = config
        self.seed = seed
        self.report = ConformanceReport()
        self.params = config.build_solver_params()
        self.schedule = config.build_schedule()
        self.scale = float(config.probe.TOLERANCE_SCALE)
        self.direction_count = config.probe.DIRECTION_COUNT
        self.manifolds = (Circle(), Sphere(2), FlatTorus(2))
        self.battery_summary: list[dict] = []
        self.curves: list[Curve] = []

    def rng(self, offset: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, offset])

    @property
    def stages(self):
        return [
            ("geometry", self.check_geometry),
            ("measures", self.check_measures),
            ("battery", self.check_battery),
            ("cut_null", self.check_cut_null),
            ("first_variation", self.check_first_variation),
            ("integral_differential", self.check_integral_differential),
            ("semiconcavity", self.check_semiconcavity),
            ("barriers", self.check_barriers),
            ("quotients", self.check_finite_sum_quotients),
            ("critical_points", self.check_critical_points),
            ("decomposition", self.check_decomposition),
            ("regimes", self.check_regimes),
        ]

    # -- geometry and measures -------------------------------------------------------------------

    def check_geometry(self):
        report = self.report
        for offset, manifold in enumerate(self.manifolds):
            rng = self.rng(100 + offset)
            a, b, c = (random_points(manifold, rng, 1000) for _ in range(3))
            ab = np.array([manifold.distance(p, q) for p, q in zip(a, b)])
            ba = np.array([manifold.distance(q, p) for p, q in zip(a, b)])
            bc = np.array([manifold.distance(p, q) for p, q in zip(b, c)])
            ac = np.array([manifold.distance(p, q) for p, q in zip(a, c)])
            report.add("distance-metric-axioms", f"{manifold.tag}: symmetry, diameter and triangle inequality "
                       f"on 1000 triples",
                       bool(np.all(np.abs(ab - ba) <= METRIC_TOLERANCE)
                            and np.all(ab <= manifold.diameter + METRIC_TOLERANCE)
                            and np.all(ac <= ab + bc + METRIC_TOLERANCE)),
                       worst_triangle=float(np.max(ac - ab - bc)))

            qs, xs = random_points(manifold, rng, 200), random_points(manifold, rng, 200)
            cuts = np.array([_cut_configuration(manifold, x, rng) for x in xs[:40]])
            round_trip, norms = 0.0, 0.0
            for q, x in list(zip(qs, xs)) + list(zip(cuts, xs[:40])):
                d = manifold.distance(q, x)
                for v in manifold.log_set(q, x):
                    round_trip = max(round_trip, manifold.distance(manifold.exp_map(q, v), x))
                    norms = max(norms, abs(v.norm - d))
            report.add("exp-log-inverse", f"{manifold.tag}: exp_q of every minimizing preimage returns x",
                       round_trip <= ROUND_TRIP_TOLERANCE and norms <= ROUND_TRIP_TOLERANCE,
                       round_trip=round_trip, norm_error=norms)

            clear = [(q, x) for q, x in zip(qs, xs) if manifold.cut_locus_distance(q, x) > 1e-3]
            report.add("cut-locus-membership", f"{manifold.tag}: points away from the cut locus have one preimage",
                       not any(manifold.in_cut_locus_plus(q, x) for q, x in clear), pairs=len(clear))
            report.add("cut-locus-membership", f"{manifold.tag}: constructed cut points are in C+ at distance 0",
                       all(manifold.in_cut_locus_plus(q, x) and manifold.cut_locus_distance(q, x) <= METRIC_TOLERANCE
                           for q, x in zip(cuts, xs[:40])))

        rng = self.rng(110)
        circle, sphere, line = Circle(), Sphere(1), FlatTorus(1)
        angles = rng.uniform(-np.pi, np.pi, (200, 2))
        worst_distance = worst_log = 0.0
        for a, b in angles:
            on_sphere = np.array([[np.cos(a), np.sin(a)], [np.cos(b), np.sin(b)]])
            distances = (circle.distance([a], [b]), sphere.distance(*on_sphere), line.distance([a], [b]))
            worst_distance = max(worst_distance, max(distances) - min(distances))
            if circle.cut_locus_distance([a], [b]) > 1e-3:
                log_circle = circle.log_set([a], [b])[0].components
                log_sphere = sphere.log_set(*on_sphere)[0].components
                worst_log = max(worst_log, float(np.abs(log_circle - log_sphere).max()))
        report.add("one-dimensional-models-agree", "Circle, Sphere(1) and FlatTorus(1) distances and logs agree",
                   worst_distance <= ROUND_TRIP_TOLERANCE and worst_log <= ROUND_TRIP_TOLERANCE,
                   worst_distance=worst_distance, worst_log=worst_log)

    def check_measures(self):
        report = self.report
        for offset, manifold in enumerate(self.manifolds):
            rng = self.rng(120 + offset)
            atoms = random_points(manifold, rng, 20)
            measure = make_measure(manifold, atoms, rng.uniform(0.1, 1.0, 20))
            qs, ps = random_points(manifold, rng, 200), random_points(manifold, rng, 200)
            excess = max(abs(moment(measure, q, 1) - moment(measure, p, 1)) - manifold.distance(q, p)
                         for q, p in zip(qs, ps))
            report.add("moment-lipschitz", f"{manifold.tag}: first moment is 1-Lipschitz", excess <= METRIC_TOLERANCE,
                       worst_excess=float(excess))

            merged = make_measure(manifold, np.concatenate((atoms[:2], atoms[:1])), [1.0, 2.0, 1.0])
            report.add("measure-normalization", f"{manifold.tag}: duplicates merge and weights sum to one",
                       len(merged) == 2 and np.allclose(merged.weights, [0.5, 0.5], atol=0, rtol=1e-15)
                       and abs(measure.weights.sum() - 1) <= 1e-12)

            dyadic = dyadic_dirac_measure(manifold, 12)
            ratios = dyadic.weights[1:] / dyadic.weights[:-1]
            report.add("dyadic-geometric-weights", f"{manifold.tag}: dyadic weights halve and sum to one",
                       bool(np.all(ratios == 0.5)) and abs(dyadic.weights.sum() - 1) <= 1e-15)

    # -- means ---------------------------------------------------------------------------------------

    def check_battery(self):
        report = self.report
        tol = self.params.grad_tolerance
        for index, item in enumerate(battery_problems(self.seed)):
            prob, label = item.problem, item.label
            resolution = default_oracle_resolution(prob.manifold)
            result = brute_force_mean(prob, resolution, self.params)
            residual = fixed_point_residual(prob, result.mean, self.params.cut_tolerance)
            gap, method = mean_linearity_gap(prob, result.mean, self.schedule, self.direction_count)

            report.add("zero-differential-at-mean", f"{label}: converged with grad_norm < {tol:g}",
                       result.converged and result.grad_norm < tol, grad_norm=result.grad_norm)
            report.add("zero-expectation-of-log", f"{label}: |sum w_i log_mu x_i| < {tol:g}", residual < tol,
                       residual=residual)
            report.add("zero-differential-at-mean", f"{label}: linearity gap < {self.config.probe.LINEARITY_TOLERANCE:g}",
                       gap < self.config.probe.LINEARITY_TOLERANCE, gap=gap, method=method)
            report.add("cut-locus-null-at-mean", f"{label}: exact cut-locus membership mass is 0",
                       result.exact_cut_mass == 0, mass=result.exact_cut_mass)
            oracle_rows(report, prob, result, problem=label)
            anchors = difference_anchors(prob.manifold, [self.seed, 800 + index])
            difference_rows(report, prob, result, difference_minimizers(prob, resolution, self.params, anchors),
                            problem=label)

            if item.near_ties:
                found = all(any(prob.manifold.distance(tie, point) <= 1e-6 for point in result.near_ties)
                            for tie in item.near_ties)
                report.add("near-tie-report", f"{label}: all {len(item.near_ties)} symmetric minimizers reported",
                           found and len(result.near_ties) == len(item.near_ties)
                           and abs(result.value - item.tie_value) <= 1e-9,
                           near_ties=result.near_ties, value=result.value)

            self.battery_summary.append({"problem": label, "mean": result.mean, "value": result.value,
                                         "near_tie_count": len(result.near_ties)})

    def check_cut_null(self):
        bound = self.config.scenario.CUT_RATIO_BOUND
        for manifold, sigma in ((Sphere(2), 0.3), (FlatTorus(2), 1.0)):
            for seed in (self.seed, self.seed + 1, self.seed + 2):
                prob = _sampled(manifold, SamplerKind.WRAPPED_GAUSSIAN, seed, 10_000, sigma)
                result = gradient_descent_mean(prob, default_center(manifold), self.params)
                ratios = [mass / epsilon for epsilon, mass in result.cut_mass_profile[1:]]
                self.report.add("cut-locus-null-at-mean",
                                f"{manifold.tag} wrapped Gaussian seed {seed}: exact mass 0, mass(eps)/eps <= {bound:g}",
                                result.converged and result.exact_cut_mass == 0 and max(ratios) <= bound,
                                mass=result.exact_cut_mass, ratios=ratios)

    # -- probes -------------------------------------------------------------------------------------

    def check_first_variation(self):
        report = self.report
        residual_tolerance = self.config.probe.RESIDUAL_TOLERANCE
        for offset, manifold in enumerate(self.manifolds):
            rng = self.rng(200 + offset)
            directions = unit_directions(max(2 * manifold.dim, 32), manifold.dim)
            worst, noisy, mismatched_gaps, positive_sym = 0.0, 0, 0, 0.0
            for k in range(500):
                x = random_points(manifold, rng, 1)[0]
                if k % 5 == 0:
                    q = _cut_configuration(manifold, x, rng)
                else:
                    q = random_points(manifold, rng, 1)[0]
                    while 0 < manifold.cut_locus_distance(q, x) < CUT_CLEARANCE:
                        q = random_points(manifold, rng, 1)[0]
                f = distance_field(manifold, x, 2)
                v = _unit_vectors(rng, 1, manifold.dim)[0]
                probe = directional_derivative(f, q, v, self.schedule, residual_tolerance, self.scale)
                if probe.confidence is Confidence.NOISY:
                    noisy += 1
                else:
                    worst = max(worst, abs(probe.value - first_variation_differential(f, q, v)))

                symmetrized = symmetrized_values(f, q, directions, self.schedule)
                positive_sym = max(positive_sym, float(symmetrized.max()))
                if (float(np.max(-symmetrized)) > NONSMOOTH_GAP) != manifold.in_cut_locus_plus(q, x):
                    mismatched_gaps += 1

            report.add("first-variation-formula", f"{manifold.tag}: forward quotients of d_x^2 match "
                       f"-2 sup <v, w> within {FIRST_VARIATION_TOLERANCE:g} on 500 pairs",
                       worst <= FIRST_VARIATION_TOLERANCE, worst=worst, converged=500 - noisy)
            if noisy:
                report.add("first-variation-formula", f"{manifold.tag}: probes without a converged extrapolation",
                           True, confidence=Confidence.NOISY, noisy=noisy)
            report.add("nonsmooth-dichotomy", f"{manifold.tag}: linearity gap > {NONSMOOTH_GAP:g} exactly on C+ pairs",
                       mismatched_gaps == 0, mismatched=mismatched_gaps)
            report.add("symmetrized-differential-nonpositive", f"{manifold.tag}: D f(v) + D f(-v) <= 0",
                       positive_sym <= 1e-6, largest=positive_sym)

    def check_integral_differential(self):
        report = self.report
        circle = Circle()
        prob = _atoms(circle, [0.0, 1.0], [0.7, 0.3])
        gap = linearity_gap(frechet_field(prob), [np.pi], self.direction_count, self.schedule)
        expected = 4 * np.pi * 0.7
        report.add("differential-of-integral", "circle: gap of F at the antipode of the heavier atom is 4 pi w",
                   abs(gap - expected) <= 1e-6 * expected, gap=gap, expected=expected)

        torus = FlatTorus(2)
        weights = np.array([0.5, 0.5])
        prob = _atoms(torus, [[0.0, np.pi], [np.pi, 0.0]], weights)
        q = torus.point([np.pi, np.pi])
        count = max(2 * torus.dim, 32) if self.direction_count is None else self.direction_count
        directions = unit_directions(count, torus.dim)
        on_directions = float(np.max(4 * np.pi * (np.abs(directions) @ weights)))
        gap = linearity_gap(frechet_field(prob), q, count, self.schedule)
        closed = closed_form_linearity_gap(prob, q, count)
        bound = 4 * np.pi * float(np.linalg.norm(weights))
        report.add("differential-of-integral", "torus two-face point: probed gap equals the integrated first variation",
                   abs(gap - on_directions) <= 1e-6 * on_directions and abs(closed - on_directions) <= 1e-9 * on_directions
                   and on_directions <= bound + 1e-12,
                   gap=gap, closed_form=closed, expected=on_directions, supremum=bound)

    def check_semiconcavity(self):
        report = self.report
        step = self.config.probe.SEMICONCAVITY_STEP
        rng = self.rng(300)
        sphere, torus = Sphere(2), FlatTorus(2)

        estimates = []
        for k in range(100):
            q, x = random_points(sphere, rng, 2)
            estimates.append(semiconcavity_estimate(distance_field(sphere, x, 2), q, 0.3, 20, step, seed=k))
        report.add("square-distance-semiconcavity", "sphere(2): d_x^2 is 2-semiconcave on 100 balls",
                   max(estimates) <= 2 + 1e-4, largest=max(estimates))

        estimates, bound_excess, concavity_excess = [], -np.inf, -np.inf
        for k in range(100):
            q = random_points(torus, rng, 1)[0]
            d = rng.uniform(0.8, 2.0) if k % 2 else rng.uniform(0.0, 1.0)
            x = torus.exp_many(q, d * _unit_vectors(rng, 1, 2))[0]
            radius = 0.2 if k % 2 else 0.5
            square = semiconcavity_estimate(distance_field(torus, x, 2), q, radius, 20, step, seed=k)
            if k % 2:
                g = semiconcavity_estimate(distance_field(torus, x, 1), q, radius, 20, step, seed=k)
                b = 1 / (d - radius)
                concavity_excess = max(concavity_excess, g - b)
                bound_excess = max(bound_excess, square - square_semiconcavity_bound(b, d + radius, 1.0))
            else:
                estimates.append(square)
        report.add("square-distance-semiconcavity", "flat torus: d_x^2 inside the injectivity ball has constant 2",
                   max(abs(e - 2) for e in estimates) <= 1e-6, worst=max(abs(e - 2) for e in estimates))
        report.add("square-semiconcavity-bound", "flat torus: d_x is 1/(d - r)-concave and d_x^2 obeys 2 (s b + L^2)",
                   concavity_excess <= 1e-4 and bound_excess <= 1e-6,
                   concavity_excess=concavity_excess, bound_excess=bound_excess)

        prob = _sampled(sphere, SamplerKind.WRAPPED_GAUSSIAN, self.seed, 200, 0.3)
        mean = gradient_descent_mean(prob, default_center(sphere), self.params).mean
        estimate = semiconcavity_estimate(frechet_field(prob), mean, 0.5, 50, step, seed=self.seed)
        report.add("semiconcave-frechet-function", "sphere(2): F is 2-semiconcave around its mean",
                   estimate <= 2 + 1e-4, estimate=estimate)

    def check_barriers(self):
        report = self.report
        torus, sphere, circle = FlatTorus(2), Sphere(2), Circle()
        sample_size = self.config.probe.SAMPLE_SIZE or 400 * torus.dim
        halvings = int(self.config.probe.BARRIER_HALVINGS)
        rng = self.rng(400)

        # Additivity: barriers of f and g add up to a barrier of f + g
        q = random_points(torus, rng, 1)[0]
        f = distance_field(torus, torus.exp_many(q, np.array([[0.7, 0.2]]))[0], 2)
        g = distance_field(torus, torus.exp_many(q, np.array([[-0.5, 0.9]]))[0], 2)
        radius = 0.5
        cert_f = barrier_certificate_search(f, q, 8.0, radius, sample_size)
        cert_g = barrier_certificate_search(g, q, 8.0, radius, sample_size)
        U = np.concatenate((radial_sample(2, radius, sample_size), radial_sample(2, radius, sample_size, staggered=True)))
        points = torus.exp_many(q, U)
        combined = (_barrier_margins(cert_f, f(q), f.values(points), U)
                    + _barrier_margins(cert_g, g(q), g.values(points), U))
        report.add("barrier-additivity", "barriers of f and g sum to a barrier of f + g with the summed trace",
                   cert_f.success and cert_g.success and combined.min() >= -2 * MARGIN_TOLERANCE,
                   trace_f=cert_f.trace, trace_g=cert_g.trace, margin=float(combined.min()))

        # Cut point of a square distance: every target is reached
        x = random_points(torus, rng, 1)[0]
        edge = torus.point(x + np.array([np.pi, 0.3]))
        square = distance_field(torus, x, 2)
        targets = list(self.config.probe.BARRIER_TARGETS)
        rows = barrier_divergence_profile(square, edge, targets, float(self.config.probe.BARRIER_RADIUS), halvings,
                                          sample_size)
        report.add("divergence-at-cut-point", f"torus face point: barriers below every target in {targets}",
                   divergence_evidence(rows), rows=rows)
        self.curves.append(profile_curve(rows))

        first, second = preimage_selections(square, edge)
        nonlinear = nonlinear_differential_barrier(square, edge, -100.0, 2.0, first, second, 0.5, sample_size)
        report.add("nonlinear-differential-barrier", "torus face point: two linear bounds give trace < -100",
                   nonlinear.success, trace=nonlinear.trace, margin=nonlinear.margin)

        # Smooth point: no barrier below the Hessian trace
        smooth = torus.point(x + np.array([1.0, 0.3]))
        trace = hessian_trace_estimate(square, smooth, self.config.probe.SEMICONCAVITY_STEP)
        rows = barrier_divergence_profile(square, smooth, [trace - 0.1], 1.0, 6, sample_size)
        report.add("no-barrier-below-hessian", f"torus smooth point: no barrier below trace {trace:.6g} - 0.1",
                   not rows[0].success, hessian_trace=trace, best_trace=rows[0].trace)

        # Semiconcave function: a barrier exists just above b * dim
        for k in range(5):
            x = random_points(sphere, rng, 1)[0]
            q = sphere.exp_many(x, rng.uniform(0.8, 2.0) * _unit_vectors(rng, 1, 2))[0]
            sphere_square = distance_field(sphere, x, 2)
            b = semiconcavity_estimate(sphere_square, q, 0.02, 50, self.config.probe.SEMICONCAVITY_STEP, seed=k)
            target = b * sphere.dim + 0.1
            cert = barrier_certificate_search(sphere_square, q, target, 0.02, sample_size)
            report.add("barrier-at-semiconcave-point", f"sphere(2) pair {k}: barrier with trace < b dim + 0.1",
                       cert.success, semiconcavity=b, target=target, trace=cert.trace, margin=cert.margin)

        # Minimum: every barrier has nonnegative trace
        minima = [_atoms(circle, [-np.pi / 2, np.pi / 2]), _sampled(sphere, SamplerKind.WRAPPED_GAUSSIAN,
                                                                      self.seed, 200, 0.3)]
        for prob in minima:
            mean = gradient_descent_mean(prob, default_center(prob.manifold), self.params).mean
            rows = barrier_divergence_profile(frechet_field(prob), mean, [-0.1], 1.0, 6,
                                              self.config.probe.SAMPLE_SIZE or 400 * prob.manifold.dim)
            report.add("no-barrier-below-minimum", f"{prob.manifold.tag}: no barrier below -0.1 at the mean",
                       not rows[0].success, best_trace=rows[0].trace)

        # Antipode of the sphere distance: traces -4 / r for d_x and 4 - 8 pi / r for d_x^2
        antipode_field = distance_field(sphere, [0, 0, 1], 1)
        rows = barrier_divergence_profile(antipode_field, [0, 0, -1], ANTIPODE_TARGETS, 1.0, 6, 10_000)
        report.add("divergence-at-cut-point", "sphere(2) antipode of d_x: barriers below -5, -20, -80",
                   divergence_evidence(rows), rows=rows)
        square_rows = barrier_divergence_profile(distance_field(sphere, [0, 0, 1], 2), [0, 0, -1],
                                                 ANTIPODE_TARGETS, 1.0, 6, 10_000)
        report.add("square-distance-divergence", "sphere(2) antipode: d_x^2 diverges where d_x does and d_x > 0",
                   divergence_evidence(rows) and divergence_evidence(square_rows)
                   and antipode_field([0, 0, -1]) > 0,
                   rows=rows, square_rows=square_rows)

        for target in self.config.scenario.CIRCLE_BARRIER_TARGETS:
            certificate = explicit_circle_barrier(float(target))
            report.add("explicit-circle-barrier", f"C = {target:.6g}: h_C >= pi - |t| and trace 2C < C",
                       certificate.success, margin=certificate.margin, trace=certificate.trace)

    def check_finite_sum_quotients(self):
        rng = self.rng(500)
        worst = 0.0
        for manifold in self.manifolds:
            prob = _atoms(manifold, random_points(manifold, rng, 5), rng.dirichlet(np.ones(5)))
            q = random_points(manifold, rng, 1)[0]
            directions = unit_directions(8, manifold.dim)
            total = quotient_table(frechet_field(prob), q, directions, self.schedule)
            parts = sum(quotient_table(part, q, directions, self.schedule) for part in atom_fields(prob))
            scaled = np.abs(total - parts) * self.schedule.as_array()[None, :]
            worst = max(worst, float(scaled.max()) / max(1.0, frechet_value(prob, q)))
        self.report.add("finite-sum-quotients", "difference quotients of F are the weighted sums of atom quotients",
                        worst <= 1e-12, worst=worst)

    def check_critical_points(self):
        rng = self.rng(600)
        for manifold in self.manifolds:
            x = random_points(manifold, rng, 1)[0]
            if isinstance(manifold, FlatTorus):
                required = [x + np.array([np.pi, np.pi]), x + np.array([np.pi, 0.0])]
                candidates = required + [x + np.array([np.pi, 0.7])]
            else:
                required = [manifold.cut_points(x, 1)[0]]
                candidates = list(required)
            candidates += list(random_points(manifold, rng, 20))
            implied = all(manifold.in_cut_locus_plus(q, x) for q in candidates
                          if manifold.distance(q, x) > 1e-6 and is_critical_point(manifold, q, x))
            report_required = all(is_critical_point(manifold, q, x) for q in required)
            self.report.add("critical-points-in-cut-locus", f"{manifold.tag}: critical points of d_x lie in C+",
                            implied and report_required)

    def check_decomposition(self):
        rng = self.rng(700)
        worst = 0.0
        for item in battery_problems(self.seed)[::3]:
            prob = item.problem
            for q in random_points(prob.manifold, rng, 10):
                parts = cut_decomposition(prob, q).split(q)
                value = frechet_value(prob, q)
                worst = max(worst, abs(sum(parts) - value) / max(1.0, value))
        self.report.add("cut-locus-decomposition", "F splits into cut-locus and remaining parts", worst <= 1e-12,
                        worst=worst)

        circle = Circle()
        prob = _atoms(circle, [0.0, np.pi / 2, np.pi], [0.5, 0.3, 0.2])
        decomposition = cut_decomposition(prob, [0.0])
        self.report.add("cut-locus-decomposition", "on-cut part carries the weight of the antipodal atom",
                        abs(decomposition.on_cut_mass - 0.2) <= 1e-15, on_cut_mass=decomposition.on_cut_mass)

    def check_regimes(self):
        circle = Circle()
        median = brute_force_mean(_atoms(circle, [-0.5, 0.0, 0.5]).with_exponent(1.0), 720,
                                  replace(self.params, restart_count=0))
        self.report.add("median-atom-mass", "three-atom circle median is the middle atom with mass 1/3",
                        circle.distance(median.mean, [0.0]) <= 1e-9 and abs(median.atom_at_mean_mass - 1 / 3) <= 1e-12,
                        mean=median.mean, atom_at_mean_mass=median.atom_at_mean_mass)

        slack = self.config.scenario.NOWHERE_SMOOTH_SLACK
        ratio_range = tuple(self.config.scenario.DECAY_RATIO_RANGE)
        for manifold in (Circle(), Sphere(2)):
            _, rows = dyadic_gaps(manifold, 12, 2.0, self.schedule, self.direction_count)
            dyadic_gap_rows(self.report, rows, slack, ratio_range, manifold=manifold.tag)


@scenario("lemma-suite", "property-suite",
          "Invariants of geometry, measures, solver and probes on seeded random instances")
def run_lemma_suite(config: Config) -> RunRecord:
    seed = 0 if config.run.SEED is None else int(config.run.SEED)
    suite = PropertySuite(config, seed)
    for name, stage in suite.stages:
        if config.log.VERBOSE:
            print(f"[Start suite stage: {name}]")
        with scenario_timer.measure(f"suite:{name}"):
            stage()

    report = suite.report
    payload = {
        "seed": seed,
        "check_count": len(report.rows),
        "failed_citations": sorted({row.citation for row in report.failures}),
        "noisy_count": len(report.noisy),
        "battery": suite.battery_summary,
    }
    return RunRecord("lemma-suite", config_hash(config), payload, report.rows, suite.curves)
