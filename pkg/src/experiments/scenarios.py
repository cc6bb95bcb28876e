from dataclasses import asdict

import numpy as np

from src.algorithm.frechet.le_barden import find_le_barden_example, scan_medians
from src.algorithm.frechet.problem import cut_mass, fixed_point_residual, one_sided_derivative
from src.algorithm.frechet.solver import STRICT_ATOM_MARGIN
from src.algorithm.geometry.models import Circle
from src.algorithm.geometry.sequences import unit_directions
from src.algorithm.probes.barrier import (
    barrier_certificate_search, barrier_divergence_profile, divergence_evidence, explicit_circle_barrier,
)
from src.algorithm.probes.differentials import directional_derivative
from src.algorithm.probes.fields import Confidence, distance_field, frechet_field
from src.experiments import lemma_suite  # noqa: F401  registers the property suite
from src.experiments.scenario_builder import (
    SCENARIOS, build_context, default_oracle_resolution, difference_anchors, difference_minimizers,
    difference_rows, dyadic_gap_rows, dyadic_gaps, mean_linearity_gap, oracle_rows, profile_curve, scenario,
    scenario_timer,
)
from src.utils.analysis.conformance_report import ConformanceReport
from src.utils.errors import SearchBudgetExhaustedError
from src.utils.load_config import Config, config_error
from src.utils.run_manager import Curve, RunRecord, config_hash
from src.utils.serialization import mean_result_to_dict, measure_to_json, point_to_json

ATOM_TOLERANCE: float = 1e-12


def _record(name: str, config: Config, payload: dict, report: ConformanceReport,
            curves: list[Curve] | None = None) -> RunRecord:
    return RunRecord(name, config_hash(config), payload, report.rows, curves or [])


@scenario("mean", "zero-differential-at-mean",
          "Fréchet mean by grid oracle and descent; gradient, log residual and linearity gap at the mean")
def run_mean(config: Config) -> RunRecord:
    ctx = build_context(config)
    prob, report = ctx.problem, ConformanceReport()
    tol = config.solver.GRAD_TOLERANCE
    oracle, result = ctx.compute_mean()

    with scenario_timer.measure("probes"):
        residual = fixed_point_residual(prob, result.mean, ctx.params.cut_tolerance)
        gap, gap_method = mean_linearity_gap(prob, result.mean, ctx.schedule, config.probe.DIRECTION_COUNT)

    smooth = prob.p >= 2
    report.add("zero-differential-at-mean", "descent converged", result.converged, asserted=smooth,
               iterations=result.iterations)
    report.add("zero-differential-at-mean", f"grad_norm < {tol:g}", result.grad_norm < tol, asserted=smooth,
               grad_norm=result.grad_norm)
    report.add("zero-expectation-of-log", f"|sum w_i log_mu x_i| < {tol:g}", residual < tol,
               asserted=prob.p == 2 and result.exact_cut_mass == 0, residual=residual)
    report.add("zero-differential-at-mean", f"linearity gap < {config.probe.LINEARITY_TOLERANCE:g}",
               gap < config.probe.LINEARITY_TOLERANCE, asserted=smooth, gap=gap, method=gap_method)
    oracle_rows(report, prob, result)

    payload = {
        "manifold": ctx.manifold.tag,
        "measure_size": len(ctx.measure),
        "p": prob.p,
        "result": mean_result_to_dict(result, ctx.manifold),
        "oracle_value": oracle.value,
        "fixed_point_residual": residual,
        "linearity_gap": gap,
        "linearity_gap_method": gap_method,
        "near_tie_count": len(result.near_ties),
    }
    return _record("mean", config, payload, report)


@scenario("cut-mass", "cut-locus-null-at-mean",
          "Weight of atoms near the cut locus of the mean over an epsilon grid, also at the Fréchet difference minimizer")
def run_cut_mass(config: Config) -> RunRecord:
    ctx = build_context(config)
    prob, report = ctx.problem, ConformanceReport()
    oracle, result = ctx.compute_mean()
    profile = result.cut_mass_profile
    sampled = config.measure.SOURCE == "sampler"

    ratios = [mass / epsilon for epsilon, mass in profile[1:]]
    report.add("cut-locus-null-at-mean", "exact cut-locus membership mass is 0", result.exact_cut_mass == 0,
               asserted=prob.p >= 2, mass=result.exact_cut_mass)
    report.add("cut-locus-null-at-mean", f"mass(eps) / eps <= {config.scenario.CUT_RATIO_BOUND:g}",
               max(ratios) <= config.scenario.CUT_RATIO_BOUND, asserted=sampled and prob.p >= 2, ratios=ratios)

    seed = 0 if config.run.SEED is None else int(config.run.SEED)
    with scenario_timer.measure("difference"):
        checks = difference_minimizers(prob, ctx.oracle_resolution, ctx.params,
                                       difference_anchors(ctx.manifold, seed))
    check = checks[0]
    difference_profile = cut_mass(prob, check.refined.mean, ctx.params.cut_mass_epsilons,
                                  ctx.params.cut_tolerance)
    difference_rows(report, prob, oracle, checks)
    report.add("difference-minimizer-agreement", "cut-mass profile agrees at the difference minimizer",
               difference_profile[0][1] == result.exact_cut_mass, asserted=prob.p >= 2,
               profile=difference_profile)

    payload = {
        "manifold": ctx.manifold.tag,
        "measure_size": len(ctx.measure),
        "p": prob.p,
        "mean": point_to_json(ctx.manifold, result.mean),
        "value": result.value,
        "cut_mass_profile": [{"epsilon": epsilon, "mass": mass} for epsilon, mass in profile],
        "difference_minimizer": point_to_json(ctx.manifold, check.refined.mean),
        "difference_indices": [item.difference_index for item in checks],
        "difference_cut_mass_profile": [{"epsilon": epsilon, "mass": mass} for epsilon, mass in difference_profile],
    }
    curve = Curve("cut_mass", ("epsilon", "mass"), [(epsilon, mass) for epsilon, mass in profile])
    return _record("cut-mass", config, payload, report, [curve])


@scenario("circle-barrier", "explicit-circle-barrier",
          "Closed-form barriers h_C(t) = pi + C t^2 over the distance to the antipode on the circle")
def run_circle_barrier(config: Config) -> RunRecord:
    manifold = config.build_manifold()
    if not isinstance(manifold, Circle):
        raise config_error("manifold", "KIND", f"the circle barrier lives on the circle, got {manifold.tag}.",
                           "Set manifold KIND to circle.")
    targets = [float(target) for target in config.scenario.CIRCLE_BARRIER_TARGETS]
    if not targets or any(target >= 0 for target in targets):
        raise config_error("scenario", "CIRCLE_BARRIER_TARGETS", f"targets must be negative, got {targets}.",
                           "Use e.g. [-0.3183098861837907, -1, -10].")

    report = ConformanceReport()
    field = distance_field(manifold, [0.0])
    certificates, searched = [], []
    for target in targets:
        certificate = explicit_circle_barrier(target)
        certificates.append(certificate)
        report.add("explicit-circle-barrier", f"C = {target:.6g}: margin >= 0 on |t| <= {-1 / target:.6g}, "
                   f"trace {certificate.trace:.6g} < C", certificate.success,
                   margin=certificate.margin, trace=certificate.trace)

        radius = -1 / target
        if radius < manifold.injectivity_radius:
            found = barrier_certificate_search(field, [np.pi], target, radius,
                                               config.probe.SAMPLE_SIZE or 400 * manifold.dim)
            searched.append(found)
            report.add("barrier-search-at-antipode", f"C = {target:.6g}: searched barrier on radius {radius:.6g}",
                       found.success, asserted=False, trace=found.trace, margin=found.margin)

    probe = config.probe
    with scenario_timer.measure("profile"):
        rows = barrier_divergence_profile(field, [np.pi], probe.BARRIER_TARGETS, float(probe.BARRIER_RADIUS),
                                          int(probe.BARRIER_HALVINGS), probe.SAMPLE_SIZE)
    report.add("divergence-at-cut-point", "antipode of d_x: a barrier below every probe target",
               divergence_evidence(rows), targets=list(probe.BARRIER_TARGETS), rows=rows)

    payload = {
        "targets": targets,
        "explicit": [certificate.to_dict() for certificate in certificates],
        "searched": [certificate.to_dict() for certificate in searched],
        "profile": [asdict(row) for row in rows],
    }
    curves = [
        Curve("circle_barrier", ("C", "trace", "margin"), [(c.target, c.trace, c.margin) for c in certificates]),
        profile_curve(rows),
    ]
    return _record("circle-barrier", config, payload, report, curves)


@scenario("nowhere-smooth", "nowhere-smooth-dyadic",
          "Linearity gaps of F at cut points of a dyadic Dirac measure with a covering-radius proxy")
def run_nowhere_smooth(config: Config) -> RunRecord:
    manifold = config.build_manifold()
    schedule = config.build_schedule()
    count = int(config.measure.DYADIC_J)
    p = float(config.solver.EXPONENT)
    report = ConformanceReport()

    with scenario_timer.measure("probes"):
        prob, rows = dyadic_gaps(manifold, count, p, schedule, config.probe.DIRECTION_COUNT)

    # Gaps on the torus are observed only: cut points of other atoms may fall within the probe steps
    asserted = manifold.kind in ("circle", "sphere")
    dyadic_gap_rows(report, rows, config.scenario.NOWHERE_SMOOTH_SLACK,
                    tuple(config.scenario.DECAY_RATIO_RANGE), asserted=asserted)

    cut_points = np.array([row.cut_point for row in rows])
    reference = manifold.grid(default_oracle_resolution(manifold)).points
    covering = manifold.covering_radius(cut_points, reference)

    payload = {
        "manifold": manifold.tag,
        "count": count,
        "p": p,
        "gaps": [{"j": row.index, "weight": row.weight, "cut_point": row.cut_point, "gap": row.gap,
                  "expected": row.expected} for row in rows],
        "covering_radius_proxy": covering,
        "measure": measure_to_json(prob.measure),
    }
    curve = Curve("nowhere_smooth", ("j", "weight", "gap"), [(row.index, row.weight, row.gap) for row in rows])
    return _record("nowhere-smooth", config, payload, report, [curve])


@scenario("sticky", "no-stickiness-at-mean",
          "Smallest one-sided derivative of F at the mean over sampled unit directions")
def run_sticky(config: Config) -> RunRecord:
    ctx = build_context(config)
    prob, report = ctx.problem, ConformanceReport()
    _, result = ctx.compute_mean()

    field = frechet_field(prob, ctx.params.threads)
    directions = unit_directions(max(2 * ctx.manifold.dim, config.scenario.STICKY_DIRECTIONS), ctx.manifold.dim)
    with scenario_timer.measure("probes"):
        reports = [directional_derivative(field, result.mean, v, ctx.schedule, config.probe.RESIDUAL_TOLERANCE,
                                          ctx.tolerance_scale)
                   for v in directions]
    values = np.array([probe.value for probe in reports])
    noisy = sum(probe.confidence is Confidence.NOISY for probe in reports)
    minimum = float(values.min())
    tol = config.probe.LINEARITY_TOLERANCE * ctx.tolerance_scale
    nonsticky = minimum <= tol

    report.add("no-stickiness-at-mean", f"min D_mu F(v) within [-{tol:g}, {tol:g}]", abs(minimum) <= tol,
               asserted=prob.p >= 2, confidence=Confidence.NOISY if noisy else Confidence.CONVERGED,
               minimum=minimum, noisy_probes=noisy)
    if prob.p == 1:
        report.add("median-atom-mass", "atom mass at the median", result.atom_at_mean_mass > 0, asserted=False,
                   atom_at_mean_mass=result.atom_at_mean_mass)

    payload = {
        "manifold": ctx.manifold.tag,
        "p": prob.p,
        "mean": point_to_json(ctx.manifold, result.mean),
        "verdict": "nonsticky" if nonsticky else "sticky",
        "min_derivative": minimum,
        "atom_at_mean_mass": result.atom_at_mean_mass,
        "probes": [probe.to_dict() for probe in reports],
    }
    return _record("sticky", config, payload, report)


@scenario("pmean", "p-mean-regimes",
          "Fréchet p-mean with the atom optimality test for p = 1 and cut-mass checks for p >= 2")
def run_pmean(config: Config) -> RunRecord:
    ctx = build_context(config)
    prob, report = ctx.problem, ConformanceReport()
    _, result = ctx.compute_mean()
    oracle_rows(report, prob, result)

    if prob.p == 1 and result.atom_at_mean_mass > 0:
        directions = unit_directions(max(2 * ctx.manifold.dim, 8 * ctx.manifold.dim), ctx.manifold.dim)
        derivatives = [one_sided_derivative(prob, result.mean, v, ctx.params.cut_tolerance, allow_atoms=True)
                       for v in directions]
        report.add("median-atom-optimality", "D_a F(v) >= 0 at the atom in every tested direction",
                   min(derivatives) >= -ATOM_TOLERANCE, min_derivative=min(derivatives),
                   atom_at_mean_mass=result.atom_at_mean_mass)
    elif prob.p == 1:
        report.add("median-atom-optimality", "descent converged away from the atoms", result.converged,
                   grad_norm=result.grad_norm)
    elif prob.p >= 2:
        report.add("cut-locus-null-at-mean", "exact cut-locus membership mass is 0", result.exact_cut_mass == 0,
                   mass=result.exact_cut_mass)
    else:
        report.add("cut-locus-null-at-mean", "exact cut-locus membership mass for 1 < p < 2",
                   result.exact_cut_mass == 0, asserted=False, profile=result.cut_mass_profile)

    payload = {
        "manifold": ctx.manifold.tag,
        "p": prob.p,
        "result": mean_result_to_dict(result, ctx.manifold),
        "le_barden": result.le_barden,
    }
    return _record("pmean", config, payload, report)


@scenario("le-barden", "median-at-atom-with-weighted-antipode",
          "Search four circle atoms whose median is an atom with a weighted antipode")
def run_le_barden(config: Config) -> RunRecord:
    params = config.build_solver_params()
    resolution = int(config.scenario.LE_BARDEN_RESOLUTION)
    report = ConformanceReport()
    try:
        with scenario_timer.measure("search"):
            measure, result = find_le_barden_example(resolution, params=params)
    except SearchBudgetExhaustedError as error:
        report.add("median-at-atom-with-weighted-antipode", "search budget", False, asserted=False,
                   message=str(error))
        return _record("le-barden", config, {"found": False, "message": str(error)}, report)

    circle = measure.manifold
    scan = circle.grid(resolution).points[:, 0]
    minimizers, spreads = scan_medians(measure.atoms[:, 0], measure.weights[None, :], scan)
    index, spread = int(minimizers[0]), int(spreads[0])
    scan_gap = circle.distance([scan[index]], result.mean)

    report.add("median-at-atom-with-weighted-antipode", "median carries atom mass",
               result.atom_at_mean_mass > 0, atom_at_mean_mass=result.atom_at_mean_mass)
    report.add("median-at-atom-with-weighted-antipode", "D_mu F(v) > 0 for every unit v at the atom",
               result.atom_margin is not None and result.atom_margin > STRICT_ATOM_MARGIN,
               atom_margin=result.atom_margin)
    report.add("median-at-atom-with-weighted-antipode", "scan near-ties stay within one grid step",
               spread <= 1, spread=spread)
    report.add("median-at-atom-with-weighted-antipode", "antipode of the median carries weight",
               result.exact_cut_mass > 0, cut_mass=result.exact_cut_mass)
    report.add("median-at-atom-with-weighted-antipode", "exhaustive scan minimum within one grid step",
               scan_gap <= 2 * np.pi / resolution, scan_gap=scan_gap)

    payload = {
        "found": True,
        "measure": measure_to_json(measure),
        "result": mean_result_to_dict(result, circle),
        "scan_minimizer": float(scan[index]),
    }
    return _record("le-barden", config, payload, report)


def run_scenario(config: Config) -> RunRecord:
    """Run the scenario named in the config."""
    name = config.scenario.SCENARIO
    if name not in SCENARIOS:
        raise config_error("scenario", "SCENARIO", f"unknown scenario {name!r}.",
                           f"Use one of {', '.join(SCENARIOS)}.")
    return SCENARIOS[name].runner(config)
