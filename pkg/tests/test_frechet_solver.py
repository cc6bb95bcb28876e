import numpy as np
import pytest

from src.algorithm.frechet.problem import (
    FrechetProblem, cut_decomposition, cut_mass, fixed_point_residual, frechet_difference, frechet_value,
    frechet_values, gradient, one_sided_derivative,
)
from src.algorithm.frechet.solver import SolverParams, brute_force_mean, gradient_descent_mean, p_mean
from src.algorithm.geometry.models import Circle, FlatTorus
from src.algorithm.measures.atom_measure import make_measure
from src.algorithm.measures.sampler import SamplerKind, SamplerSpec, sample_measure
from src.utils.analysis.descent_logger import DescentLogger
from src.utils.errors import AtomAtQueryError, InvalidInputError

PARAMS = SolverParams()


def problem(manifold, atoms, weights=None, p=2.0) -> FrechetProblem:
    return FrechetProblem(manifold, make_measure(manifold, atoms, weights), p)


def test_problem_validation(circle, sphere):
    measure = make_measure(circle, [0.0])
    with pytest.raises(InvalidInputError):
        FrechetProblem(circle, measure, 0.5)
    with pytest.raises(InvalidInputError):
        FrechetProblem(sphere, measure)
    with pytest.raises(InvalidInputError):
        SolverParams(step_size=0)


def test_values_and_differences(sphere, rng):
    prob = FrechetProblem(sphere, sample_measure(SamplerSpec(SamplerKind.WRAPPED_GAUSSIAN, 0, 300, sigma=0.5), sphere))
    points = sphere.points(rng.standard_normal((50, 3)))
    values = frechet_values(prob, points)
    assert np.allclose(values, [frechet_value(prob, q) for q in points], rtol=0, atol=1e-12)
    assert np.allclose(values, frechet_values(prob, points, threads=2), rtol=0, atol=1e-12)
    assert frechet_difference(prob, points[0], points[1]) == pytest.approx(values[0] - values[1], abs=1e-12)


def test_circle_two_atoms_near_ties(circle):
    prob = problem(circle, [-np.pi / 2, np.pi / 2])
    result = brute_force_mean(prob, 720, PARAMS)
    assert result.value == pytest.approx(np.pi ** 2 / 4, abs=1e-9)
    assert result.converged
    assert len(result.near_ties) == 2
    assert sorted(abs(tie[0]) for tie in result.near_ties) == pytest.approx([0, np.pi], abs=1e-9)
    assert circle.distance(result.mean, [0.0]) <= 1e-9
    assert abs(result.value - result.grid_value) <= 2 * np.pi * result.covering_radius


def test_sphere_equator_poles_tie(sphere):
    measure = sample_measure(SamplerSpec(SamplerKind.EQUATOR, seed=0, count=100), sphere)
    result = brute_force_mean(FrechetProblem(sphere, measure), 40, PARAMS)
    assert result.value == pytest.approx(np.pi ** 2 / 4, abs=1e-9)
    poles = sorted(tie[2] for tie in result.near_ties)
    assert poles == pytest.approx([-1, 1], abs=1e-6)


def test_single_atom_is_its_own_mean(torus):
    prob = problem(torus, [[1.0, 2.0]])
    result = brute_force_mean(prob, 64, PARAMS)
    assert torus.distance(result.mean, [1.0, 2.0]) <= 1e-9
    assert result.value <= 1e-18
    assert fixed_point_residual(prob, result.mean) <= 1e-9
    assert result.exact_cut_mass == 0


def test_descent_on_the_circle(circle):
    prob = problem(circle, [0.2, 0.6])
    logger = DescentLogger(1)
    result = gradient_descent_mean(prob, [0.0], PARAMS, logger)
    assert result.mean[0] == pytest.approx(0.4, abs=1e-9)
    assert result.grad_norm < 1e-9
    assert result.trace and result.trace[0]["iteration"] == 0
    assert result.trace[-1]["value"] == pytest.approx(result.value)


def test_residual_vanishes_at_the_mean(sphere):
    prob = problem(sphere, [[0, 0, 1], [1, 0, 0], [0, 1, 0]], [0.5, 0.3, 0.2])
    result = gradient_descent_mean(prob, [0, 0, 1], PARAMS)
    assert result.converged
    assert fixed_point_residual(prob, result.mean) < 1e-9
    assert gradient(prob, result.mean).norm < 1e-9


def test_three_atom_circle_median(circle):
    prob = problem(circle, [-0.5, 0.0, 0.5], p=1.0)
    result = brute_force_mean(prob, 720, PARAMS)
    assert circle.distance(result.mean, [0.0]) <= 1e-12
    assert result.atom_at_mean_mass == pytest.approx(1 / 3, abs=1e-12)
    assert not result.le_barden


def test_median_with_weighted_antipode_is_flagged(circle):
    prob = problem(circle, [0.0, np.pi, np.pi / 2, -np.pi / 2], [0.4, 0.1, 0.3, 0.2], p=1.0)
    result = p_mean(prob, [0.0], PARAMS)
    assert circle.distance(result.mean, [0.0]) <= 1e-12
    assert result.exact_cut_mass == pytest.approx(0.1)
    assert result.le_barden


def test_atom_at_query_with_p_one(circle):
    prob = problem(circle, [-0.5, 0.0, 0.5], p=1.0)
    with pytest.raises(AtomAtQueryError):
        one_sided_derivative(prob, [0.0], [1.0])
    with pytest.raises(AtomAtQueryError):
        gradient(prob, [0.0])
    assert one_sided_derivative(prob, [0.0], [1.0], allow_atoms=True) == pytest.approx(1 / 3)
    assert one_sided_derivative(prob, [0.0], [-1.0], allow_atoms=True) == pytest.approx(1 / 3)


def test_one_sided_derivative_at_the_antipode(circle):
    prob = problem(circle, [0.0])
    # d^2 from pi towards either side drops with slope 2 pi
    assert one_sided_derivative(prob, [np.pi], [1.0]) == pytest.approx(-2 * np.pi)
    assert one_sided_derivative(prob, [np.pi], [-1.0]) == pytest.approx(-2 * np.pi)


def test_cut_mass_profile(circle):
    prob = problem(circle, [0.0, np.pi, 3.0], [0.6, 0.2, 0.2])
    profile = cut_mass(prob, [0.0], [0.2, 0.05])
    assert profile[0] == (0.0, pytest.approx(0.2))
    assert [epsilon for epsilon, _ in profile[1:]] == [0.05, 0.2]
    assert profile[1][1] == pytest.approx(0.2)
    assert profile[2][1] == pytest.approx(0.4)
    with pytest.raises(InvalidInputError):
        cut_mass(prob, [0.0], [])


def test_cut_mass_is_zero_inside_the_injectivity_ball(torus):
    prob = problem(torus, [[0.1, 0.2], [6.0, 0.1], [0.5, 6.2]])
    assert all(mass == 0 for _, mass in cut_mass(prob, [0.0, 0.0], PARAMS.cut_mass_epsilons))


def test_cut_decomposition_splits_the_frechet_function(torus, rng):
    prob = problem(torus, [[np.pi, 0.0], [1.0, 1.0], [0.0, np.pi]], [0.2, 0.5, 0.3])
    decomposition = cut_decomposition(prob, [0.0, 0.0])
    assert decomposition.on_cut_mass == pytest.approx(0.5)
    for q in torus.points(rng.uniform(0, 2 * np.pi, (20, 2))):
        assert sum(decomposition.split(q)) == pytest.approx(frechet_value(prob, q), rel=1e-12)


def test_restarts_never_worsen_the_value(circle):
    prob = problem(circle, [0.0, 2.0, -2.5], [0.5, 0.3, 0.2])
    single = gradient_descent_mean(prob, [np.pi - 0.1], PARAMS)
    restarted = gradient_descent_mean(prob, [np.pi - 0.1], SolverParams(restart_count=8))
    assert restarted.value <= single.value + 1e-12


def test_oracle_bound_on_the_torus():
    torus = FlatTorus(2)
    prob = FrechetProblem(torus, sample_measure(SamplerSpec(SamplerKind.WRAPPED_GAUSSIAN, 2, 200, sigma=0.5), torus))
    result = brute_force_mean(prob, 64, PARAMS)
    assert result.converged
    assert abs(result.value - result.grid_value) <= 2 * torus.diameter * result.covering_radius


def test_flagged_median_has_a_strict_margin(circle):
    prob = problem(circle, [0.0, np.pi, np.pi / 2, -np.pi / 2], [0.4, 0.1, 0.3, 0.2], p=1.0)
    result = p_mean(prob, [0.0], PARAMS)
    # D_0 F(+1) = 0.4 - 0.1 - 0.3 + 0.2, D_0 F(-1) = 0.4 - 0.1 + 0.3 - 0.2
    assert result.atom_margin == pytest.approx(0.2)


def test_exact_cut_mass_uses_the_cut_tolerance(circle):
    prob = problem(circle, [0.0, np.pi - 1e-3], [0.5, 0.5])
    profile = cut_mass(prob, [0.0], [0.025])
    assert profile[0] == (0.0, 0.0)
    assert profile[1][1] == pytest.approx(0.5)
    assert cut_mass(prob, [0.0], [0.025], tol=1e-2)[0][1] == pytest.approx(0.5)


def test_seeded_tie_break_is_reproducible(circle):
    prob = problem(circle, [np.pi, 0.5])
    pulls = [gradient(prob, [0.0], rng=np.random.default_rng(seed)).vector.components[0] for seed in range(20)]
    again = [gradient(prob, [0.0], rng=np.random.default_rng(seed)).vector.components[0] for seed in range(20)]
    assert pulls == again
    assert min(pulls) < 0 < max(pulls)
    assert gradient(prob, [0.0]).multivalued

    params = SolverParams(tie_break_seed=3)
    first, second = p_mean(prob, [0.0], params), p_mean(prob, [0.0], params)
    assert np.array_equal(first.mean, second.mean)
    assert first.iterations == second.iterations
