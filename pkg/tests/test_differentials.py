import numpy as np
import pytest

from src.algorithm.frechet.problem import FrechetProblem
from src.algorithm.measures.atom_measure import make_measure
from src.algorithm.probes.differentials import (
    closed_form_linearity_gap, directional_derivative, first_variation_differential, hessian_trace_estimate,
    is_critical_point, linearity_gap, quotient_table, semiconcavity_estimate, square_semiconcavity_bound,
    symmetrized_differential,
)
from src.algorithm.probes.fields import (
    Confidence, Extrapolation, StepSchedule, distance_field, frechet_field, richardson,
)
from src.utils.errors import InvalidInputError


def test_square_distance_gap_at_the_antipode(circle):
    f = distance_field(circle, [0.0], 2)
    assert linearity_gap(f, [np.pi]) == pytest.approx(4 * np.pi, abs=1e-6)
    report = symmetrized_differential(f, [np.pi], [1.0])
    assert report.value == pytest.approx(-4 * np.pi, abs=1e-6)
    assert report.monotone


def test_smooth_directional_derivative(circle):
    report = directional_derivative(distance_field(circle, [0.0], 2), [1.0], [1.0])
    assert report.value == pytest.approx(2.0, abs=1e-9)
    assert report.confidence is Confidence.CONVERGED
    assert report.monotone
    assert len(report.to_dict()["table"]) == 9


def test_first_variation_on_a_torus_face(torus):
    f = distance_field(torus, [0.0, 0.0], 2)
    q, v = [np.pi, 0.5], np.array([0.6, 0.8])
    expected = -2 * np.pi * abs(v[0]) + 2 * 0.5 * v[1]
    assert first_variation_differential(f, q, v) == pytest.approx(expected)
    assert directional_derivative(f, q, v).value == pytest.approx(expected, abs=1e-6)


def test_first_variation_needs_a_frechet_problem(torus):
    f = distance_field(torus, [0.0, 0.0]) + distance_field(torus, [1.0, 1.0])
    with pytest.raises(InvalidInputError):
        first_variation_differential(f, [0.5, 0.5], [1.0, 0.0])


def test_semiconcavity_and_hessian_of_the_torus_square(torus):
    f = distance_field(torus, [0.0, 0.0], 2)
    assert semiconcavity_estimate(f, [1.0, 1.0], 0.5) == pytest.approx(2.0, abs=1e-6)
    assert hessian_trace_estimate(f, [1.0, 1.0]) == pytest.approx(4.0, abs=1e-6)
    with pytest.raises(InvalidInputError):
        semiconcavity_estimate(f, [1.0, 1.0], np.pi)


def test_square_semiconcavity_bound():
    assert square_semiconcavity_bound(1, 2, 1) == 6
    assert square_semiconcavity_bound(1, 2, 1, p=3) == pytest.approx(24)
    with pytest.raises(InvalidInputError):
        square_semiconcavity_bound(1, 2, 1, p=1.5)


def test_critical_points(circle, torus):
    assert is_critical_point(circle, [np.pi], [0.0])
    assert is_critical_point(torus, [np.pi, np.pi], [0.0, 0.0])
    assert not is_critical_point(torus, [np.pi, 0.5], [0.0, 0.0])
    assert not is_critical_point(torus, [1.0, 1.0], [0.0, 0.0])
    with pytest.raises(InvalidInputError):
        is_critical_point(circle, [0.0], [0.0])


def test_step_schedule(circle):
    schedule = StepSchedule.geometric()
    assert schedule.as_array() == pytest.approx(1e-2 * 0.5 ** np.arange(9))
    assert schedule.extrapolation is Extrapolation.RICHARDSON
    assert StepSchedule((0.1, 0.05), "none").extrapolation is Extrapolation.NONE
    for steps in [(), (1e-2, 1e-2), (1e-2, -1e-3)]:
        with pytest.raises(InvalidInputError):
            StepSchedule(steps)
    with pytest.raises(InvalidInputError):
        quotient_table(distance_field(circle, [0.0]), [1.0], np.array([[1.0]]), StepSchedule((4.0,)))


def test_richardson_removes_the_linear_term():
    assert richardson([1.5, 1.25, 1.125]) == pytest.approx(1.0, abs=1e-14)
    assert richardson([3.0]) == 3.0


def test_closed_form_gap_of_a_weighted_antipode(circle):
    prob = FrechetProblem(circle, make_measure(circle, [0.0, np.pi], [0.7, 0.3]))
    assert closed_form_linearity_gap(prob, [0.0]) == pytest.approx(4 * np.pi * 0.3)
    assert linearity_gap(frechet_field(prob), [0.0]) == pytest.approx(4 * np.pi * 0.3, abs=1e-6)


def test_quotient_table_shape(sphere):
    f = distance_field(sphere, [0, 0, 1], 2)
    directions = np.eye(2)[[0, 1, 0]]
    table = quotient_table(f, [1, 0, 0], directions, StepSchedule.geometric())
    assert table.shape == (3, 9)
    assert np.allclose(table[0], table[2])
