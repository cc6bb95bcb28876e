import numpy as np
import pytest

from src.algorithm.probes.barrier import (
    barrier_certificate_search, barrier_divergence_profile, divergence_evidence, explicit_circle_barrier,
    nonlinear_differential_barrier, preimage_selections, radial_sample,
)
from src.algorithm.probes.differentials import hessian_trace_estimate
from src.algorithm.probes.fields import distance_field
from src.utils.errors import InvalidInputError

FACE_POINT = [np.pi, 0.3]


@pytest.mark.parametrize("target", [-1 / np.pi, -1.0, -10.0, -100.0])
def test_explicit_circle_barrier(target):
    certificate = explicit_circle_barrier(target)
    assert certificate.success
    assert certificate.trace == pytest.approx(2 * target)
    assert certificate.radius == pytest.approx(-1 / target)
    assert certificate.margin >= 0
    assert certificate.to_dict()["margin_table"]


def test_explicit_circle_barrier_needs_a_negative_target():
    with pytest.raises(InvalidInputError):
        explicit_circle_barrier(1.0)


def test_barriers_diverge_on_a_torus_face(torus):
    square = distance_field(torus, [0.0, 0.0], 2)
    rows = barrier_divergence_profile(square, FACE_POINT, [-1.0, -10.0, -100.0], 1.0, 8, 800)
    assert divergence_evidence(rows)
    radii = [row.best_radius for row in rows]
    assert radii == sorted(radii, reverse=True)


def test_square_distance_diverges_at_the_sphere_antipode(sphere):
    north, south = [0.0, 0.0, 1.0], [0.0, 0.0, -1.0]
    distance = distance_field(sphere, north, 1)
    square = distance_field(sphere, north, 2)
    assert distance(south) == pytest.approx(np.pi)
    rows = barrier_divergence_profile(distance, south, [-5.0, -20.0, -80.0], 1.0, 6, 10_000)
    square_rows = barrier_divergence_profile(square, south, [-5.0, -20.0, -80.0], 1.0, 6, 10_000)
    assert divergence_evidence(rows)
    assert divergence_evidence(square_rows)
    # d^2 carries the factor 2 d = 2 pi, so each target is reached at a larger radius
    assert all(fast.best_radius >= slow.best_radius for fast, slow in zip(square_rows, rows))


def test_no_barrier_below_the_hessian_at_a_smooth_point(torus):
    square = distance_field(torus, [0.0, 0.0], 2)
    trace = hessian_trace_estimate(square, [1.0, 0.3])
    rows = barrier_divergence_profile(square, [1.0, 0.3], [trace - 0.1], 1.0, 4, 800)
    assert not rows[0].success
    assert not divergence_evidence(rows)


def test_barrier_at_a_smooth_point_has_the_hessian_trace(torus):
    square = distance_field(torus, [0.0, 0.0], 2)
    certificate = barrier_certificate_search(square, [1.0, 0.3], 4.5, 0.5, 800)
    assert certificate.success
    assert certificate.trace == pytest.approx(4.0, abs=0.1)
    assert certificate.linear.tolist() == pytest.approx([2.0, 0.6], abs=1e-6)


def test_nonlinear_differential_barrier(torus):
    square = distance_field(torus, [0.0, 0.0], 2)
    first, second = preimage_selections(square, FACE_POINT)
    assert not np.allclose(first, second)
    certificate = nonlinear_differential_barrier(square, FACE_POINT, -100.0, 2.0, first, second, 0.5, 800)
    assert certificate.success
    assert certificate.trace < -100
    with pytest.raises(InvalidInputError):
        nonlinear_differential_barrier(square, FACE_POINT, -100.0, 2.0, first, first, 0.5, 800)


def test_preimage_selections_need_a_cut_point(torus):
    with pytest.raises(InvalidInputError):
        preimage_selections(distance_field(torus, [0.0, 0.0], 2), [1.0, 0.3])


def test_invalid_barrier_requests(torus):
    square = distance_field(torus, [0.0, 0.0], 2)
    with pytest.raises(InvalidInputError):
        barrier_certificate_search(square, FACE_POINT, -1.0, 0.0, 800)
    with pytest.raises(InvalidInputError):
        barrier_certificate_search(square, FACE_POINT, -1.0, np.pi, 800)
    with pytest.raises(InvalidInputError):
        barrier_certificate_search(square, FACE_POINT, -1.0, 0.5, 100)
    with pytest.raises(InvalidInputError):
        barrier_divergence_profile(square, FACE_POINT, [-10.0, -1.0])


def test_radial_sample():
    sample = radial_sample(2, 0.5, 800)
    assert np.array_equal(sample, radial_sample(2, 0.5, 800))
    assert np.linalg.norm(sample, axis=1).max() == pytest.approx(0.5)
    assert np.linalg.norm(sample, axis=1).min() == pytest.approx(5e-4)
    staggered = radial_sample(2, 0.5, 800, staggered=True)
    assert np.linalg.norm(staggered, axis=1).max() <= 0.5 + 1e-12
    assert not np.array_equal(sample, staggered)
    assert radial_sample(1, 1.0, 100).shape[1] == 1
