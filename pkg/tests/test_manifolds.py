import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.algorithm.geometry.models import Circle, FlatTorus, Sphere, make_manifold
from src.algorithm.geometry.sequences import unit_directions
from src.utils.errors import InvalidInputError, ResourceError

angles = st.floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False)


def test_circle_canonical_form(circle):
    assert circle.point([-np.pi])[0] == np.pi
    assert circle.point([3 * np.pi])[0] == pytest.approx(np.pi)
    assert circle.point([0.5 - 2 * np.pi])[0] == pytest.approx(0.5)


def test_torus_canonical_form(torus):
    point = torus.point([2 * np.pi, -0.5])
    assert point[0] == 0.0
    assert point[1] == pytest.approx(2 * np.pi - 0.5)


def test_sphere_points_are_renormalized(sphere):
    assert np.linalg.norm(sphere.point([0, 3, 4])) == pytest.approx(1, abs=1e-12)
    with pytest.raises(InvalidInputError):
        sphere.point([0, 0, 0])


def test_distance_examples(circle, sphere, torus):
    assert circle.distance([-3.0], [3.0]) == pytest.approx(2 * np.pi - 6)
    assert circle.distance([0.0], [np.pi]) == pytest.approx(np.pi)
    assert sphere.distance([0, 0, 1], [0, 0, -1]) == pytest.approx(np.pi)
    assert sphere.distance([0, 0, 1], [1, 0, 0]) == pytest.approx(np.pi / 2)
    assert torus.distance([0.1, 0.1], [2 * np.pi - 0.1, 0.1]) == pytest.approx(0.2)


def test_metric_data(circle, sphere, torus):
    assert circle.injectivity_radius == pytest.approx(np.pi)
    assert sphere.diameter == pytest.approx(np.pi)
    assert torus.injectivity_radius == pytest.approx(np.pi)
    assert torus.diameter == pytest.approx(np.pi * np.sqrt(2))
    assert FlatTorus(2, [1.0, 4.0]).injectivity_radius == pytest.approx(0.5)


@given(angles, angles, angles)
@settings(max_examples=300)
def test_circle_metric_axioms(a, b, c):
    circle = Circle()
    ab, bc, ac = circle.distance([a], [b]), circle.distance([b], [c]), circle.distance([a], [c])
    assert ab == pytest.approx(circle.distance([b], [a]), abs=1e-12)
    assert 0 <= ab <= np.pi + 1e-12
    assert ac <= ab + bc + 1e-12


@given(angles, angles)
@settings(max_examples=300)
def test_one_dimensional_models_agree(a, b):
    on_sphere = np.array([[np.cos(a), np.sin(a)], [np.cos(b), np.sin(b)]])
    expected = Circle().distance([a], [b])
    assert Sphere(1).distance(*on_sphere) == pytest.approx(expected, abs=1e-9)
    assert FlatTorus(1).distance([a], [b]) == pytest.approx(expected, abs=1e-9)


def test_exp_inverts_log(manifold, rng):
    for q, x in rng.standard_normal((50, 2, manifold.ambient_dim)):
        for v in manifold.log_set(q, x):
            assert v.norm == pytest.approx(manifold.distance(q, x), abs=1e-9)
            assert manifold.distance(manifold.exp_map(q, v), x) <= 1e-9


def test_log_set_at_cut_points(circle, sphere, torus):
    assert sorted(v.components[0] for v in circle.log_set([0.0], [np.pi])) == pytest.approx([-np.pi, np.pi])

    antipodal = sphere.log_set([0, 0, 1], [0, 0, -1])
    assert antipodal.continuum
    assert len(antipodal) == 4
    assert all(v.norm == pytest.approx(np.pi) for v in antipodal)

    assert len(torus.log_set([0, 0], [np.pi, np.pi])) == 4
    assert len(torus.log_set([0, 0], [np.pi, 0.3])) == 2
    assert len(torus.log_set([0, 0], [1.0, 0.3])) == 1


def test_cut_locus_predicates(sphere, torus):
    assert torus.cut_locus_distance([0, 0], [1.0, 0.0]) == pytest.approx(np.pi - 1)
    assert torus.cut_locus_distance([0, 0], [np.pi, 0.3]) == 0
    assert torus.in_cut_locus_plus([0, 0], [np.pi, 0.3])
    assert not torus.in_cut_locus_plus([0, 0], [np.pi - 1e-3, 0.3])
    assert sphere.cut_locus_distance([0, 0, 1], [1, 0, 0]) == pytest.approx(np.pi / 2)
    assert sphere.in_cut_locus_plus([0, 0, 1], [0, 0, -1])
    with pytest.raises(InvalidInputError):
        sphere.in_cut_locus_plus([0, 0, 1], [0, 0, -1], tol=0)


def test_cut_points_lie_on_the_cut_locus(manifold, rng):
    x = manifold.dense_sequence(3)[2]
    for q in manifold.cut_points(x, 6):
        assert manifold.cut_locus_distance(q, x) <= 1e-12
        assert manifold.in_cut_locus_plus(q, x)


def test_grids(circle, sphere):
    grid = circle.grid(720)
    assert len(grid) == 720
    assert grid.covering_radius == pytest.approx(np.pi / 720)

    grid = sphere.grid(40)
    assert len(grid) == 1600
    assert np.allclose(np.linalg.norm(grid.points, axis=1), 1)
    assert 0 < grid.covering_radius < 0.1


def test_grid_limits():
    with pytest.raises(ResourceError):
        FlatTorus(3).grid(200)
    with pytest.raises(InvalidInputError):
        Circle().grid(1)


def test_shape_errors(circle, sphere):
    with pytest.raises(InvalidInputError):
        circle.point([0.0, 1.0])
    with pytest.raises(InvalidInputError):
        sphere.tangent([0, 0, 1], [1.0, 0.0, 0.0])
    with pytest.raises(InvalidInputError):
        sphere.exp_map([1, 0, 0], sphere.tangent([0, 0, 1], [0.1, 0.0]))


def test_make_manifold():
    assert make_manifold("torus", 2) == FlatTorus(2)
    assert make_manifold("sphere", 3) == Sphere(3)
    assert make_manifold("circle") == Circle()
    assert FlatTorus(2) != FlatTorus(2, [1.0, 2.0])
    with pytest.raises(InvalidInputError):
        make_manifold("klein_bottle", 2)
    with pytest.raises(InvalidInputError):
        FlatTorus(2, [1.0, -1.0])


def test_unit_directions():
    directions = unit_directions(32, 3)
    assert directions.shape == (32, 3)
    assert np.allclose(np.linalg.norm(directions, axis=1), 1)
