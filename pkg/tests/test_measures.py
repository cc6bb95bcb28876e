import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.algorithm.geometry.models import Circle
from src.algorithm.measures.atom_measure import (
    check_weights, dirac, dyadic_dirac_measure, make_measure, moment,
)
from src.algorithm.measures.sampler import SamplerKind, SamplerSpec, sample_measure
from src.utils.errors import InvalidInputError
from src.utils.serialization import (
    json_serializer, manifold_from_json, measure_from_json, measure_to_json, point_from_json, point_to_json,
)


def test_make_measure_normalizes_and_merges(circle):
    measure = make_measure(circle, [0.5, 0.5, 1.0, 2.0], [1.0, 1.0, 2.0, 0.0])
    assert len(measure) == 2
    assert measure.atoms[:, 0].tolist() == pytest.approx([0.5, 1.0])
    assert measure.weights.tolist() == [0.5, 0.5]


def test_make_measure_merges_canonical_duplicates(circle):
    measure = make_measure(circle, [np.pi, -np.pi])
    assert len(measure) == 1
    assert measure.weights[0] == 1.0


@pytest.mark.parametrize("atoms, weights", [
    ([], None),
    ([0.0, 1.0], [1.0]),
    ([0.0, 1.0], [1.0, -0.5]),
    ([0.0, 1.0], [0.0, 0.0]),
    ([0.0, 1.0], [1.0, np.nan]),
])
def test_make_measure_rejects_bad_input(circle, atoms, weights):
    with pytest.raises(InvalidInputError):
        make_measure(circle, atoms, weights)


def test_measures_are_immutable(sphere):
    measure = dirac(sphere, [0, 0, 1])
    with pytest.raises(ValueError):
        measure.weights[0] = 0.5


def test_dyadic_weights(circle):
    two = dyadic_dirac_measure(circle, 2)
    assert two.weights.tolist() == pytest.approx([2 / 3, 1 / 3])
    twelve = dyadic_dirac_measure(circle, 12)
    assert np.all(twelve.weights[1:] / twelve.weights[:-1] == 0.5)
    assert twelve.weights.sum() == pytest.approx(1, abs=1e-15)
    with pytest.raises(InvalidInputError):
        dyadic_dirac_measure(circle, 0)


def test_moment(sphere):
    measure = make_measure(sphere, [[0, 0, 1], [1, 0, 0]])
    assert moment(measure, [0, 0, 1], 2) == pytest.approx(0.5 * (np.pi / 2) ** 2)
    assert moment(measure, [0, 0, 1], 1) == pytest.approx(np.pi / 4)
    with pytest.raises(InvalidInputError):
        moment(measure, [0, 0, 1], 0.5)


@given(st.floats(-np.pi, np.pi), st.floats(-np.pi, np.pi))
@settings(max_examples=200)
def test_first_moment_is_lipschitz(q, r):
    circle = Circle()
    measure = make_measure(circle, [-2.0, -0.3, 0.4, 2.5], [0.1, 0.2, 0.3, 0.4])
    assert abs(moment(measure, [q], 1) - moment(measure, [r], 1)) <= circle.distance([q], [r]) + 1e-12


def test_restrict(circle):
    measure = make_measure(circle, [0.0, 1.0, 2.0], [0.5, 0.3, 0.2])
    mask = np.array([False, True, True])
    assert measure.restrict(mask).weights.sum() == pytest.approx(0.5)
    assert measure.restrict(mask, renormalize=True).weights.tolist() == pytest.approx([0.6, 0.4])
    assert measure.mass(mask) == pytest.approx(0.5)


def test_check_weights():
    assert check_weights([0.25, 0.75], auto_fix=False).tolist() == [0.25, 0.75]
    with pytest.raises(InvalidInputError):
        check_weights([1.0, 1.0], auto_fix=False)
    with pytest.warns(UserWarning):
        check_weights([1.0, 1.0], auto_fix=True)


def test_measure_json(sphere):
    measure = make_measure(sphere, [[0, 0, 1], [1, 0, 0]], [0.25, 0.75])
    data = measure_to_json(measure)
    assert measure_from_json(data).weights.tolist() == [0.25, 0.75]

    data["weights"] = [1.0, 3.0]
    with pytest.raises(InvalidInputError):
        measure_from_json(data)
    with pytest.warns(UserWarning):
        assert measure_from_json(data, auto_fix=True).weights.tolist() == [0.25, 0.75]


def test_tagged_points_survive_json(manifold, rng):
    points = manifold.points(rng.uniform(-4, 4, (5, manifold.ambient_dim)))
    for q in points:
        loaded, coordinates = point_from_json(json.loads(json.dumps(point_to_json(manifold, q))))
        assert loaded == manifold
        assert manifold.distance(coordinates, q) <= 1e-12
    with pytest.raises(InvalidInputError):
        manifold_from_json({"dim": 2})


def test_measures_survive_json(manifold, rng):
    atoms = manifold.points(rng.uniform(-4, 4, (6, manifold.ambient_dim)))
    measure = make_measure(manifold, atoms, rng.uniform(0.5, 1.5, 6))
    loaded = measure_from_json(json.loads(json.dumps(measure_to_json(measure), default=json_serializer)))
    assert loaded.manifold == measure.manifold
    assert np.allclose(loaded.atoms, measure.atoms, rtol=0, atol=1e-12)
    assert np.allclose(loaded.weights, measure.weights, rtol=0, atol=1e-15)


def test_samplers_are_deterministic(torus):
    spec = SamplerSpec(SamplerKind.WRAPPED_GAUSSIAN, seed=3, count=500, sigma=0.5)
    assert np.array_equal(sample_measure(spec, torus).atoms, sample_measure(spec, torus).atoms)
    other = SamplerSpec(SamplerKind.WRAPPED_GAUSSIAN, seed=4, count=500, sigma=0.5)
    assert not np.array_equal(sample_measure(spec, torus).atoms, sample_measure(other, torus).atoms)


def test_equator_sampler(sphere):
    measure = sample_measure(SamplerSpec(SamplerKind.EQUATOR, seed=0, count=100), sphere)
    assert len(measure) == 100
    assert np.all(measure.atoms[:, 2] == 0)
    assert np.linalg.norm(measure.weights @ measure.atoms) < 1e-12


def test_wrapped_gaussian_on_sphere_stays_inside_the_cut_locus(sphere):
    spec = SamplerSpec(SamplerKind.WRAPPED_GAUSSIAN, seed=1, count=2000, sigma=2.0)
    measure = sample_measure(spec, sphere)
    assert np.allclose(np.linalg.norm(measure.atoms, axis=1), 1)
    assert len(measure) == 2000


def test_sampler_errors(circle, sphere):
    with pytest.raises(InvalidInputError):
        sample_measure(SamplerSpec(SamplerKind.EQUATOR, seed=0, count=10), circle)
    with pytest.raises(InvalidInputError):
        SamplerSpec(SamplerKind.WRAPPED_GAUSSIAN, seed=None, count=10)
    with pytest.raises(InvalidInputError):
        SamplerSpec(SamplerKind.WRAPPED_GAUSSIAN, seed=0, count=0)
    with pytest.raises(ValueError):
        SamplerSpec("lattice", seed=0, count=10)


def test_uniform_grid_sampler(circle):
    measure = sample_measure(SamplerSpec(SamplerKind.UNIFORM_GRID, seed=0, count=8), circle)
    assert len(measure) == 8
    assert np.allclose(measure.weights, 1 / 8)
