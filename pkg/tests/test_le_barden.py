import numpy as np
import pytest

from src.algorithm.frechet.le_barden import find_le_barden_example, scan_medians, weight_simplex
from src.algorithm.frechet.problem import FrechetProblem, frechet_value, one_sided_derivative
from src.algorithm.frechet.solver import p_mean
from src.algorithm.geometry.models import Circle
from src.algorithm.measures.atom_measure import make_measure
from src.utils.errors import InvalidInputError, SearchBudgetExhaustedError

# F^(1) is flat on [0, pi/4]: D_0 F(+1) = 0.5 - 0.1 - 0.1 - 0.3 = 0
TIED_ATOMS = [0.0, np.pi, np.pi / 4, np.pi / 2]
TIED_WEIGHTS = [0.5, 0.1, 0.1, 0.3]


def test_scan_medians_finds_the_heavy_atom():
    scan = Circle().grid(720).points[:, 0]
    minimizers, spreads = scan_medians(np.array([0.0, np.pi / 2]), np.array([[0.7, 0.3], [0.3, 0.7]]), scan)
    assert scan[minimizers[0]] == pytest.approx(0.0)
    assert scan[minimizers[1]] == pytest.approx(np.pi / 2)
    assert spreads.tolist() == [0, 0]


def test_scan_medians_reports_a_flat_arc():
    scan = Circle().grid(2000).points[:, 0]
    minimizers, spreads = scan_medians(np.array(TIED_ATOMS), np.array([TIED_WEIGHTS]), scan)
    assert minimizers[0] == 0
    assert spreads[0] >= 200


def test_weight_simplex():
    table = weight_simplex(4, 0.1)
    assert table.shape == (84, 4)
    assert np.allclose(table.sum(axis=1), 1)
    assert np.all(table > 0)


def test_search_finds_a_flagged_median():
    measure, result = find_le_barden_example(resolution=2000)
    circle = Circle()
    assert result.le_barden
    assert circle.distance(result.mean, [0.0]) <= 1e-9
    assert result.atom_at_mean_mass > 0
    assert result.exact_cut_mass > 0
    assert np.pi in measure.atoms[:, 0]


def test_flagged_median_is_a_strict_minimum():
    measure, result = find_le_barden_example(resolution=2000)
    prob = FrechetProblem(measure.manifold, measure, 1.0)
    assert result.atom_margin > 0
    for side in (1.0, -1.0):
        assert one_sided_derivative(prob, result.mean, [side], allow_atoms=True) > 0
        for step in (1e-3, 1e-2, 0.1):
            assert frechet_value(prob, result.mean + side * step) > result.value + 1e-6


def test_tied_median_is_not_flagged(circle):
    prob = FrechetProblem(circle, make_measure(circle, TIED_ATOMS, TIED_WEIGHTS), 1.0)
    result = p_mean(prob, [0.0])
    assert circle.distance(result.mean, [0.0]) <= 1e-12
    assert result.exact_cut_mass == pytest.approx(0.1)
    assert result.atom_margin == pytest.approx(0.0, abs=1e-12)
    assert not result.le_barden
    assert frechet_value(prob, [np.pi / 8]) == pytest.approx(result.value, abs=1e-12)


def test_search_budget():
    with pytest.raises(SearchBudgetExhaustedError):
        find_le_barden_example(resolution=200, max_candidates=0)
    with pytest.raises(InvalidInputError):
        find_le_barden_example(resolution=50)
