import json

import numpy as np
import pytest

from src.algorithm.frechet.problem import FrechetProblem
from src.algorithm.frechet.solver import SolverParams, brute_force_mean
from src.algorithm.geometry.models import FlatTorus
from src.algorithm.measures.sampler import SamplerKind, SamplerSpec, sample_measure
from src.experiments.scenario_builder import difference_anchors, difference_minimizers
from src.experiments.scenarios import SCENARIOS, run_scenario
from src.utils.errors import ConfigError
from src.utils.load_config import SCENARIO_NAMES, Config
from src.utils.serialization import json_serializer


def run(overlay: dict):
    return run_scenario(Config.load(overlay))


def test_every_scenario_is_registered():
    assert set(SCENARIOS) == set(SCENARIO_NAMES)


def test_mean_on_the_circle():
    record = run({"scenario": {"SCENARIO": "mean"}})
    assert record.passed and record.exit_code == 0
    assert record.payload["near_tie_count"] == 2
    assert record.payload["result"]["value"] == pytest.approx(np.pi ** 2 / 4, abs=1e-9)
    assert record.payload["linearity_gap"] < 1e-5
    assert record.wall_time > 0
    assert {"mean", "oracle", "probes"} <= set(record.timings)
    assert record.timings["mean"] <= record.wall_time
    assert sum(time for label, time in record.timings.items() if label != "mean") <= record.timings["mean"]


def test_mean_payload_is_deterministic():
    overlay = {"scenario": {"SCENARIO": "mean"}, "manifold": {"KIND": "flat_torus", "DIM": 2},
               "measure": {"SOURCE": "sampler", "COUNT": 200, "SIGMA": 0.5}}
    first, second = run(overlay), run(overlay)
    assert first.config_hash == second.config_hash
    assert (json.dumps(first.payload, default=json_serializer)
            == json.dumps(second.payload, default=json_serializer))


def test_cut_mass_on_the_sphere():
    record = run({"scenario": {"SCENARIO": "cut-mass"}, "manifold": {"KIND": "sphere", "DIM": 2},
                  "measure": {"SOURCE": "sampler", "COUNT": 500, "SIGMA": 0.3}})
    assert record.passed
    assert [row["mass"] for row in record.payload["cut_mass_profile"]] == [0.0] * 5
    curve = record.curves[0]
    assert curve.name == "cut_mass" and len(curve.rows) == 5
    assert len(record.payload["difference_indices"]) == 5
    assert record.payload["mean"]["manifold"] == {"kind": "sphere", "dim": 2}


def test_difference_minimizers_agree_for_every_anchor():
    torus = FlatTorus(2)
    prob = FrechetProblem(torus, sample_measure(SamplerSpec(SamplerKind.WRAPPED_GAUSSIAN, 1, 200, sigma=0.5), torus))
    anchors = difference_anchors(torus, 5)
    assert anchors.shape == (5, 2)
    assert np.array_equal(anchors, difference_anchors(torus, 5))
    assert not np.array_equal(anchors, difference_anchors(torus, 6))

    params = SolverParams()
    oracle = brute_force_mean(prob, 64, params)
    checks = difference_minimizers(prob, 64, params, anchors)
    assert len(checks) == 5
    assert all(check.same_grid_point for check in checks)
    assert all(check.refined.value == pytest.approx(oracle.value, abs=1e-8) for check in checks)


def test_circle_barrier():
    record = run({"scenario": {"SCENARIO": "circle-barrier",
                               "CIRCLE_BARRIER_TARGETS": [-1 / np.pi, -1.0, -10.0, -100.0]}})
    assert record.passed
    assert [row["trace"] for row in record.payload["explicit"]] == pytest.approx([-2 / np.pi, -2, -20, -200])
    assert len(record.payload["searched"]) == 3
    profile = record.payload["profile"]
    assert [row["target"] for row in profile] == [-1.0, -10.0, -100.0, -1000.0]
    assert all(row["success"] for row in profile)
    # trace -2 / r at the antipode
    assert 0 < profile[-1]["best_radius"] <= 1 / 256
    assert [curve.name for curve in record.curves] == ["circle_barrier", "barrier_profile"]


@pytest.mark.parametrize("overlay", [
    {"scenario": {"SCENARIO": "circle-barrier", "CIRCLE_BARRIER_TARGETS": [1.0]}},
    {"scenario": {"SCENARIO": "circle-barrier"}, "manifold": {"KIND": "sphere", "DIM": 2}},
])
def test_circle_barrier_rejects_bad_configs(overlay):
    with pytest.raises(ConfigError):
        run(overlay)


def test_nowhere_smooth_on_the_circle():
    record = run({"scenario": {"SCENARIO": "nowhere-smooth"}, "measure": {"SOURCE": "dyadic", "DYADIC_J": 12}})
    assert record.passed
    gaps = record.payload["gaps"]
    assert len(gaps) == 12
    assert gaps[0]["gap"] == pytest.approx(gaps[0]["expected"], rel=0.05)
    assert all(row["gap"] > 0 for row in gaps)


def test_sticky_torus_mean():
    record = run({"scenario": {"SCENARIO": "sticky"}, "manifold": {"KIND": "flat_torus", "DIM": 2},
                  "measure": {"SOURCE": "sampler", "COUNT": 300, "SIGMA": 0.5}})
    assert record.passed
    assert record.payload["verdict"] == "nonsticky"


def test_pmean_median():
    record = run({"scenario": {"SCENARIO": "pmean"}, "solver": {"EXPONENT": 1.0},
                  "measure": {"ATOMS": [-0.5, 0.0, 0.5], "WEIGHTS": None}})
    assert record.passed
    assert record.payload["result"]["atom_at_mean_mass"] == pytest.approx(1 / 3)
    assert not record.payload["le_barden"]


def test_le_barden_search():
    record = run({"scenario": {"SCENARIO": "le-barden", "LE_BARDEN_RESOLUTION": 2000}})
    assert record.passed
    assert record.payload["found"]
    assert record.payload["result"]["exact_cut_mass"] > 0
    assert record.payload["result"]["atom_margin"] > 0


@pytest.mark.slow
def test_lemma_suite_passes():
    record = run({"scenario": {"SCENARIO": "lemma-suite"}, "run": {"SEED": 0}})
    assert record.payload["failed_citations"] == []
    assert record.passed
