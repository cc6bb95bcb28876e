from pathlib import Path

import pytest

from src.utils.errors import ConfigError, InvalidInputError
from src.utils.load_config import THREADS_ENV, Config

OVERLAYS = sorted((Path(__file__).parent.parent / "src" / "configs" / "scenarios").glob("*.yaml"))


def test_defaults():
    config = Config()
    assert config is Config()
    assert config.manifold.KIND == "circle"
    assert config.scenario.SCENARIO == "mean"
    assert config.run.THREADS == 1
    assert config.build_solver_params().cut_mass_epsilons == (0.025, 0.05, 0.1, 0.2)
    assert config.build_schedule().as_array()[0] == 1e-2
    assert config.init_point(config.build_manifold()) is None


@pytest.mark.parametrize("overlay", [
    {"plot": {"SHOW": True}},
    {"solver": {"STEPSIZE": 0.5}},
    {"scenario": {"SCENARIO": "gillespie"}},
    {"manifold": {"KIND": "klein_bottle"}},
    {"manifold": {"DIM": 0}},
    {"measure": {"SOURCE": "file"}},
    {"measure": {"SOURCE": "sampler", "SAMPLER_KIND": "lattice"}},
    {"solver": {"EXPONENT": 0.5}},
    {"solver": {"CUT_MASS_EPSILONS": []}},
    {"probe": {"BARRIER_TARGETS": [-10.0, -1.0]}},
    {"probe": {"EXTRAPOLATION": "aitken"}},
    {"probe": {"BARRIER_RADIUS": 0.0}},
    {"probe": {"BARRIER_TARGETS": []}},
    {"run": {"THREADS": 0}},
    {"scenario": {"LE_BARDEN_RESOLUTION": 10}},
    {"solver": 3},
])
def test_invalid_overlays(overlay):
    with pytest.raises(ConfigError):
        Config.load(overlay)


def test_threads_from_environment(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "4")
    config = Config.load()
    assert config.run.THREADS == 4
    assert config.build_solver_params().threads == 4

    monkeypatch.setenv(THREADS_ENV, "four")
    with pytest.raises(ConfigError):
        Config.load()


def test_unnormalized_weights():
    config = Config.load({"measure": {"WEIGHTS": [1.0, 3.0]}})
    with pytest.raises(InvalidInputError, match=r"sum to 4\.0, not 1") as raised:
        config.build_measure(config.build_manifold())
    assert "np.float64" not in str(raised.value)

    config = Config.load({"measure": {"WEIGHTS": [1.0, 3.0], "AUTO_FIX": True}})
    with pytest.warns(UserWarning):
        measure = config.build_measure(config.build_manifold())
    assert measure.weights.tolist() == [0.25, 0.75]


def test_tagged_init_point():
    tagged = {"manifold": {"kind": "circle", "dim": 1}, "coordinates": [0.5]}
    config = Config.load({"solver": {"INIT": tagged}})
    assert config.init_point(config.build_manifold()).tolist() == [0.5]
    assert Config.load({"solver": {"INIT": [0.5]}}).init_point(config.build_manifold()).tolist() == [0.5]

    config = Config.load({"solver": {"INIT": {"manifold": {"kind": "sphere", "dim": 2}, "coordinates": [0, 0, 1]}}})
    with pytest.raises(ConfigError, match="INIT"):
        config.init_point(config.build_manifold())
    config = Config.load({"solver": {"INIT": {"coordinates": [0.5]}}})
    with pytest.raises(ConfigError, match="INIT"):
        config.init_point(config.build_manifold())


def test_sampler_measure_uses_the_run_seed():
    overlay = {"measure": {"SOURCE": "sampler", "COUNT": 50}, "run": {"SEED": 7}}
    first = Config.load(overlay)
    atoms = first.build_measure(first.build_manifold()).atoms
    second = Config.load(overlay)
    assert (second.build_measure(second.build_manifold()).atoms == atoms).all()


@pytest.mark.parametrize("path", OVERLAYS, ids=lambda path: path.stem)
def test_scenario_overlays_load(path):
    config = Config.load(path)
    config.build_measure(config.build_manifold())


def test_read_overlay(tmp_path):
    with pytest.raises(ConfigError):
        Config.read_overlay(tmp_path / "missing.yaml")

    listed = tmp_path / "listed.yaml"
    listed.write_text("- manifold\n- measure\n")
    with pytest.raises(ConfigError):
        Config.read_overlay(listed)

    empty = tmp_path / "empty.yaml"
    empty.write_text("")
    assert Config.read_overlay(empty) == {}
