import os
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from src.algorithm.frechet.solver import SolverParams
from src.algorithm.geometry.manifold import ManifoldModel
from src.algorithm.geometry.models import make_manifold
from src.algorithm.measures.atom_measure import AtomMeasure, check_weights, dyadic_dirac_measure, make_measure
from src.algorithm.measures.sampler import SamplerKind, SamplerSpec, sample_measure
from src.algorithm.probes.fields import Extrapolation, StepSchedule
from src.utils.errors import ConfigError, InvalidInputError
from src.utils.serialization import manifold_to_json, point_from_json

THREADS_ENV: str = "FRECHET_LAB_THREADS"

SCENARIO_NAMES: tuple[str, ...] = (
    "mean", "cut-mass", "circle-barrier", "nowhere-smooth", "sticky", "pmean", "le-barden", "lemma-suite",
)


def config_error(section: str, key: str, message: str, tip: str) -> ConfigError:
    return ConfigError(f"[{section}] {key}: {message}\n[Tip] {tip}")


@dataclass
class RunConfig:
    RUN_NAME: str           # Run directory name, empty for no run directory
    OUTPUT_DIR: str         # Parent directory of the run directories
    SEED: int | None        # Seed for samplers and seeded checks
    THREADS: int            # Worker threads for grid evaluation

    def normalize(self):
        threads = os.environ.get(THREADS_ENV)
        if threads is not None:
            try:
                self.THREADS = int(threads)
            except ValueError:
                raise config_error("run", "THREADS", f"{THREADS_ENV}={threads!r} is not an integer.",
                                   f"Unset {THREADS_ENV} or give a positive integer.")

    def validate(self):
        if self.THREADS < 1:
            raise config_error("run", "THREADS", f"must be at least 1, got {self.THREADS}.",
                               "Use 1 for sequential evaluation.")


@dataclass
class ManifoldConfig:
    KIND: str                       # circle, sphere or flat_torus
    DIM: int                        # Intrinsic dimension
    PERIODS: list[float] | float | None = None  # Flat torus periods, 2 pi when omitted

    def validate(self):
        if self.KIND not in ("circle", "sphere", "flat_torus", "torus"):
            raise config_error("manifold", "KIND", f"unknown manifold {self.KIND!r}.",
                               "Use circle, sphere or flat_torus.")
        if int(self.DIM) < 1:
            raise config_error("manifold", "DIM", f"must be at least 1, got {self.DIM}.", "Set DIM >= 1.")

    def build(self) -> ManifoldModel:
        return make_manifold(self.KIND, int(self.DIM), self.PERIODS)


@dataclass
class MeasureConfig:
    SOURCE: str                     # atoms, sampler or dyadic
    ATOMS: list | None              # Inline atom coordinates
    WEIGHTS: list[float] | None     # Inline weights, uniform when omitted
    AUTO_FIX: bool                  # Normalize unnormalized weights with a warning
    SAMPLER_KIND: str               # uniform_grid, equator or wrapped_gaussian
    COUNT: int                      # Number of sampled atoms
    CENTER: list[float] | None      # Wrapped Gaussian center
    SIGMA: float                    # Wrapped Gaussian spread
    DYADIC_J: int                   # Number of atoms of the dyadic Dirac measure

    def validate(self):
        if self.SOURCE not in ("atoms", "sampler", "dyadic"):
            raise config_error("measure", "SOURCE", f"unknown measure source {self.SOURCE!r}.",
                               "Use atoms, sampler or dyadic.")
        if self.SOURCE == "atoms" and not self.ATOMS:
            raise config_error("measure", "ATOMS", "an atom measure needs at least one atom.",
                               "List atom coordinates under ATOMS.")
        if self.SOURCE == "sampler":
            try:
                SamplerKind(self.SAMPLER_KIND)
            except ValueError:
                raise config_error("measure", "SAMPLER_KIND", f"unknown sampler {self.SAMPLER_KIND!r}.",
                                   "Use uniform_grid, equator or wrapped_gaussian.")
        if self.SOURCE == "dyadic" and self.DYADIC_J < 1:
            raise config_error("measure", "DYADIC_J", f"must be at least 1, got {self.DYADIC_J}.",
                               "Set DYADIC_J >= 1.")

    def build(self, manifold: ManifoldModel, seed: int | None) -> AtomMeasure:
        if self.SOURCE == "dyadic":
            return dyadic_dirac_measure(manifold, int(self.DYADIC_J))
        if self.SOURCE == "sampler":
            center = None if self.CENTER is None else tuple(self.CENTER)
            spec = SamplerSpec(SamplerKind(self.SAMPLER_KIND), seed, int(self.COUNT), center, float(self.SIGMA))
            return sample_measure(spec, manifold)
        weights = None if self.WEIGHTS is None else check_weights(self.WEIGHTS, self.AUTO_FIX)
        return make_measure(manifold, self.ATOMS, weights)


@dataclass
class SolverConfig:
    EXPONENT: float                     # Fréchet exponent p >= 1
    STEP_SIZE: float                    # Descent step tau in (0, 1]
    MAX_ITERATIONS: int
    GRAD_TOLERANCE: float
    RESTART_COUNT: int                  # Extra descent starts from the dense sequence
    TIE_BREAK_SEED: int | None          # Random preimage selection, lexicographic when None
    ORACLE_RESOLUTION: int | None       # Grid resolution of the brute-force oracle, per-manifold when None
    CUT_MASS_EPSILONS: list[float]
    CUT_TOLERANCE: float                # Cut-locus membership tolerance
    INIT: list[float] | float | dict | None = None  # Descent start or tagged point, oracle minimum when None

    def validate(self):
        if self.EXPONENT < 1:
            raise config_error("solver", "EXPONENT", f"must be at least 1, got {self.EXPONENT}.",
                               "Use 2 for Fréchet means, 1 for medians.")
        if self.ORACLE_RESOLUTION is not None and self.ORACLE_RESOLUTION < 2:
            raise config_error("solver", "ORACLE_RESOLUTION", f"must be at least 2, got {self.ORACLE_RESOLUTION}.",
                               "Use e.g. 720 on the circle, 40 on spheres.")
        if not self.CUT_MASS_EPSILONS or min(self.CUT_MASS_EPSILONS) <= 0:
            raise config_error("solver", "CUT_MASS_EPSILONS", "needs positive values.",
                               "Use e.g. [0.025, 0.05, 0.1, 0.2].")

    def build(self, threads: int = 1) -> SolverParams:
        return SolverParams(
            step_size=float(self.STEP_SIZE),
            max_iterations=int(self.MAX_ITERATIONS),
            grad_tolerance=float(self.GRAD_TOLERANCE),
            restart_count=int(self.RESTART_COUNT),
            tie_break_seed=self.TIE_BREAK_SEED,
            cut_tolerance=float(self.CUT_TOLERANCE),
            cut_mass_epsilons=tuple(float(epsilon) for epsilon in self.CUT_MASS_EPSILONS),
            threads=threads,
        )


@dataclass
class ProbeConfig:
    INITIAL_STEP: float                 # First difference-quotient step t_0
    STEP_COUNT: int                     # Steps t_k = 2^-k t_0, k < STEP_COUNT
    EXTRAPOLATION: str                  # none or richardson
    RESIDUAL_TOLERANCE: float           # Extrapolation residual above which a probe is Noisy
    DIRECTION_COUNT: int | None         # Directions of the linearity gap, max(2 dim, 32) when None
    LINEARITY_TOLERANCE: float          # Largest linearity gap still counted as linear
    BARRIER_TARGETS: list[float]        # Decreasing Laplacian targets C
    BARRIER_RADIUS: float               # Initial barrier radius
    BARRIER_HALVINGS: int               # Radius halvings of the divergence profile
    SAMPLE_SIZE: int | None             # Barrier sample size, 400 dim when None
    SEMICONCAVITY_STEP: float           # Second-difference step h
    TOLERANCE_SCALE: float              # Multiplies every probe tolerance

    def validate(self):
        try:
            Extrapolation(self.EXTRAPOLATION)
        except ValueError:
            raise config_error("probe", "EXTRAPOLATION", f"unknown extrapolation {self.EXTRAPOLATION!r}.",
                               "Use none or richardson.")
        targets = [float(target) for target in self.BARRIER_TARGETS]
        if any(later >= earlier for earlier, later in zip(targets, targets[1:])):
            raise config_error("probe", "BARRIER_TARGETS", f"must be strictly decreasing, got {targets}.",
                               "Sort targets from largest to smallest, e.g. [-1, -10, -100].")
        if not targets or self.BARRIER_RADIUS <= 0 or self.BARRIER_HALVINGS < 0:
            raise config_error("probe", "BARRIER_RADIUS",
                               "needs targets, a positive BARRIER_RADIUS and BARRIER_HALVINGS >= 0.",
                               "Use e.g. BARRIER_RADIUS 1.0 with BARRIER_HALVINGS 12.")
        if self.TOLERANCE_SCALE <= 0 or self.INITIAL_STEP <= 0 or self.STEP_COUNT < 1:
            raise config_error("probe", "TOLERANCE_SCALE",
                               "TOLERANCE_SCALE and INITIAL_STEP must be positive, STEP_COUNT >= 1.",
                               "Check the probe section of the config.")

    def build(self) -> StepSchedule:
        return StepSchedule.geometric(float(self.INITIAL_STEP), int(self.STEP_COUNT),
                                      Extrapolation(self.EXTRAPOLATION))


@dataclass
class ScenarioConfig:
    SCENARIO: str
    CIRCLE_BARRIER_TARGETS: list[float]     # Targets C of the explicit circle barrier
    LE_BARDEN_RESOLUTION: int               # Scan points of the four-atom median search
    CUT_RATIO_BOUND: float                  # Bound on mass(eps) / eps
    NOWHERE_SMOOTH_SLACK: float             # Relative slack of the nowhere-smooth gap bound
    STICKY_DIRECTIONS: int                  # Directions probed by the stickiness scenario
    DECAY_RATIO_RANGE: list[float] = field(default_factory=lambda: [0.45, 0.55])

    def validate(self):
        if self.SCENARIO not in SCENARIO_NAMES:
            raise config_error("scenario", "SCENARIO", f"unknown scenario {self.SCENARIO!r}.",
                               f"Use one of {', '.join(SCENARIO_NAMES)}.")
        if self.LE_BARDEN_RESOLUTION < 100:
            raise config_error("scenario", "LE_BARDEN_RESOLUTION",
                               f"must be at least 100, got {self.LE_BARDEN_RESOLUTION}.", "Use 10000.")


@dataclass
class LoggerConfig:
    VERBOSE: bool           # Print bracketed progress tags
    LOG_INTERVAL: int       # Descent iterations between captured states, 0 to disable


SECTIONS: dict[str, tuple[str, type]] = {
    "run": ("run_config.yaml", RunConfig),
    "manifold": ("manifold_config.yaml", ManifoldConfig),
    "measure": ("measure_config.yaml", MeasureConfig),
    "solver": ("solver_config.yaml", SolverConfig),
    "probe": ("probe_config.yaml", ProbeConfig),
    "scenario": ("scenario_config.yaml", ScenarioConfig),
    "logger": ("logger_config.yaml", LoggerConfig),
}


class Config:
    """
    Central config class.
    Is a singleton, recalling the class will reference the first instance.
    Use ``Config.load`` to replace the instance with defaults overlaid by a user file or dict.
    """
    _instance: "Config" = None
    config_path: Path = Path(__file__).resolve().parent.parent / "configs"

    def __new__(cls, user_config: Path | str | dict | None = None):
        if cls._instance is None:
            instance = super().__new__(cls)
            instance._init_configs(cls.read_overlay(user_config))
            cls._instance = instance
        return cls._instance

    @classmethod
    def load(cls, user_config: Path | str | dict | None = None) -> "Config":
        cls.reset()
        return cls(user_config)

    @classmethod
    def reset(cls):
        cls._instance = None

    def _init_configs(self, overlay: dict):
        unknown = set(overlay) - set(SECTIONS)
        if unknown:
            raise ConfigError(f"Unknown config sections: {sorted(unknown)}.\n"
                              f"[Tip] Top-level keys are {', '.join(SECTIONS)}.")

        self.run: RunConfig = self._load_yaml(*SECTIONS["run"], overlay.get("run"))
        self.manifold: ManifoldConfig = self._load_yaml(*SECTIONS["manifold"], overlay.get("manifold"))
        self.measure: MeasureConfig = self._load_yaml(*SECTIONS["measure"], overlay.get("measure"))
        self.solver: SolverConfig = self._load_yaml(*SECTIONS["solver"], overlay.get("solver"))
        self.probe: ProbeConfig = self._load_yaml(*SECTIONS["probe"], overlay.get("probe"))
        self.scenario: ScenarioConfig = self._load_yaml(*SECTIONS["scenario"], overlay.get("scenario"))
        self.log: LoggerConfig = self._load_yaml(*SECTIONS["logger"], overlay.get("logger"))

        self.run.normalize()
        self.validate()

    @property
    def sections(self) -> list:
        return [self.run, self.manifold, self.measure, self.solver, self.probe, self.scenario, self.log]

    def validate(self):
        for section in self.sections:
            if hasattr(section, "validate"):
                section.validate()

    @staticmethod
    def read_overlay(user_config: Path | str | dict | None) -> dict:
        if user_config is None:
            return {}
        if isinstance(user_config, dict):
            return user_config
        path = Path(user_config)
        if not path.is_file():
            raise ConfigError(f"Config file '{path}' does not exist.\n"
                              f"[Tip] Pass an existing YAML file with --config.")
        with open(path) as file:
            data = yaml.safe_load(file)
        if data is None:
            return {}
        if not isinstance(data, dict):
            raise ConfigError(f"Config file '{path}' must hold a mapping of sections.\n"
                              f"[Tip] Write sections like 'manifold:' at the top level.")
        return data

    @classmethod
    def _load_yaml(cls, yaml_file_name, config_cls, overrides: dict | None = None):
        yaml_path = cls.config_path / yaml_file_name
        with open(yaml_path) as file:
            data = yaml.safe_load(file) or {}
        if overrides:
            if not isinstance(overrides, dict):
                raise ConfigError(f"Section of {config_cls.__name__} must be a mapping, got {overrides!r}.")
            data.update(overrides)

        known = {item.name for item in fields(config_cls) if item.init}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Unknown keys for {config_cls.__name__}: {sorted(unknown)}.\n"
                              f"[Tip] Known keys are {', '.join(sorted(known))}.")
        return config_cls(**data)

    # Builders shared by the scenarios

    def build_manifold(self) -> ManifoldModel:
        return self.manifold.build()

    def build_measure(self, manifold: ManifoldModel) -> AtomMeasure:
        return self.measure.build(manifold, self.run.SEED)

    def build_solver_params(self) -> SolverParams:
        return self.solver.build(self.run.THREADS)

    def build_schedule(self) -> StepSchedule:
        return self.probe.build()

    def init_point(self, manifold: ManifoldModel) -> np.ndarray | None:
        """Descent start from solver INIT: plain coordinates, or a point written by ``point_to_json``."""
        init = self.solver.INIT
        if init is None:
            return None
        if not isinstance(init, dict):
            return manifold.point(init)
        try:
            tagged, point = point_from_json(init)
        except (InvalidInputError, KeyError) as error:
            raise config_error("solver", "INIT", f"unreadable tagged point {init}.",
                               "Write INIT as {manifold: {kind, dim}, coordinates: [...]}.") from error
        if manifold_to_json(tagged) != manifold_to_json(manifold):
            raise config_error("solver", "INIT", f"point lives on {tagged.tag}, the run uses {manifold.tag}.",
                               "Match the INIT manifold to the manifold section.")
        return point
