from dataclasses import dataclass
from enum import Enum

import numpy as np

from src.algorithm.geometry.manifold import ManifoldModel
from src.algorithm.geometry.models import Sphere, TWO_PI
from src.algorithm.geometry.sequences import fibonacci_sphere, gaussian_sphere_sequence
from src.algorithm.measures.atom_measure import AtomMeasure, make_measure
from src.utils.errors import invalid


class SamplerKind(str, Enum):
    UNIFORM_GRID = "uniform_grid"
    EQUATOR = "equator"
    WRAPPED_GAUSSIAN = "wrapped_gaussian"


@dataclass(frozen=True)
class SamplerSpec:
    kind: SamplerKind
    seed: int
    count: int
    center: tuple[float, ...] | None = None
    sigma: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "kind", SamplerKind(self.kind))
        if self.count < 1:
            raise invalid(f"Sampler count must be at least 1, got {self.count}.",
                          "Set measure COUNT >= 1.")
        if self.sigma <= 0:
            raise invalid(f"Sampler sigma must be positive, got {self.sigma}.",
                          "Set measure SIGMA > 0.")
        if self.seed is None:
            raise invalid("Sampler-based measures need a seed.", "Set run SEED or pass --seed.")


def sample_measure(spec: SamplerSpec, manifold: ManifoldModel) -> AtomMeasure:
    """
    Empirical measure with equal weights on ``spec.count`` sampled atoms.
    Identical specs give identical atoms.
    """
    rng = np.random.default_rng(spec.seed)
    if spec.kind is SamplerKind.UNIFORM_GRID:
        atoms = _uniform_grid(manifold, spec.count)
    elif spec.kind is SamplerKind.EQUATOR:
        atoms = _equator(manifold, spec.count, rng)
    else:
        atoms = _wrapped_gaussian(manifold, spec, rng)
    return make_measure(manifold, atoms)


def _uniform_grid(manifold: ManifoldModel, count: int) -> np.ndarray:
    if isinstance(manifold, Sphere) and manifold.dim == 2:
        return fibonacci_sphere(count)
    if isinstance(manifold, Sphere) and manifold.dim > 2:
        return gaussian_sphere_sequence(count, manifold.ambient_dim)
    if manifold.dim == 1:
        return manifold.grid(max(count, 2)).points[:count]
    per_axis = max(int(np.ceil(count ** (1 / manifold.dim))), 2)
    return manifold.grid(per_axis).points


def _equator(manifold: ManifoldModel, count: int, rng: np.random.Generator) -> np.ndarray:
    """
    Stratified equator sample: equally spaced longitudes with one random phase on S^2,
    a normalized Gaussian sample of the great subsphere otherwise. Last coordinate is exactly 0.
    """
    if not isinstance(manifold, Sphere) or manifold.dim < 2:
        raise invalid(f"Equator sampling is not defined on {manifold.tag}.",
                      "Use the equator sampler on Sphere(d) with d >= 2.")
    atoms = np.zeros((count, manifold.ambient_dim))
    if manifold.dim == 2:
        longitudes = rng.uniform(0, TWO_PI / count) + np.arange(count) * TWO_PI / count
        atoms[:, 0], atoms[:, 1] = np.cos(longitudes), np.sin(longitudes)
    else:
        gaussian = rng.standard_normal((count, manifold.dim))
        atoms[:, :-1] = gaussian / np.linalg.norm(gaussian, axis=1, keepdims=True)
    return atoms


def default_center(manifold: ManifoldModel) -> np.ndarray:
    """Origin of the chart: angle 0, torus origin, or the last basis vector on spheres."""
    if isinstance(manifold, Sphere):
        return np.eye(manifold.ambient_dim)[-1]
    return np.zeros(manifold.ambient_dim)


def _wrapped_gaussian(manifold: ManifoldModel, spec: SamplerSpec,
                      rng: np.random.Generator) -> np.ndarray:
    center = manifold.point(default_center(manifold) if spec.center is None else spec.center)
    components = spec.sigma * rng.standard_normal((spec.count, manifold.dim))
    if isinstance(manifold, Sphere):
        # Redraw tangent vectors that reach past the antipode
        rejected = np.linalg.norm(components, axis=1) > np.pi
        while rejected.any():
            components[rejected] = spec.sigma * rng.standard_normal((int(rejected.sum()), manifold.dim))
            rejected = np.linalg.norm(components, axis=1) > np.pi
    return manifold.exp_many(center, components)
