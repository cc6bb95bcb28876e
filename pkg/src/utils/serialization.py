from enum import Enum

import numpy as np

from src.algorithm.geometry.manifold import ManifoldModel
from src.algorithm.geometry.models import make_manifold
from src.algorithm.measures.atom_measure import AtomMeasure, check_weights, make_measure
from src.utils.errors import invalid


def json_serializer(obj):
    """Handle non-JSON types automatically"""
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Enum):
        return obj.value
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    if hasattr(obj, "__dict__"):
        return vars(obj)
    raise TypeError(f"Object of type {type(obj)} is not JSON serializable.")


def manifold_to_json(manifold: ManifoldModel) -> dict:
    data = {"kind": manifold.kind, "dim": manifold.dim}
    if manifold.kind == "flat_torus":
        data["periods"] = manifold.periods.tolist()
    return data


def manifold_from_json(data: dict) -> ManifoldModel:
    try:
        return make_manifold(data["kind"], data.get("dim", 1), data.get("periods"))
    except KeyError as error:
        raise invalid(f"Manifold description {data} misses the key {error}.",
                      "Write manifolds as {kind, dim[, periods]}.") from error


def point_to_json(manifold: ManifoldModel, q) -> dict:
    """Point in canonical coordinates with its manifold tag."""
    return {"manifold": manifold_to_json(manifold), "coordinates": manifold.point(q).tolist()}


def point_from_json(data: dict) -> tuple[ManifoldModel, np.ndarray]:
    manifold = manifold_from_json(data["manifold"])
    return manifold, manifold.point(data["coordinates"])


def measure_to_json(measure: AtomMeasure) -> dict:
    return {
        "manifold": manifold_to_json(measure.manifold),
        "atoms": measure.atoms.tolist(),
        "weights": measure.weights.tolist(),
    }


def measure_from_json(data: dict, auto_fix: bool = False) -> AtomMeasure:
    """
    Load a measure written by ``measure_to_json``.
    Weights must be normalized unless ``auto_fix`` is set (normalized with a warning).
    """
    manifold = manifold_from_json(data["manifold"])
    weights = check_weights(data["weights"], auto_fix)
    return make_measure(manifold, data["atoms"], weights)


def mean_result_to_dict(result, manifold: ManifoldModel) -> dict:
    """MeanResult as JSON, with the mean written as a tagged point of ``manifold``."""
    return {
        "mean": point_to_json(manifold, result.mean),
        "value": result.value,
        "grad_norm": result.grad_norm,
        "iterations": result.iterations,
        "converged": result.converged,
        "cut_mass_profile": [{"epsilon": epsilon, "mass": mass} for epsilon, mass in result.cut_mass_profile],
        "exact_cut_mass": result.exact_cut_mass,
        "atom_at_mean_mass": result.atom_at_mean_mass,
        "atom_margin": result.atom_margin,
        "multivalued": result.multivalued,
        "le_barden": result.le_barden,
        "near_ties": result.near_ties,
        "grid_point": result.grid_point,
        "grid_value": result.grid_value,
        "covering_radius": result.covering_radius,
        "trace": result.trace,
    }
