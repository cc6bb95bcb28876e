import warnings
from dataclasses import dataclass

import numpy as np

from src.algorithm.geometry.manifold import ManifoldModel
from src.utils.errors import InvalidInputError, invalid

WEIGHT_SUM_TOLERANCE: float = 1e-12


@dataclass(frozen=True, eq=False)
class AtomMeasure:
    """
    Finitely supported probability measure on a manifold.
    Build it with ``make_measure``; atoms are distinct and the weights sum to one.
    """
    manifold: ManifoldModel
    atoms: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.weights)

    def mass(self, mask: np.ndarray) -> float:
        return float(self.weights[mask].sum())

    def restrict(self, mask: np.ndarray, renormalize: bool = False) -> "AtomMeasure":
        """
        Sub-measure carried by the atoms selected by ``mask``.
        Without renormalization the result is a sub-probability measure (total mass <= 1).
        """
        atoms, weights = self.atoms[mask], self.weights[mask]
        if renormalize:
            if weights.sum() <= 0:
                raise invalid("Cannot renormalize a restriction with zero mass.",
                              "Check the mask selects at least one weighted atom.")
            weights = weights / weights.sum()
        return _frozen(self.manifold, atoms, weights)

    def atom_mass_at(self, q: np.ndarray, tol: float) -> float:
        return self.mass(self.manifold.distances(q, self.atoms) <= tol)


def _frozen(manifold: ManifoldModel, atoms: np.ndarray, weights: np.ndarray) -> AtomMeasure:
    atoms, weights = np.array(atoms), np.array(weights)
    atoms.setflags(write=False)
    weights.setflags(write=False)
    return AtomMeasure(manifold, atoms, weights)


def make_measure(manifold: ManifoldModel, atoms, weights=None) -> AtomMeasure:
    """
    Normalized, deduplicated measure from atoms and nonnegative weights.
    Exact duplicate atoms (after canonical reduction) are merged with summed weights, keeping the
    order of first occurrence. Zero-weight atoms are dropped.

    :param manifold: Manifold the atoms live on
    :param atoms: Atom coordinates, shape (n, ambient_dim) (or (n,) on the circle)
    :param weights: Nonnegative weights, uniform when omitted
    :return: AtomMeasure
    """
    if atoms is None or len(atoms) == 0:
        raise invalid("A measure needs at least one atom.", "Provide a non-empty atom list.")
    atoms = manifold.points(atoms)
    weights = np.ones(len(atoms)) if weights is None else np.asarray(weights, dtype=np.float64).ravel()

    if len(weights) != len(atoms):
        raise invalid(f"Got {len(atoms)} atoms but {len(weights)} weights.",
                      "Give exactly one weight per atom.")
    if not np.all(np.isfinite(weights)) or np.any(weights < 0):
        raise invalid("Weights must be finite and nonnegative.", "Remove negative weights.")
    if weights.sum() <= 0:
        raise invalid("Weights must have a positive sum.", "Give at least one atom positive weight.")

    unique, first_index, inverse = np.unique(atoms, axis=0, return_index=True, return_inverse=True)
    merged = np.bincount(inverse.reshape(-1), weights=weights, minlength=len(unique))
    order = np.argsort(first_index)
    atoms, weights = unique[order], merged[order]

    keep = weights > 0
    atoms, weights = atoms[keep], weights[keep]
    return _frozen(manifold, atoms, weights / weights.sum())


def dirac(manifold: ManifoldModel, x) -> AtomMeasure:
    return make_measure(manifold, [manifold.point(x)], [1.0])


def dyadic_dirac_measure(manifold: ManifoldModel, count: int) -> AtomMeasure:
    """
    Truncated dyadic Dirac series: atoms are the first ``count`` terms of the dense sequence,
    atom j (1-based) carries weight 2^-j / (1 - 2^-count).
    """
    if count < 1:
        raise invalid(f"Dyadic measure needs count >= 1, got {count}.", "Set measure DYADIC_J >= 1.")
    atoms = manifold.dense_sequence(count)
    weights = np.ldexp(1.0, -np.arange(1, count + 1))
    weights = weights / (1 - np.ldexp(1.0, -count))
    return _frozen(manifold, manifold.points(atoms), weights)


def moment(measure: AtomMeasure, q, p: float = 2.0) -> float:
    """Sum of w_i d(q, x_i)^p."""
    if p < 1:
        raise invalid(f"Moment exponent must be at least 1, got {p}.", "Use p >= 1.")
    q = measure.manifold.point(q)
    return float(measure.weights @ measure.manifold.distances(q, measure.atoms) ** p)


def check_weights(weights: np.ndarray, auto_fix: bool) -> np.ndarray:
    """
    Validate loaded weights. Unnormalized weights are rejected unless ``auto_fix`` is set,
    in which case they are normalized with a warning.
    """
    weights = np.asarray(weights, dtype=np.float64)
    if np.any(weights < 0):
        raise invalid("Loaded measure has negative weights.", "Fix the measure file.")
    total = weights.sum()
    if abs(total - 1) > WEIGHT_SUM_TOLERANCE:
        if not auto_fix:
            raise InvalidInputError(
                f"Loaded measure weights sum to {float(total)!r}, not 1.\n"
                f"[Tip] Normalize the weights or set measure AUTO_FIX to true."
            )
        warnings.warn(f"Measure weights summed to {float(total)!r}; normalized to 1.")
    return weights
