from itertools import product

import numpy as np

from src.algorithm.geometry.manifold import DEFAULT_CUT_TOLERANCE, LogCandidates, ManifoldModel
from src.algorithm.geometry.sequences import (
    fibonacci_sphere, gaussian_sphere_sequence, golden_angles, golden_spiral_sequence, halton,
)
from src.utils.errors import invalid

TWO_PI: float = 2 * np.pi


def wrap_difference(delta: np.ndarray, periods: np.ndarray) -> np.ndarray:
    """Per-axis representative of a coordinate difference in (-P/2, P/2]."""
    half = periods / 2
    wrapped = half - np.mod(half - delta, periods)
    return np.where(wrapped <= -half, half, wrapped) + 0.0


class _FlatQuotient(ManifoldModel):
    """Flat quotient R^d / (P_1 Z x ... x P_d Z). Points are coordinate vectors."""

    def __init__(self, dim: int, periods):
        if dim < 1:
            raise invalid(f"Manifold dimension must be at least 1, got {dim}.",
                          "Set manifold DIM >= 1.")
        periods = np.broadcast_to(np.asarray(periods, dtype=np.float64), (dim,)).copy()
        if np.any(periods <= 0) or not np.all(np.isfinite(periods)):
            raise invalid(f"Torus periods must be positive and finite, got {periods.tolist()}.",
                          "Set manifold PERIODS to positive lengths (default 2*pi).")
        periods.setflags(write=False)
        self.dim: int = dim
        self.ambient_dim: int = dim
        self.periods: np.ndarray = periods
        # Lexicographic lattice offsets, used to enumerate lifts near a wrapped difference
        self._offsets: np.ndarray = np.array(list(product((-1, 0, 1), repeat=dim)), dtype=np.float64)

    @property
    def injectivity_radius(self) -> float:
        return float(self.periods.min() / 2)

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.periods) / 2)

    @property
    def signature(self) -> tuple:
        return self.kind, self.dim, tuple(self.periods.tolist())

    def wrapped(self, q: np.ndarray, X: np.ndarray) -> np.ndarray:
        return wrap_difference(X - q, self.periods)

    def distances(self, q: np.ndarray, X: np.ndarray) -> np.ndarray:
        return np.linalg.norm(self.wrapped(q, X), axis=-1)

    def _pairwise(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        return np.linalg.norm(wrap_difference(A[:, None, :] - B[None, :, :], self.periods), axis=-1)

    def tangent_frame(self, q: np.ndarray) -> np.ndarray:
        return np.eye(self.dim)

    def exp_many(self, q: np.ndarray, V: np.ndarray) -> np.ndarray:
        return self.canonical(q + V)

    def log_candidates(self, q: np.ndarray, X: np.ndarray,
                       tol: float = DEFAULT_CUT_TOLERANCE) -> LogCandidates:
        delta = self.wrapped(q, X)
        distances = np.linalg.norm(delta, axis=1)
        candidates = delta[:, None, :] + self._offsets[None, :, :] * self.periods
        lengths = np.linalg.norm(candidates, axis=2)
        mask = lengths <= distances[:, None] + tol
        return LogCandidates(candidates, mask, np.zeros(len(X), dtype=bool), distances)

    def cut_locus_distances(self, q: np.ndarray, X: np.ndarray) -> np.ndarray:
        slack = self.periods / 2 - np.abs(self.wrapped(q, X))
        return np.clip(slack.min(axis=-1), 0, None)

    def cut_points(self, x: np.ndarray, count: int = 1) -> np.ndarray:
        """
        Points of the cut locus of x on the faces of the cell centered at x.
        Point k lies on the face of axis k mod dim, away from edges of lower dimension.
        """
        if self.dim == 1:
            return self.canonical(x + self.periods / 2)[None, :]
        shifts = (halton(count, self.dim, skip=1) - 0.5) * 0.8 * self.periods
        shifts[0] = 0
        for k in range(count):
            axis = k % self.dim
            shifts[k, axis] = self.periods[axis] / 2
        return self.canonical(x + shifts)

    def grid_size(self, resolution: int) -> int:
        return resolution ** self.dim

    def _grid_points(self, resolution: int) -> tuple[np.ndarray, float]:
        axes = [np.arange(resolution) * period / resolution for period in self.periods]
        mesh = np.meshgrid(*axes, indexing="ij")
        lattice = np.stack([axis.ravel() for axis in mesh], axis=1)
        radius = float(np.linalg.norm(self.periods / (2 * resolution)))
        return self.canonical(lattice), radius

    def kd_coordinates(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray | None]:
        return points, self.periods

    def covering_radius(self, points: np.ndarray, reference: np.ndarray) -> float:
        return self._kd_covering_radius(points, reference)


class FlatTorus(_FlatQuotient):
    """Flat torus with coordinates reduced to [0, period) per axis."""
    kind = "flat_torus"

    def __init__(self, dim: int = 2, periods=TWO_PI):
        super().__init__(dim, periods)

    def canonical(self, coordinates: np.ndarray) -> np.ndarray:
        reduced = np.mod(coordinates, self.periods)
        return np.where(reduced >= self.periods, 0.0, reduced) + 0.0

    def dense_sequence(self, count: int) -> np.ndarray:
        return self.canonical(halton(count, self.dim) * self.periods)

    def __repr__(self) -> str:
        return f"FlatTorus(dim={self.dim}, periods={self.periods.tolist()})"


class Circle(_FlatQuotient):
    """Unit circle, points are angles in (-pi, pi]."""
    kind = "circle"

    def __init__(self):
        super().__init__(1, TWO_PI)

    def canonical(self, coordinates: np.ndarray) -> np.ndarray:
        angle = np.pi - np.mod(np.pi - coordinates, TWO_PI)
        return np.where(angle <= -np.pi, np.pi, angle) + 0.0

    def antipode(self, q: np.ndarray) -> np.ndarray:
        return self.canonical(q + np.pi)

    def dense_sequence(self, count: int) -> np.ndarray:
        return self.canonical(golden_angles(count))[:, None]

    def kd_coordinates(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray | None]:
        shifted = np.mod(points + np.pi, TWO_PI)
        return np.where(shifted >= TWO_PI, 0.0, shifted), self.periods

    def __repr__(self) -> str:
        return "Circle()"


class Sphere(ManifoldModel):
    """Unit sphere S^d in R^(d+1)."""
    kind = "sphere"

    def __init__(self, dim: int = 2):
        if dim < 1:
            raise invalid(f"Sphere dimension must be at least 1, got {dim}.",
                          "Set manifold DIM >= 1.")
        self.dim: int = dim
        self.ambient_dim: int = dim + 1

    @property
    def injectivity_radius(self) -> float:
        return float(np.pi)

    @property
    def diameter(self) -> float:
        return float(np.pi)

    def canonical(self, coordinates: np.ndarray) -> np.ndarray:
        lengths = np.linalg.norm(coordinates, axis=-1, keepdims=True)
        if np.any(lengths == 0) or not np.all(np.isfinite(lengths)):
            raise invalid("Sphere points must be finite nonzero vectors.",
                          "Pass unit vectors (they are renormalized on construction).")
        return coordinates / lengths + 0.0

    def antipode(self, q: np.ndarray) -> np.ndarray:
        return -q + 0.0

    def distances(self, q: np.ndarray, X: np.ndarray) -> np.ndarray:
        # Equal to arccos(<q, x>) but accurate near 0 and pi
        return 2 * np.arctan2(np.linalg.norm(X - q, axis=-1), np.linalg.norm(X + q, axis=-1))

    def _pairwise(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        difference = np.linalg.norm(A[:, None, :] - B[None, :, :], axis=-1)
        total = np.linalg.norm(A[:, None, :] + B[None, :, :], axis=-1)
        return 2 * np.arctan2(difference, total)

    def tangent_frame(self, q: np.ndarray) -> np.ndarray:
        if self.dim == 1:
            return np.array([[-q[1]], [q[0]]])
        pivot = int(np.argmax(np.abs(q)))
        basis = np.eye(self.ambient_dim)[:, [j for j in range(self.ambient_dim) if j != pivot]]
        orthonormal, _ = np.linalg.qr(np.column_stack((q, basis)))
        return orthonormal[:, 1:]

    def exp_many(self, q: np.ndarray, V: np.ndarray) -> np.ndarray:
        W = V @ self.tangent_frame(q).T
        lengths = np.linalg.norm(W, axis=1)
        safe = np.where(lengths > 0, lengths, 1.0)
        sinc = np.where(lengths > 0, np.sin(lengths) / safe, 1.0)
        points = np.cos(lengths)[:, None] * q + sinc[:, None] * W
        return self.canonical(points)

    def log_candidates(self, q: np.ndarray, X: np.ndarray,
                       tol: float = DEFAULT_CUT_TOLERANCE) -> LogCandidates:
        distances = self.distances(q, X)
        components = (X - np.outer(X @ q, q)) @ self.tangent_frame(q)
        lengths = np.linalg.norm(components, axis=1)
        scale = np.where(lengths > 0, distances / np.where(lengths > 0, lengths, 1.0), 0.0)

        candidates = np.zeros((len(X), 2, self.dim))
        candidates[:, 0] = components * scale[:, None]
        mask = np.zeros((len(X), 2), dtype=bool)
        mask[:, 0] = True
        antipodal = distances >= np.pi - tol
        continuum = np.zeros(len(X), dtype=bool)

        if self.dim == 1:
            candidates[antipodal, 0, 0] = -distances[antipodal]
            candidates[antipodal, 1, 0] = distances[antipodal]
            mask[antipodal, 1] = True
        else:
            continuum = antipodal
            candidates[antipodal, 0] = 0
            candidates[antipodal, 0, 0] = -distances[antipodal]
        return LogCandidates(candidates, mask, continuum, distances)

    def cut_locus_distances(self, q: np.ndarray, X: np.ndarray) -> np.ndarray:
        return np.clip(np.pi - self.distances(q, X), 0, None)

    def cut_points(self, x: np.ndarray, count: int = 1) -> np.ndarray:
        return self.antipode(x)[None, :]

    def grid_size(self, resolution: int) -> int:
        return resolution if self.dim == 1 else resolution ** self.dim

    def _grid_points(self, resolution: int) -> tuple[np.ndarray, float]:
        if self.dim == 1:
            angles = np.arange(resolution) * TWO_PI / resolution
            return np.column_stack((np.cos(angles), np.sin(angles))), float(np.pi / resolution)
        count = self.grid_size(resolution)
        if self.dim == 2:
            points = fibonacci_sphere(count)
            reference = fibonacci_sphere(max(4 * count, 4000))
        else:
            points = gaussian_sphere_sequence(count, self.ambient_dim)
            reference = gaussian_sphere_sequence(4 * count, self.ambient_dim, skip=count)
        return points, self.covering_radius(points, reference)

    def dense_sequence(self, count: int) -> np.ndarray:
        if self.dim == 1:
            angles = golden_angles(count)
            return np.column_stack((np.cos(angles), np.sin(angles)))
        if self.dim == 2:
            return golden_spiral_sequence(count)
        return gaussian_sphere_sequence(count, self.ambient_dim)

    def covering_radius(self, points: np.ndarray, reference: np.ndarray) -> float:
        chord = self._kd_covering_radius(points, reference)
        return float(2 * np.arcsin(min(chord / 2, 1.0)))

    def __repr__(self) -> str:
        return f"Sphere(dim={self.dim})"


def make_manifold(kind: str, dim: int = 1, periods=None) -> ManifoldModel:
    """
    Build a manifold model from its configuration values.

    :param kind: ``circle``, ``sphere`` or ``flat_torus``
    :param dim: Intrinsic dimension (ignored for the circle)
    :param periods: Per-axis periods of the flat torus, 2*pi by default
    """
    kind = kind.lower().replace("-", "_")
    if kind == "circle":
        return Circle()
    if kind == "sphere":
        return Sphere(dim)
    if kind in ("flat_torus", "torus"):
        return FlatTorus(dim, TWO_PI if periods is None else periods)
    raise invalid(f"Unknown manifold kind '{kind}'.",
                  "Use one of: circle, sphere, flat_torus.")
