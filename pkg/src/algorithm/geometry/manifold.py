from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from src.utils.errors import InvalidInputError, ResourceError, invalid

DEFAULT_CUT_TOLERANCE: float = 1e-7
MAX_GRID_POINTS: int = 2_000_000
PAIRWISE_CHUNK: int = 2048


@dataclass(frozen=True, eq=False)
class TangentVector:
    """
    Tangent vector at ``base`` written in the fixed orthonormal frame of the manifold at that point.
    """
    base: np.ndarray
    components: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.components))

    @property
    def dim(self) -> int:
        return len(self.components)

    def scaled(self, factor: float) -> "TangentVector":
        return TangentVector(self.base, self.components * factor)

    def unit(self) -> "TangentVector":
        length = self.norm
        if length == 0:
            raise invalid("Cannot normalize the zero tangent vector.",
                          "Pick a nonzero direction.")
        return self.scaled(1 / length)

    def __neg__(self) -> "TangentVector":
        return self.scaled(-1.0)


@dataclass(frozen=True, eq=False)
class LogSet:
    """Minimizing preimages of one point. ``continuum`` marks a sampled sphere of preimages."""
    vectors: tuple[TangentVector, ...]
    continuum: bool = False

    def __len__(self) -> int:
        return len(self.vectors)

    def __iter__(self):
        return iter(self.vectors)

    def __getitem__(self, index: int) -> TangentVector:
        return self.vectors[index]

    @property
    def multivalued(self) -> bool:
        return self.continuum or len(self.vectors) >= 2


@dataclass(frozen=True, eq=False)
class LogCandidates:
    """
    Minimizing preimages of many atoms at one base point, stored as a padded array.

    ``candidates[i, k]`` are tangent components of candidate k of atom i; ``mask[i, k]`` marks the
    minimizing ones. Candidates of a row are in lexicographic order, so the first masked entry is the
    deterministic tie-break. Rows with ``continuum`` set have a full sphere of preimages of norm
    ``distances[i]``; their first candidate is ``-d e_0``.
    """
    candidates: np.ndarray
    mask: np.ndarray
    continuum: np.ndarray
    distances: np.ndarray

    @property
    def multiplicity(self) -> np.ndarray:
        return self.mask.sum(axis=1)

    @property
    def multivalued(self) -> np.ndarray:
        return (self.multiplicity >= 2) | self.continuum

    def first(self) -> np.ndarray:
        index = np.argmax(self.mask, axis=1)
        return self.candidates[np.arange(len(index)), index]

    def random_choice(self, rng: np.random.Generator) -> np.ndarray:
        """Uniformly chosen preimage per atom; continuum rows get a uniform direction."""
        chosen = self.first().copy()
        for row in np.flatnonzero(self.multivalued):
            if self.continuum[row]:
                direction = rng.standard_normal(self.candidates.shape[2])
                chosen[row] = self.distances[row] * direction / np.linalg.norm(direction)
            else:
                options = np.flatnonzero(self.mask[row])
                chosen[row] = self.candidates[row, rng.choice(options)]
        return chosen

    def support(self, v: np.ndarray) -> np.ndarray:
        """sup <v, w> over the minimizing preimages w of each atom."""
        dots = self.candidates @ v
        dots = np.where(self.mask, dots, -np.inf)
        sup = dots.max(axis=1)
        return np.where(self.continuum, self.distances * np.linalg.norm(v), sup)


@dataclass(frozen=True, eq=False)
class Grid:
    points: np.ndarray
    covering_radius: float

    def __len__(self) -> int:
        return len(self.points)


class ManifoldModel(ABC):
    """
    Closed-form Riemannian manifold.

    Points are 1-D numpy arrays in the canonical coordinates of the model. Every operation is pure;
    vectorized forms take an ``(n, ambient_dim)`` array of points.
    """
    kind: str
    dim: int
    ambient_dim: int

    # -- canonical form ------------------------------------------------------------------------

    @abstractmethod
    def canonical(self, coordinates: np.ndarray) -> np.ndarray:
        """Reduce coordinates of shape (..., ambient_dim) to the canonical fundamental domain."""

    def point(self, coordinates) -> np.ndarray:
        coordinates = np.atleast_1d(np.asarray(coordinates, dtype=np.float64))
        self._check_shape(coordinates)
        point = self.canonical(coordinates)
        point.setflags(write=False)
        return point

    def points(self, coordinates) -> np.ndarray:
        coordinates = np.asarray(coordinates, dtype=np.float64)
        if coordinates.ndim == 1 and self.ambient_dim == 1:
            coordinates = coordinates[:, None]
        if coordinates.ndim != 2 or coordinates.shape[1] != self.ambient_dim:
            raise invalid(
                f"Expected an array of shape (n, {self.ambient_dim}) for {self.tag}, "
                f"got {coordinates.shape}.",
                "Points of this manifold have one coordinate per ambient axis."
            )
        return self.canonical(coordinates)

    def _check_shape(self, point: np.ndarray):
        if point.shape != (self.ambient_dim,):
            raise invalid(
                f"Point of shape {point.shape} does not belong to {self.tag} "
                f"(expected ({self.ambient_dim},)).",
                "Check that all points and atoms are built on the same manifold."
            )

    @property
    def tag(self) -> str:
        return self.kind if self.kind == "circle" else f"{self.kind}({self.dim})"

    # -- metric data ---------------------------------------------------------------------------

    @property
    @abstractmethod
    def injectivity_radius(self) -> float:
        ...

    @property
    @abstractmethod
    def diameter(self) -> float:
        ...

    @abstractmethod
    def distances(self, q: np.ndarray, X: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def _pairwise(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def tangent_frame(self, q: np.ndarray) -> np.ndarray:
        """Orthonormal frame at q as an (ambient_dim, dim) matrix."""

    @abstractmethod
    def exp_many(self, q: np.ndarray, V: np.ndarray) -> np.ndarray:
        """exp_q applied to each row of the (n, dim) component array V."""

    @abstractmethod
    def log_candidates(self, q: np.ndarray, X: np.ndarray,
                       tol: float = DEFAULT_CUT_TOLERANCE) -> LogCandidates:
        ...

    @abstractmethod
    def cut_locus_distances(self, q: np.ndarray, X: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def cut_points(self, x: np.ndarray, count: int = 1) -> np.ndarray:
        """Sample of ``count`` points of the cut locus of x."""

    @abstractmethod
    def _grid_points(self, resolution: int) -> tuple[np.ndarray, float]:
        ...

    @abstractmethod
    def dense_sequence(self, count: int) -> np.ndarray:
        ...

    @abstractmethod
    def covering_radius(self, points: np.ndarray, reference: np.ndarray) -> float:
        ...

    # -- single-point operations ----------------------------------------------------------------

    def distance(self, q, x) -> float:
        q, x = self.point(q), self.point(x)
        return float(self.distances(q, x[None, :])[0])

    def pairwise_distances(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        out = np.empty((len(A), len(B)))
        for start in range(0, len(A), PAIRWISE_CHUNK):
            out[start:start + PAIRWISE_CHUNK] = self._pairwise(A[start:start + PAIRWISE_CHUNK], B)
        return out

    def tangent(self, q, components) -> TangentVector:
        q = self.point(q)
        components = np.atleast_1d(np.asarray(components, dtype=np.float64))
        if components.shape != (self.dim,):
            raise invalid(
                f"Tangent components of shape {components.shape} do not fit {self.tag} "
                f"(expected ({self.dim},)).",
                "Tangent vectors are written in the orthonormal frame at their base point."
            )
        return TangentVector(q, components)

    def embed(self, v: TangentVector) -> np.ndarray:
        """Tangent vector as an ambient vector."""
        return self.tangent_frame(v.base) @ v.components

    def exp_map(self, q, v: TangentVector) -> np.ndarray:
        q = self.point(q)
        if self.distances(q, v.base[None, :])[0] > 1e-12:
            raise invalid("Tangent vector is not based at the point of the exponential map.",
                          "Build the vector with manifold.tangent(q, components).")
        point = self.exp_many(q, v.components[None, :])[0]
        point.setflags(write=False)
        return point

    def log_set(self, q, x, tol: float = DEFAULT_CUT_TOLERANCE) -> LogSet:
        if tol < 0:
            raise InvalidInputError("Cut-locus tolerance must be nonnegative.")
        q, x = self.point(q), self.point(x)
        found = self.log_candidates(q, x[None, :], tol)
        if found.continuum[0]:
            return LogSet(self._continuum_sample(q, found.distances[0]), continuum=True)
        vectors = tuple(TangentVector(q, components)
                        for components in found.candidates[0][found.mask[0]])
        return LogSet(vectors)

    def _continuum_sample(self, q: np.ndarray, d: float) -> tuple[TangentVector, ...]:
        frame = np.concatenate((-np.eye(self.dim), np.eye(self.dim))) * d
        order = np.lexsort(frame.T[::-1])
        return tuple(TangentVector(q, frame[i]) for i in order)

    def cut_locus_distance(self, q, x) -> float:
        q, x = self.point(q), self.point(x)
        return float(self.cut_locus_distances(q, x[None, :])[0])

    def in_cut_locus_plus(self, q, x, tol: float = DEFAULT_CUT_TOLERANCE) -> bool:
        if tol <= 0:
            raise InvalidInputError("Cut-locus tolerance must be positive.")
        q, x = self.point(q), self.point(x)
        return bool(self.log_candidates(q, x[None, :], tol).multivalued[0])

    def grid(self, resolution: int) -> Grid:
        if resolution < 2:
            raise invalid(f"Grid resolution must be at least 2, got {resolution}.",
                          "Use solver ORACLE_RESOLUTION >= 2.")
        size = self.grid_size(resolution)
        if size > MAX_GRID_POINTS:
            raise ResourceError(
                f"Grid with resolution {resolution} on {self.tag} has {size} points "
                f"(limit {MAX_GRID_POINTS}).\n"
                f"[Tip] Lower the oracle resolution."
            )
        points, radius = self._grid_points(resolution)
        return Grid(points, radius)

    def grid_size(self, resolution: int) -> int:
        return resolution ** self.dim

    def kd_coordinates(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray | None]:
        """Coordinates and periodic box in which Euclidean k-d tree distances match the model."""
        return points, None

    def _kd_covering_radius(self, points: np.ndarray, reference: np.ndarray) -> float:
        coordinates, box = self.kd_coordinates(points)
        tree = cKDTree(coordinates, boxsize=box)
        gaps, _ = tree.query(self.kd_coordinates(reference)[0], k=1)
        return float(np.max(gaps))

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}({self.tag})"

    def __eq__(self, other) -> bool:
        return isinstance(other, ManifoldModel) and self.signature == other.signature

    def __hash__(self) -> int:
        return hash(self.signature)

    @property
    def signature(self) -> tuple:
        return self.kind, self.dim
