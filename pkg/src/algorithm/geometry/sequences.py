import numpy as np
from scipy.stats import norm, qmc

GOLDEN_RATIO: float = (1 + 5 ** 0.5) / 2
GOLDEN_ANGLE: float = np.pi * (3 - 5 ** 0.5)


def golden_angles(count: int) -> np.ndarray:
    """Angles j * golden angle for j = 0..count-1, unreduced."""
    return np.arange(count, dtype=np.float64) * GOLDEN_ANGLE


def halton(count: int, dimensions: int, skip: int = 0) -> np.ndarray:
    """
    Unscrambled Halton points in [0, 1)^dimensions.
    The first point is the origin, so prefixes are stable across calls.

    :param count: Number of points
    :param dimensions: One prime base per dimension (2, 3, 5, ...)
    :param skip: Number of leading points to drop
    """
    engine = qmc.Halton(d=dimensions, scramble=False)
    if skip:
        engine.fast_forward(skip)
    return engine.random(count)


def van_der_corput(count: int) -> np.ndarray:
    return halton(count, 1)[:, 0]


def fibonacci_sphere(count: int) -> np.ndarray:
    """Fibonacci spiral lattice with ``count`` points on the unit 2-sphere (z as polar axis)."""
    index = np.arange(count, dtype=np.float64)
    z = 1 - (2 * index + 1) / count
    radius = np.sqrt(np.clip(1 - z * z, 0, None))
    phi = index * GOLDEN_ANGLE
    return np.column_stack((radius * np.cos(phi), radius * np.sin(phi), z))


def golden_spiral_sequence(count: int) -> np.ndarray:
    """
    Sequence version of the spiral: heights from the base-2 van der Corput sequence,
    longitudes from golden-angle steps. Term 0 is the north pole.
    """
    z = 1 - 2 * van_der_corput(count)
    radius = np.sqrt(np.clip(1 - z * z, 0, None))
    phi = golden_angles(count)
    return np.column_stack((radius * np.cos(phi), radius * np.sin(phi), z))


def gaussian_sphere_sequence(count: int, ambient_dim: int, skip: int = 0) -> np.ndarray:
    """Halton points pushed through the normal quantile and projected onto the unit sphere."""
    cube = halton(count, ambient_dim, skip=1 + skip)
    cube = np.clip(cube, 1e-12, 1 - 1e-12)
    gaussian = norm.ppf(cube)
    lengths = np.linalg.norm(gaussian, axis=1, keepdims=True)
    lengths[lengths == 0] = 1
    return gaussian / lengths


def unit_directions(count: int, dim: int) -> np.ndarray:
    """
    Deterministic unit directions in R^dim: the frame vectors with both signs first,
    then a quasi-random fill.
    """
    frame = np.concatenate((np.eye(dim), -np.eye(dim)))
    if count <= len(frame):
        return frame[:count]
    fill_count = count - len(frame)
    if dim == 1:
        return frame
    if dim == 2:
        angles = golden_angles(fill_count + 1)[1:]
        fill = np.column_stack((np.cos(angles), np.sin(angles)))
    else:
        fill = gaussian_sphere_sequence(fill_count, dim)
    return np.concatenate((frame, fill))
