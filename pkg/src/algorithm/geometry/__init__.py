from src.algorithm.geometry.manifold import (
    DEFAULT_CUT_TOLERANCE, Grid, LogCandidates, LogSet, ManifoldModel, TangentVector,
)
from src.algorithm.geometry.models import Circle, FlatTorus, Sphere, make_manifold

__all__ = [
    "DEFAULT_CUT_TOLERANCE", "Grid", "LogCandidates", "LogSet", "ManifoldModel", "TangentVector",
    "Circle", "FlatTorus", "Sphere", "make_manifold",
]
