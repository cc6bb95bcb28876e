from src.algorithm.frechet.problem import (
    CutDecomposition, FrechetProblem, Gradient, cut_decomposition, cut_mass, fixed_point_residual,
    frechet_difference, frechet_differences, frechet_value, frechet_values, gradient, one_sided_derivative,
)
from src.algorithm.frechet.solver import (
    MeanResult, SolverParams, brute_force_mean, gradient_descent_mean, p_mean,
)

__all__ = [
    "CutDecomposition", "FrechetProblem", "Gradient", "cut_decomposition", "cut_mass",
    "fixed_point_residual", "frechet_difference", "frechet_differences", "frechet_value", "frechet_values", "gradient",
    "one_sided_derivative", "MeanResult", "SolverParams", "brute_force_mean", "gradient_descent_mean",
    "p_mean",
]
