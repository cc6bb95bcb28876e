from src.algorithm.probes.barrier import (
    BarrierCertificate, ProfileRow, barrier_certificate_search, barrier_divergence_profile,
    divergence_evidence, explicit_circle_barrier, nonlinear_differential_barrier,
)
from src.algorithm.probes.differentials import (
    directional_derivative, first_variation_differential, hessian_trace_estimate, is_critical_point,
    linearity_gap, semiconcavity_estimate, square_semiconcavity_bound, symmetrized_differential,
)
from src.algorithm.probes.fields import (
    Confidence, Extrapolation, ProbeReport, ScalarField, StepSchedule, distance_field, frechet_field,
)

__all__ = [
    "BarrierCertificate", "ProfileRow", "barrier_certificate_search", "barrier_divergence_profile",
    "divergence_evidence", "explicit_circle_barrier", "nonlinear_differential_barrier",
    "directional_derivative", "first_variation_differential", "hessian_trace_estimate",
    "is_critical_point", "linearity_gap", "semiconcavity_estimate", "square_semiconcavity_bound",
    "symmetrized_differential", "Confidence", "Extrapolation", "ProbeReport", "ScalarField",
    "StepSchedule", "distance_field", "frechet_field",
]
