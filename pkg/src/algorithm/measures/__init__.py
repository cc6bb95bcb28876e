from src.algorithm.measures.atom_measure import (
    AtomMeasure, dirac, dyadic_dirac_measure, make_measure, moment,
)
from src.algorithm.measures.sampler import SamplerKind, SamplerSpec, sample_measure

__all__ = [
    "AtomMeasure", "dirac", "dyadic_dirac_measure", "make_measure", "moment",
    "SamplerKind", "SamplerSpec", "sample_measure",
]
