"""Krylov-space dynamics, spread complexity and entanglement/coherence bounds."""
from .tensor import (
    HermitianOperator,
    HilbertStructure,
    SchmidtData,
    StateVector,
    StructureError,
    ValidationError,
    eigendecompose,
    evolve,
    evolve_many,
    partial_trace,
    reduced_density,
    schmidt,
    tensor_product,
)
from .krylov import (
    AmplitudeTrajectory,
    KrylovBasis,
    KrylovMismatchError,
    amplitudes_full_space,
    amplitudes_tridiagonal,
    build_krylov,
    inverse_participation_ratio,
    spread_complexity,
    time_grid,
)
from .measures import (
    GeometricMeasureResult,
    geometric_measure_product,
    ggm,
    l1_coherence,
    m_producible_geometric_measure,
    pairwise_coherence,
    relative_entropy,
    shannon_entropy,
    von_neumann_entropy,
)
from .models import EnsembleSpec, random_gue, random_haar_state, spin_chain

__version__ = "0.1.0"

__all__ = [
    "HermitianOperator",
    "HilbertStructure",
    "SchmidtData",
    "StateVector",
    "StructureError",
    "ValidationError",
    "eigendecompose",
    "evolve",
    "evolve_many",
    "partial_trace",
    "reduced_density",
    "schmidt",
    "tensor_product",
    "AmplitudeTrajectory",
    "KrylovBasis",
    "KrylovMismatchError",
    "amplitudes_full_space",
    "amplitudes_tridiagonal",
    "build_krylov",
    "inverse_participation_ratio",
    "spread_complexity",
    "time_grid",
    "GeometricMeasureResult",
    "geometric_measure_product",
    "ggm",
    "l1_coherence",
    "m_producible_geometric_measure",
    "pairwise_coherence",
    "relative_entropy",
    "shannon_entropy",
    "von_neumann_entropy",
    "EnsembleSpec",
    "random_gue",
    "random_haar_state",
    "spin_chain",
]
