"""Woodbury-identity linear solves from simulated Hadamard and swap tests."""

from .circuits import CircuitSpec, Gate, uniform_preparer
from .estimator import (
    InnerProductEstimate,
    MitigationConfig,
    ShotPlan,
    estimate_inner_product,
    gamma,
    mem_correct,
    shot_plan,
    zne_extrapolate,
)
from .linalg import conjectured_condition, direct_solve, singular_values, woodbury_inverse
from .simulator import NoiseModel, exact_ancilla_statistic, sample
from .solver import (
    EstimationConfig,
    HermitianLCU,
    LowRankFactors,
    SolveReport,
    WoodburyProblem,
    expectation_hermitian,
    solve,
    solve_rank1_overlap,
    solve_rankk_overlap,
    solve_unitary_a_overlap,
)

__version__ = "0.1.0"

__all__ = [
    "CircuitSpec",
    "EstimationConfig",
    "Gate",
    "HermitianLCU",
    "InnerProductEstimate",
    "LowRankFactors",
    "MitigationConfig",
    "NoiseModel",
    "ShotPlan",
    "SolveReport",
    "WoodburyProblem",
    "conjectured_condition",
    "direct_solve",
    "estimate_inner_product",
    "exact_ancilla_statistic",
    "expectation_hermitian",
    "gamma",
    "mem_correct",
    "sample",
    "shot_plan",
    "singular_values",
    "solve",
    "solve_rank1_overlap",
    "solve_rankk_overlap",
    "solve_unitary_a_overlap",
    "uniform_preparer",
    "woodbury_inverse",
    "zne_extrapolate",
]
