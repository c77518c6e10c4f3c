"""Wasserstein Probability Flow: penalised maximum-likelihood estimation of drifting distributions."""

from .kernels import BACKEND
from .metric import DistanceMatrix, InputError, Metric, distance, pairwise_distances
from .model import (FlowProblem, FlowSolution, ObservationSeries, PathDecomposition,
                    WeightedEmpirical, build_problem, check_feasible, objective)
from .solver import (ConvergenceError, InvariantViolation, SolverOptions, best_path,
                     decompose_flow, kkt_gap, restricted_solve, solve)

__all__ = [
    "BACKEND", "ConvergenceError", "DistanceMatrix", "FlowProblem", "FlowSolution",
    "InputError", "InvariantViolation", "Metric", "ObservationSeries", "PathDecomposition",
    "SolverOptions", "WeightedEmpirical", "best_path", "build_problem", "check_feasible",
    "decompose_flow", "distance", "kkt_gap", "objective", "pairwise_distances",
    "restricted_solve", "solve",
]
