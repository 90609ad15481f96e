"""Hybrid sub-QUBO solver with clustering-based variable grouping."""

from .qubo import (
    BinarySolution,
    IsingModel,
    QuboError,
    QuboInstance,
    SubQubo,
    delta_flip,
    delta_flip_pair,
    evaluate,
    extract_sub_qubo,
    merge_sub_solution,
    to_ising,
)
from .instances import WeightedGraph, gen_er, gen_regular, load_instance, maxcut_to_qubo, save_instance
from .grouping import (
    CorrelationMatrix,
    Grouping,
    SolutionPool,
    certainty_grouping,
    cluster_grouping,
    correlation_matrix,
    impact_grouping,
    random_grouping,
)
from .local_search import TabuConfig, greedy_descent, tabu_search
from .subsolver import QaoaConfig, exact_solve, qaoa_solve
from .driver import RunMetrics, SolveResult, SolverConfig, solve, solve_suite
from .bench import BenchRecord, ScalingFit, fit_scaling

__version__ = "0.1.0"
