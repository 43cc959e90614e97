"""Placement of baseband servers and assignment of radio sites in virtualized RANs."""

from .exact import SolveLimits, SolveOutcome, SolveStatus, solve_exact
from .greedy import GreedyOutcome, GreedyStatus, solve_caga
from .model import (
    BbuCandidate,
    FeasibilityReport,
    FronthaulParams,
    ProblemInstance,
    RrhSite,
    Solution,
    check_feasibility,
    evaluate,
    link_bandwidth,
    link_cost,
    objective,
    server_cost,
)
from .oracle import enumerate_optimal
from .topology import GeneratorConfig, RanGraph, derive_instance, generate_instance, generate_ran, shortest_paths

__all__ = [
    "BbuCandidate", "FeasibilityReport", "FronthaulParams", "GeneratorConfig", "GreedyOutcome",
    "GreedyStatus", "ProblemInstance", "RanGraph", "RrhSite", "Solution", "SolveLimits",
    "SolveOutcome", "SolveStatus", "check_feasibility", "derive_instance", "enumerate_optimal",
    "evaluate", "generate_instance", "generate_ran", "link_bandwidth", "link_cost", "objective",
    "server_cost", "shortest_paths", "solve_caga", "solve_exact",
]
