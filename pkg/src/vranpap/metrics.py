"""Evaluation metrics for a solved (or failed) instance."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Union

from .exact import SolveOutcome
from .greedy import GreedyOutcome
from .model import ProblemInstance, Solution

Outcome = Union[SolveOutcome, GreedyOutcome]


@dataclass(frozen=True)
class MetricsRow:
    total_cost: float
    bbus_placed: int
    utilization: float
    wall_time: float
    latency_deviation: float
    feasible: bool

    def to_dict(self) -> dict:
        return asdict(self)


def utilization(instance: ProblemInstance, solution: Solution | None) -> float:
    """Assigned demand over the capacity of all placed servers (0 if none)."""
    if solution is None or not solution.placed:
        return 0.0
    capacity = math.fsum(instance.candidates[j].capacity for j in solution.placed)
    served = math.fsum(instance.sites[i].demand for i in solution.assignment)
    return served / capacity


def latency_deviation(instance: ProblemInstance, solution: Solution | None) -> float:
    """Mean signed gap between obtained and desired latency over all sites.

    Follows the instance's ``clamp_latency`` flag, so it always equals the
    latency part of the objective divided by the number of sites.
    """
    if solution is None or not solution.assignment:
        return 0.0
    excess = instance.latency_excess
    return math.fsum(float(excess[i, j]) for i, j in solution.assignment.items()) / len(solution.assignment)


def summarize(instance: ProblemInstance, outcome: Outcome | None, wall_time: float | None = None) -> MetricsRow:
    """Collect the reported quantities; failed runs give an all-zero row."""
    solution = outcome.solution if outcome is not None else None
    if wall_time is None:
        wall_time = outcome.wall_time if outcome is not None else 0.0
    if solution is None:
        return MetricsRow(0.0, 0, 0.0, wall_time, 0.0, False)
    return MetricsRow(
        total_cost=solution.cost_component,
        bbus_placed=len(solution.placed),
        utilization=utilization(instance, solution),
        wall_time=wall_time,
        latency_deviation=latency_deviation(instance, solution),
        feasible=True,
    )
