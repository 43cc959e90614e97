"""Cost-aware greedy placement and assignment (CAGA)."""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass

import numpy as np

from .model import ProblemInstance, Solution, evaluate

FAILURE_MESSAGE = "Placement and Assignment Failed"


class GreedyStatus(enum.Enum):
    SUCCESS = "success"
    FAILED = "failed"


@dataclass(frozen=True)
class GreedyOutcome:
    status: GreedyStatus
    solution: Solution | None
    wall_time: float
    unassigned: tuple[int, ...] = ()

    @property
    def message(self) -> str:
        return "ok" if self.status is GreedyStatus.SUCCESS else FAILURE_MESSAGE


def solve_caga(instance: ProblemInstance) -> GreedyOutcome:
    """Open the cheapest servers first and fill each with the cheapest links.

    Candidates are visited in increasing server cost.  For each one the
    still-unassigned sites are scanned in increasing link cost and taken
    while their demand is strictly below the remaining capacity.  A server
    counts as placed once it receives its first site; no new server is
    opened once ``budget`` are in use.  Ties go to the lower id.
    """
    start = time.perf_counter()
    n = instance.n_sites
    demand = instance.demand
    link_costs = instance.link_costs
    residual = np.array(instance.capacity, dtype=float)
    cand_ids = np.arange(instance.n_candidates)
    order = np.lexsort((cand_ids, instance.server_costs))
    # Every candidate's site ranking up front: stable sort keeps lower ids first.
    rankings = np.argsort(link_costs, axis=0, kind="stable")

    assignment = np.full(n, -1, dtype=np.int64)
    left = n
    placed: list[int] = []

    for j in order:
        if len(placed) >= instance.budget or left == 0:
            break
        ranked = rankings[:, j]
        ranked = ranked[assignment[ranked] < 0]
        ranked_demand = demand[ranked]

        # Sequential scan, vectorised: jump to the next site that still fits.
        remaining = residual[j]
        taken = []
        pos = 0
        while pos < ranked.size:
            fits = np.flatnonzero(ranked_demand[pos:] < remaining)
            if fits.size == 0:
                break
            k = pos + int(fits[0])
            taken.append(k)
            remaining -= ranked_demand[k]
            pos = k + 1
        if not taken:
            continue
        placed.append(int(j))
        residual[j] = remaining
        assignment[ranked[taken]] = j
        left -= len(taken)

    unassigned = np.flatnonzero(assignment < 0)
    if unassigned.size:
        return GreedyOutcome(
            GreedyStatus.FAILED, None, time.perf_counter() - start,
            tuple(int(i) for i in unassigned),
        )
    solution = evaluate(instance, placed, assignment.tolist())
    return GreedyOutcome(GreedyStatus.SUCCESS, solution, time.perf_counter() - start)
