"""Exhaustive enumeration for tiny instances; the referee for the solvers."""

from __future__ import annotations

import itertools
import time

import numpy as np

from .exact import SolveOutcome, SolveStatus
from .model import TOL, ProblemInstance, evaluate

MAX_SIZE = 8
_CHUNK = 1 << 16


class InstanceTooLarge(ValueError):
    pass


def enumeration_count(n_sites: int, n_candidates: int, budget: int) -> int:
    """Number of assignment maps :func:`enumerate_optimal` inspects."""
    from math import comb

    return sum(comb(n_candidates, k) * k**n_sites for k in range(budget + 1))


def _maps(n_sites: int, k: int):
    """All maps from ``n_sites`` sites into ``k`` slots, as index arrays, in chunks."""
    total = k**n_sites
    powers = k ** np.arange(n_sites - 1, -1, -1)
    for lo in range(0, total, _CHUNK):
        codes = np.arange(lo, min(total, lo + _CHUNK))
        yield (codes[:, None] // powers[None, :]) % k


def enumerate_optimal(instance: ProblemInstance) -> SolveOutcome:
    """Try every placement of at most ``budget`` servers and every assignment into it.

    Ties within ``TOL`` go to the lexicographically smallest placed set, then
    the smallest assignment vector.
    """
    n, m = instance.n_sites, instance.n_candidates
    if n > MAX_SIZE or m > MAX_SIZE:
        raise InstanceTooLarge(f"enumeration limited to {MAX_SIZE} sites and candidates, got {n}x{m}")
    start = time.perf_counter()
    demand = np.asarray(instance.demand)
    cap = np.asarray(instance.capacity)
    costs = np.asarray(instance.assignment_costs)
    open_cost = instance.alpha * np.asarray(instance.server_costs)
    rows = np.arange(n)

    # Collect the minimum objective first, then pick the smallest key among ties.
    found = []
    inspected = 0
    best = np.inf
    for k in range(1, instance.budget + 1):
        for subset in itertools.combinations(range(m), k):
            cols = np.array(subset)
            fixed = float(open_cost[cols].sum())
            for maps in _maps(n, k):
                inspected += len(maps)
                chosen = cols[maps]
                load = np.zeros((len(maps), k))
                for i in range(n):
                    load[np.arange(len(maps)), maps[:, i]] += demand[i]
                ok = np.all(load <= cap[cols][None, :] + TOL, axis=1)
                if not ok.any():
                    continue
                value = fixed + costs[rows[None, :], chosen].sum(axis=1)
                value = np.where(ok, value, np.inf)
                low = value.min()
                if low > best + TOL:
                    continue
                best = min(best, low)
                for r in np.flatnonzero(value <= best + TOL):
                    found.append((float(value[r]), subset, tuple(int(j) for j in chosen[r])))

    elapsed = time.perf_counter() - start
    if not found:
        return SolveOutcome(SolveStatus.INFEASIBLE, None, inspected, elapsed)

    solutions = [evaluate(instance, subset, assign) for _, subset, assign in found]
    low = min(s.objective for s in solutions)
    tied = [s for s in solutions if s.objective <= low + TOL]
    winner = min(tied, key=lambda s: s.sort_key())
    return SolveOutcome(SolveStatus.OPTIMAL, winner, inspected, elapsed, winner.objective)
